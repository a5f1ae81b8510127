//! `cfs`: generation, verification suites and report emission.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage error, 3 I/O or parse
//! error.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cfs_core::hoelder::{boundedness_case, degenerate_case, lagrangian_exponent};
use cfs_core::io::{parse_json, FitSummaryJson, IterationRow, MeasureJson, OperatorJson, PairRow, ScanRow};
use cfs_core::measure::{causal_action, local_trace_check, minimize_action, MinimizeOptions};
use cfs_core::random::generate_operators;
use cfs_core::verify::{default_steps, run_suite, Suite, VerifyOptions};
use cfs_core::{
    hoelder_scan_boundedness, hoelder_scan_lagrangian, lagrangian, spectral_weight, CfsError, Config64, Matrix64,
    Operator64, Tolerances,
};

use output::{Failure, Output};

#[derive(Parser, Debug)]
#[command(name = "cfs", version, about = "Desk-scale numerics for causal fermion systems")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Ambient Hilbert space dimension d.
    #[arg(long = "dim", global = true, default_value_t = 6)]
    dim: usize,
    /// Spin dimension n.
    #[arg(long = "spin", global = true, default_value_t = 1)]
    spin: usize,
    /// Seed of the ChaCha8 generator.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long = "tol.herm", global = true)]
    tol_herm: Option<f64>,
    #[arg(long = "tol.rank", global = true)]
    tol_rank: Option<f64>,
    #[arg(long = "tol.chart", global = true)]
    tol_chart: Option<f64>,
    #[arg(long = "tol.series", global = true)]
    tol_series: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

impl GlobalArgs {
    fn tolerances(&self) -> Tolerances<f64> {
        let mut tol = Tolerances::default();
        if let Some(v) = self.tol_herm {
            tol.herm = v;
        }
        if let Some(v) = self.tol_rank {
            tol.rank = v;
        }
        if let Some(v) = self.tol_chart {
            tol.chart = v;
        }
        if let Some(v) = self.tol_series {
            tol.series = v;
        }
        tol
    }

    fn config(&self) -> Result<Config64, Failure> {
        Ok(Config64::with_tolerances(self.dim, self.spin, self.tolerances())?)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write random regular operators as a JSON list.
    Gen {
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Run an invariant suite; exit 1 if any check fails.
    Verify {
        suite: SuiteArg,
        /// Sample count override.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<f64>>,
        #[arg(long = "s-constant")]
        s_constant: Option<f64>,
    },
    /// Hölder scan of the Lagrangian (or of |xy|²) along a direction.
    Scan {
        /// Operator JSON for x; without x, y and direction the built-in
        /// maximal-degeneracy pair is scanned.
        #[arg(long, requires_all = ["y", "direction"])]
        x: Option<PathBuf>,
        #[arg(long, requires_all = ["x", "direction"])]
        y: Option<PathBuf>,
        /// Selfadjoint increment in the operator JSON schema.
        #[arg(long, requires_all = ["x", "y"])]
        direction: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<f64>>,
        #[arg(long)]
        boundedness: bool,
    },
    /// Random-descent minimization of the action at fixed volume.
    Minimize {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        kappa: f64,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long = "fix-trace")]
        fix_trace: bool,
    },
    /// Action, constraints and ℓ of a measure.
    Action {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long = "s-constant")]
        s_constant: f64,
    },
    /// Pairwise Lagrangian and spectral weight of a list of operators.
    Pairs {
        #[arg(long)]
        operators: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SuiteArg {
    Charts,
    Metric,
    Hoelder,
    Chain,
    Action,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Charts => Suite::Charts,
            SuiteArg::Metric => Suite::Metric,
            SuiteArg::Hoelder => Suite::Hoelder,
            SuiteArg::Chain => Suite::Chain,
            SuiteArg::Action => Suite::Action,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    let g = &cli.global;
    let out = Output::new(&g.out)?;
    match cli.command {
        Command::Gen { count } => {
            let cfg = g.config()?;
            let docs: Vec<OperatorJson> =
                generate_operators(&cfg, count, g.seed).iter().map(OperatorJson::from_operator).collect();
            out.json("operators.json", &docs)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, trials, steps, s_constant } => {
            let opts = VerifyOptions {
                d: g.dim,
                n: g.spin,
                seed: g.seed,
                tol: g.tolerances(),
                trials,
                steps: steps.inspect(|s| warn_span(s)),
                s_constant,
            };
            let report = run_suite(suite.into(), &opts)?;
            let name = report.suite.name();
            for c in &report.checks {
                println!(
                    "{} {name}.{}: {:e} (threshold {:e}) {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.threshold,
                    c.detail
                );
            }
            out.json(&format!("verify_{name}.json"), &report)?;
            if !report.hessian_rows.is_empty() {
                out.csv("hessian.csv", &report.hessian_rows)?;
            }
            if !report.scan_rows.is_empty() {
                out.csv("scan.csv", &report.scan_rows)?;
            }
            Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Scan { x, y, direction, steps, boundedness } => {
            let cfg = g.config()?;
            let steps = steps.unwrap_or_else(default_steps);
            warn_span(&steps);
            let (x, y, dir) = match (x, y, direction) {
                (Some(x), Some(y), Some(d)) => {
                    let x = read_operator(&x, &cfg)?;
                    let y = read_operator(&y, &cfg)?;
                    let doc: OperatorJson = parse_json(&output::read(&d)?)?;
                    let dir: Matrix64 = doc.matrix()?;
                    (x, y, dir)
                }
                _ => {
                    let case = if boundedness { boundedness_case(&cfg)? } else { degenerate_case(&cfg, 1.0)? };
                    (case.x, case.y, case.direction)
                }
            };
            let fit = if boundedness {
                hoelder_scan_boundedness(&x, &y, &dir, &steps)?
            } else {
                hoelder_scan_lagrangian(&x, &y, &dir, &steps)?
            };
            let alpha = if boundedness { 1.0 / (2 * cfg.n) as f64 } else { lagrangian_exponent(cfg.n) };
            out.csv("scan.csv", &ScanRow::rows(&fit, alpha))?;
            let summary = FitSummaryJson::from(&fit);
            if summary.low_confidence {
                eprintln!("warning: fitted tail spans fewer than two decades; fit is low-confidence");
            }
            out.json("fit.json", &summary)?;
            println!("exponent_hat {:?} r2 {:?} n_points {}", summary.exponent_hat, summary.r2, summary.n_points);
            Ok(ExitCode::SUCCESS)
        }
        Command::Minimize { measure, kappa, budget, fix_trace } => {
            let rho = read_measure(&measure, g)?;
            let opts = MinimizeOptions { fix_trace, ..MinimizeOptions::default() };
            let run = minimize_action(&rho, kappa, budget, g.seed, &opts);
            let rows: Vec<IterationRow> = run.log.iter().map(IterationRow::from).collect();
            out.csv("minimizer.csv", &rows)?;
            out.json("minimized.json", &MeasureJson::from_measure(&run.measure))?;
            let (first, last) = (&rows[0], &rows[rows.len() - 1]);
            println!("action {:e} -> {:e} after {budget} iterations", first.action, last.action);
            Ok(ExitCode::SUCCESS)
        }
        Command::Action { measure, s_constant } => {
            let rho = read_measure(&measure, g)?;
            let report = causal_action(&rho);
            let traces = local_trace_check(&rho);
            let doc = output::ActionJson {
                action: report.action,
                volume: report.volume,
                trace_integral: report.trace_integral,
                boundedness: report.boundedness,
                s_constant,
                ell_values: report.ell_values(s_constant),
                trace_mean: traces.mean,
                trace_max_deviation: traces.max_deviation,
            };
            out.json("action.json", &doc)?;
            println!("action {:e} volume {:e} boundedness {:e}", doc.action, doc.volume, doc.boundedness);
            Ok(ExitCode::SUCCESS)
        }
        Command::Pairs { operators } => {
            let docs: Vec<OperatorJson> = parse_json(&output::read(&operators)?)?;
            let ops = docs.iter().map(|d| d.to_operator(g.tolerances())).collect::<Result<Vec<_>, _>>()?;
            if let Some(bad) = ops.iter().find(|o| !o.config().same_space(ops[0].config())) {
                return Err(CfsError::DimensionMismatch {
                    expected: format!("d={}", ops[0].config().d),
                    found: format!("d={}", bad.config().d),
                }
                .into());
            }
            let rows: Vec<PairRow> = (0..ops.len())
                .flat_map(|i| (0..ops.len()).map(move |j| (i, j)))
                .map(|(i, j)| PairRow {
                    i,
                    j,
                    lagrangian: lagrangian(&ops[i], &ops[j]),
                    spectral_weight: spectral_weight(&ops[i], &ops[j]),
                })
                .collect();
            out.csv("pairs.csv", &rows)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn warn_span(steps: &[f64]) {
    let (hi, lo) = steps.iter().fold((f64::MIN, f64::MAX), |(h, l), &t| (h.max(t), l.min(t)));
    if lo > 0.0 && (hi / lo).log10() < 1.0 {
        eprintln!("warning: steps span {:.2} decades (< 1); the fit will be low-confidence", (hi / lo).log10());
    }
}

fn read_operator(path: &std::path::Path, cfg: &Config64) -> Result<Operator64, Failure> {
    let doc: OperatorJson = parse_json(&output::read(path)?)?;
    Ok(doc.to_operator(cfg.tol)?)
}

fn read_measure(path: &std::path::Path, g: &GlobalArgs) -> Result<cfs_core::Measure64, Failure> {
    let doc: MeasureJson = parse_json(&output::read(path)?)?;
    Ok(doc.to_measure(&g.config()?)?)
}
