//! Invariant suites run by `cfs verify`. Each suite draws its samples from
//! one seeded generator and reports every check with its measured value and
//! threshold.

use nalgebra::{Complex, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chart::{
    chart_basis, chart_forward, chart_inverse_in, chart_origin, forward_matrix, transition_map, TangentVector,
    WaveChartPoint,
};
use crate::error::{CfsError, Result};
use crate::expedient::{chain_rule_check, higher_chain_rule_check, required_tangents, SmoothCurve};
use crate::fd::LinearSpace;
use crate::hoelder::{
    boundedness_case, degenerate_case, estimate_global_constant, global_bound_check, hoelder_scan_boundedness,
    hoelder_scan_lagrangian, lagrangian_exponent, log_steps,
};
use crate::io::{ChainReportJson, FitSummaryJson, HessianRow, ScanRow};
use crate::lagrangian::lagrangian;
use crate::linalg::{hs_norm, spectral_norm};
use crate::measure::{causal_action, causal_action_serial, ell, minimize_action, DiscreteMeasure, MinimizeOptions};
use crate::metric::{dist_sq_hessian, fd_dist_sq_gradient, fd_dist_sq_hessian, metric_coords};
use crate::operator::{HilbertConfig, Operator, SpinSpaceFrame, Tolerances};
use crate::poly::{match_roots, root_bound_check, MonicPolynomial};
use crate::random::{
    random_admissible_direction, random_chart_coords, random_regular_operator, random_tangent, random_unitary,
};
use crate::scalar::{creal, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Charts,
    Metric,
    Hoelder,
    Chain,
    Action,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Charts => "charts",
            Suite::Metric => "metric",
            Suite::Hoelder => "hoelder",
            Suite::Chain => "chain",
            Suite::Action => "action",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub tol: Tolerances<f64>,
    /// Overrides the per-suite sample count.
    pub trials: Option<usize>,
    pub steps: Option<Vec<f64>>,
    pub s_constant: Option<f64>,
}

impl VerifyOptions {
    pub fn new(d: usize, n: usize, seed: u64) -> Self {
        Self { d, n, seed, tol: Tolerances::default(), trials: None, steps: None, s_constant: None }
    }

    fn config(&self) -> Result<HilbertConfig<f64>> {
        HilbertConfig::with_tolerances(self.d, self.n, self.tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= threshold`.
    fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: value <= threshold, value, threshold, detail: detail.into() }
    }

    /// Passes when `value >= threshold`.
    fn at_least(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: value >= threshold, value, threshold, detail: detail.into() }
    }

    fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, value: f64::from(u8::from(passed)), threshold: 1.0, detail: detail.into() }
    }

    fn failed(name: &str, err: &CfsError) -> Self {
        Self { name: name.into(), passed: false, value: f64::NAN, threshold: f64::NAN, detail: err.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedFit {
    pub name: String,
    pub expected_exponent: f64,
    pub fit: FitSummaryJson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedChain {
    pub name: String,
    pub report: ChainReportJson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub fits: Vec<NamedFit>,
    pub chains: Vec<NamedChain>,
    #[serde(skip)]
    pub hessian_rows: Vec<HessianRow>,
    #[serde(skip)]
    pub scan_rows: Vec<ScanRow>,
}

impl SuiteReport {
    fn new(suite: Suite, opts: &VerifyOptions) -> Self {
        Self {
            suite,
            d: opts.d,
            n: opts.n,
            seed: opts.seed,
            passed: false,
            checks: Vec::new(),
            fits: Vec::new(),
            chains: Vec::new(),
            hessian_rows: Vec::new(),
            scan_rows: Vec::new(),
        }
    }

    fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    fn finish(mut self) -> Self {
        self.passed = !self.checks.is_empty() && self.checks.iter().all(|c| c.passed);
        self
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let cfg = opts.config()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let report = SuiteReport::new(suite, opts);
    let report = match suite {
        Suite::Charts => charts(report, &cfg, opts, &mut rng),
        Suite::Metric => metric(report, &cfg, opts, &mut rng),
        Suite::Hoelder => hoelder(report, &cfg, opts, &mut rng)?,
        Suite::Chain => chain(report, &cfg, &mut rng),
        Suite::Action => action(report, &cfg, opts, &mut rng),
    };
    Ok(report.finish())
}

pub const ROUND_TRIP_TOL: f64 = 1e-8;
pub const HESSIAN_REL_TOL: f64 = 1e-4;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const METRIC_IDENTITY_TOL: f64 = 1e-10;
pub const SCALING_TOL: f64 = 1e-8;
pub const CHAIN_TOL: f64 = 1e-5;
pub const CHAIN2_TOL: f64 = 1e-4;

/// Maximum of the two chart round-trip errors and of the transition
/// consistency error over random samples.
pub fn chart_round_trip_errors(
    cfg: &HilbertConfig<f64>,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64, f64)> {
    let (mut coords, mut points, mut transition) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..trials {
        let x = random_regular_operator(cfg, rng);
        let frame = SpinSpaceFrame::new(&x)?;
        let psi = random_chart_coords(&frame, 0.1, rng);
        let p = WaveChartPoint::new(frame.clone(), psi.clone())?;
        let y = chart_forward(&p)?;
        let back = chart_inverse_in(&frame, &y)?;
        coords = coords.max(spectral_norm(&(back.psi() - &psi)) / (1.0 + spectral_norm(&psi)));

        let other = chart_forward(&WaveChartPoint::new(frame.clone(), random_chart_coords(&frame, 0.1, rng))?)?;
        let again = chart_forward(&chart_inverse_in(&frame, &other)?)?;
        points = points.max(spectral_norm(&(again.matrix() - other.matrix())) / other.norm());

        if k % 10 == 0 {
            let fy = SpinSpaceFrame::new(&y)?;
            let q = WaveChartPoint::new(frame.clone(), random_chart_coords(&frame, 0.03, rng))?;
            let direct = transition_map(&fy, &q)?;
            let via = chart_inverse_in(&fy, &chart_forward(&q)?)?;
            transition = transition.max(spectral_norm(&(direct.psi() - via.psi())) / (1.0 + spectral_norm(q.psi())));
        }
    }
    Ok((coords, points, transition))
}

fn charts(mut r: SuiteReport, cfg: &HilbertConfig<f64>, opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> SuiteReport {
    let trials = opts.trials.unwrap_or(200);
    match chart_round_trip_errors(cfg, trials, rng) {
        Ok((coords, points, transition)) => {
            r.push(Check::at_most(
                "coords_round_trip",
                coords,
                ROUND_TRIP_TOL,
                format!("{trials} samples within 0.1 of the origin"),
            ));
            r.push(Check::at_most("point_round_trip", points, ROUND_TRIP_TOL, format!("{trials} samples")));
            r.push(Check::at_most(
                "transition_consistency",
                transition,
                ROUND_TRIP_TOL,
                "transition map vs chart inverse",
            ));
        }
        Err(e) => r.push(Check::failed("round_trips", &e)),
    }
    r
}

/// `2 ||u† X E + E† X u||²_HS`, the metric written through the embedding.
fn embedded_norm_sq(frame: &SpinSpaceFrame<f64>, u: &CMat<f64>) -> f64 {
    let e = chart_origin(frame);
    let a = u.adjoint() * &frame.x_block * &e + e.adjoint() * &frame.x_block * u;
    2.0 * hs_norm(&a).powi(2)
}

fn metric(mut r: SuiteReport, cfg: &HilbertConfig<f64>, opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> SuiteReport {
    let trials = opts.trials.unwrap_or(50);
    let mut worst_hessian = 0.0f64;
    let mut worst_gradient = 0.0f64;
    let mut worst_identity = 0.0f64;
    for trial in 0..trials {
        let sample = (|| -> Result<()> {
            let x = random_regular_operator(cfg, rng);
            let frame = SpinSpaceFrame::new(&x)?;
            let u = TangentVector::at(&frame, random_tangent(&frame, rng))?;
            let v = TangentVector::at(&frame, random_tangent(&frame, rng))?;
            let closed = dist_sq_hessian(&x, &u, &v)?;
            let fd = fd_dist_sq_hessian(&frame, &u.v, &v.v, 1e-4)?;
            let scale = (metric_coords(&frame, &u.v, &u.v) * metric_coords(&frame, &v.v, &v.v)).sqrt();
            let rel_err = (closed - fd).abs() / scale;
            worst_hessian = worst_hessian.max(rel_err);
            r.hessian_rows.push(HessianRow { trial, closed_form: closed, fd_value: fd, rel_err });

            let grad = fd_dist_sq_gradient(&frame, &chart_basis(&frame), 1e-4)?;
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            worst_gradient = worst_gradient.max(gnorm / x.norm().powi(2));

            let g = metric_coords(&frame, &u.v, &u.v);
            worst_identity = worst_identity.max((g - embedded_norm_sq(&frame, &u.v)).abs() / g);
            Ok(())
        })();
        if let Err(e) = sample {
            r.push(Check::failed("hessian_sample", &e));
            return r;
        }
    }
    r.push(Check::at_most("hessian_closed_vs_fd", worst_hessian, HESSIAN_REL_TOL, "relative to sqrt(g(u,u) g(v,v))"));
    r.push(Check::at_most("gradient_at_base", worst_gradient, GRADIENT_TOL, "relative to ||x||²"));
    r.push(Check::at_most("metric_embedding_identity", worst_identity, METRIC_IDENTITY_TOL, "g(u,u) = 2||u†x + xu||²"));

    let x = random_regular_operator(cfg, rng);
    let positivity = SpinSpaceFrame::new(&x).map(|frame| {
        (0..500)
            .map(|_| {
                let u = random_tangent(&frame, rng);
                metric_coords(&frame, &u, &u) / hs_norm(&u).powi(2)
            })
            .fold(f64::INFINITY, f64::min)
    });
    match positivity {
        Ok(min) => {
            r.push(Check::flag("metric_positive", min > 0.0, format!("min g(u,u)/|u|² = {min:e} over 500 samples")))
        }
        Err(e) => r.push(Check::failed("metric_positive", &e)),
    }
    r
}

/// The default scan: 25 logarithmic steps from `1e-2` to `1e-8`.
pub fn default_steps() -> Vec<f64> {
    log_steps(1e-2, 1e-8, 25)
}

fn record_fit(r: &mut SuiteReport, name: &str, expected: f64, fit: &crate::hoelder::HoelderFit) {
    r.fits.push(NamedFit { name: name.into(), expected_exponent: expected, fit: fit.into() });
}

fn hoelder(
    mut r: SuiteReport,
    cfg: &HilbertConfig<f64>,
    opts: &VerifyOptions,
    rng: &mut ChaCha8Rng,
) -> Result<SuiteReport> {
    let n = cfg.n;
    let steps = opts.steps.clone().unwrap_or_else(default_steps);
    let alpha = lagrangian_exponent(n);

    // simple spectra: Lipschitz regime
    let trials = opts.trials.unwrap_or(5);
    let mut worst_low = f64::INFINITY;
    let mut worst_high = f64::NEG_INFINITY;
    let mut sampled = 0;
    while sampled < trials {
        let x = random_regular_operator(cfg, rng);
        let y = random_regular_operator(cfg, rng);
        if lagrangian(&x, &y) < 1e-3 {
            continue;
        }
        let dir = random_admissible_direction(&y, rng);
        match hoelder_scan_lagrangian(&x, &y, &dir, &steps) {
            Ok(fit) => {
                worst_low = worst_low.min(fit.exponent_hat);
                worst_high = worst_high.max(fit.exponent_hat);
                if sampled == 0 {
                    record_fit(&mut r, "simple_spectrum", 1.0, &fit);
                }
            }
            Err(e) => {
                r.push(Check::failed("simple_spectrum_scan", &e));
                return Ok(r);
            }
        }
        sampled += 1;
    }
    let lower = if n == 1 { 0.95 } else { 0.9 };
    r.push(Check::at_least("simple_spectrum_exponent_min", worst_low, lower, format!("{trials} random pairs")));
    if n > 1 {
        r.push(Check::at_most("simple_spectrum_exponent_max", worst_high, 1.1, format!("{trials} random pairs")));
    }

    // maximal degeneracy: exponent 1/(2n-1)
    let case = degenerate_case(cfg, 1.0)?;
    let fit = hoelder_scan_lagrangian(&case.x, &case.y, &case.direction, &steps)?;
    record_fit(&mut r, "degenerate_lagrangian", case.expected_exponent, &fit);
    r.scan_rows = ScanRow::rows(&fit, alpha);
    r.push(Check::at_most(
        "degenerate_exponent",
        (fit.exponent_hat - case.expected_exponent).abs(),
        0.1,
        format!("fitted {:.4}, expected {:.4}", fit.exponent_hat, case.expected_exponent),
    ));
    r.push(Check::flag("degenerate_ratio_bounded", fit.ratio_bounded(alpha, 10.0), "delta / t^alpha over the scan"));

    let case = boundedness_case(cfg)?;
    let fit = hoelder_scan_boundedness(&case.x, &case.y, &case.direction, &steps)?;
    record_fit(&mut r, "degenerate_boundedness", case.expected_exponent, &fit);
    r.push(Check::at_least(
        "boundedness_exponent",
        fit.exponent_hat,
        1.0 / (2 * n) as f64 - 0.1,
        "at least 1/(2n) - 0.1",
    ));

    // global bound: invariance of the normalized ratio under rescaling
    let (x, y) = nonzero_pair(cfg, rng)?;
    let yt = y.shifted(&random_admissible_direction(&y, rng), 1e-3)?;
    let base = global_bound_check(&x, &y, &yt)?;
    let mut worst = 0.0f64;
    for a in [0.1, 1.0, 10.0] {
        for b in [0.1, 1.0, 10.0] {
            let scaled = global_bound_check(&x.scaled(a)?, &y.scaled(b)?, &yt.scaled(b)?)?;
            worst = worst.max((scaled.ratio - base.ratio).abs() / base.ratio);
        }
    }
    r.push(Check::at_most("global_ratio_scaling", worst, SCALING_TOL, "a, b in {0.1, 1, 10}"));
    r.push(Check::flag(
        "refined_not_weaker",
        base.refined_factor <= base.coarse_factor * (1.0 + 1e-12),
        format!("refined {:e}, coarse {:e}", base.refined_factor, base.coarse_factor),
    ));
    let estimate = estimate_global_constant(cfg, 10, opts.seed)?;
    r.push(Check::flag(
        "global_constant_finite",
        estimate.max_ratio.is_finite(),
        format!("empirical c({n}) >= {:.4e} over {} samples", estimate.max_ratio, estimate.samples),
    ));

    // root lemma: λ² against λ² - ε
    let eps = 1e-6;
    let p = MonicPolynomial::<f64>::from_roots(&[(Complex::new(0.0, 0.0), 2)])?;
    let q = p.perturbed(&[Complex::new(-eps, 0.0), Complex::new(0.0, 0.0)])?;
    let m = match_roots(&p, &q)?;
    r.push(Check::at_most(
        "double_root_split",
        (m.max_deviation() - eps.sqrt()).abs() / eps.sqrt(),
        1e-6,
        "deviation sqrt(eps)",
    ));
    r.push(Check::flag("double_root_bound", root_bound_check(&p, &q)?.holds, "deviation below delta"));
    Ok(r)
}

/// A pair with complex-conjugate `xy` spectrum has a Lagrangian that
/// vanishes identically nearby, so relative checks need a redraw.
fn nonzero_pair(cfg: &HilbertConfig<f64>, rng: &mut ChaCha8Rng) -> Result<(Operator<f64>, Operator<f64>)> {
    (0..100)
        .map(|_| (random_regular_operator(cfg, rng), random_regular_operator(cfg, rng)))
        .find(|(x, y)| lagrangian(x, y) > 1e-6 * (x.norm() * y.norm()).powi(2))
        .ok_or_else(|| CfsError::InvalidConfig("no pair with nonzero Lagrangian in 100 draws".into()))
}

type PairCoords = (CMat<f64>, CMat<f64>);

fn chain(mut r: SuiteReport, cfg: &HilbertConfig<f64>, rng: &mut ChaCha8Rng) -> SuiteReport {
    match chain_checks(&mut r, cfg, rng) {
        Ok(()) => {}
        Err(e) => r.push(Check::failed("chain_setup", &e)),
    }
    r
}

fn chain_checks(r: &mut SuiteReport, cfg: &HilbertConfig<f64>, rng: &mut ChaCha8Rng) -> Result<()> {
    let (x, y) = nonzero_pair(cfg, rng)?;
    let (fx, fy) = (SpinSpaceFrame::new(&x)?, SpinSpaceFrame::new(&y)?);
    let tangent = |f: &SpinSpaceFrame<f64>, rng: &mut ChaCha8Rng| random_tangent(f, rng) * creal(0.1);
    let (a1, b1, a2, b2) = (tangent(&fx, rng), tangent(&fx, rng), tangent(&fy, rng), tangent(&fy, rng));
    let (ox, oy) = (chart_origin(&fx), chart_origin(&fy));
    let alpha = lagrangian_exponent(cfg.n);
    let needed = required_tangents(2, alpha);
    let mut derivatives: Vec<PairCoords> =
        vec![(a1.clone(), a2.clone()), (b1.clone() * creal(2.0), b2.clone() * creal(2.0))];
    while derivatives.len() < needed {
        derivatives.push((a1.zero_like(), a2.zero_like()));
    }
    let curve = {
        let (a1, b1, a2, b2) = (a1.clone(), b1.clone(), a2.clone(), b2.clone());
        move |t: f64| -> Result<PairCoords> {
            Ok((&ox + &a1 * creal(t) + &b1 * creal(t * t), &oy + &a2 * creal(t) + &b2 * creal(t * t)))
        }
    };
    let gamma = SmoothCurve::new(curve, 0.0, derivatives.clone());
    let f = |p: &PairCoords| -> Result<f64> {
        let gx = Operator::new(forward_matrix(&fx, &p.0), cfg)?;
        let gy = Operator::new(forward_matrix(&fy, &p.1), cfg)?;
        Ok(lagrangian(&gx, &gy))
    };

    let first = chain_rule_check(&f, &gamma, alpha)?;
    let scale = first.rhs.abs().max(1.0);
    r.push(Check::at_most("chain_order1_residual", first.residual_abs / scale, CHAIN_TOL, "at h = 1e-5"));
    r.push(Check::at_least("chain_order1_decay", first.decay_order, 1.0, "log-log slope of the residual"));
    r.chains.push(NamedChain { name: "lagrangian_order1".into(), report: (&first).into() });

    let second = higher_chain_rule_check(&f, &gamma, alpha, 2)?;
    let scale = second.rhs.abs().max(1.0);
    r.push(Check::at_most("chain_order2_residual", second.residual_abs / scale, CHAIN2_TOL, "at h = 1e-3"));
    r.chains.push(NamedChain { name: "lagrangian_order2".into(), report: (&second).into() });

    // polynomial composition with a closed-form second derivative of 18
    let poly = |v: &DVector<f64>| -> Result<f64> { Ok(v[0] * v[0] + 3.0 * v[0] * v[1]) };
    let quad = SmoothCurve::new(
        |t: f64| Ok(DVector::from_vec(vec![1.0 + 2.0 * t + t * t, t - t * t])),
        0.0,
        vec![DVector::from_vec(vec![2.0, 1.0]), DVector::from_vec(vec![2.0, -2.0])],
    );
    let oracle = higher_chain_rule_check(&poly, &quad, 1.0, 2)?;
    r.push(Check::at_most(
        "faa_di_bruno_polynomial",
        (oracle.rhs - 18.0).abs(),
        CHAIN2_TOL,
        "against the exact value 18",
    ));

    let short = SmoothCurve::new(|t: f64| Ok(DVector::from_vec(vec![t])), 0.0, vec![]);
    let rejected = matches!(
        chain_rule_check(&|v: &DVector<f64>| Ok(v[0]), &short, alpha),
        Err(CfsError::InsufficientTangents { .. })
    );
    r.push(Check::flag(
        "insufficient_tangents_rejected",
        rejected,
        format!("{} tangents required", required_tangents(1, alpha)),
    ));
    Ok(())
}

/// Random measure with weights in `[0.5, 1.5)`.
pub fn random_measure(cfg: &HilbertConfig<f64>, m: usize, rng: &mut ChaCha8Rng) -> Result<DiscreteMeasure<f64>> {
    let points = (0..m).map(|_| random_regular_operator(cfg, rng)).collect();
    let weights = (0..m).map(|_| rng.random_range(0.5..1.5)).collect();
    DiscreteMeasure::new(cfg, points, weights)
}

fn action(mut r: SuiteReport, cfg: &HilbertConfig<f64>, opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> SuiteReport {
    if let Err(e) = action_checks(&mut r, cfg, opts, rng) {
        r.push(Check::failed("action_setup", &e));
    }
    r
}

fn action_checks(
    r: &mut SuiteReport,
    cfg: &HilbertConfig<f64>,
    opts: &VerifyOptions,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let m = opts.trials.unwrap_or(50);
    let rho = random_measure(cfg, m, rng)?;
    let (par, ser) = (causal_action(&rho), causal_action_serial(&rho));
    r.push(Check::flag(
        "parallel_equals_serial",
        par.action.to_bits() == ser.action.to_bits() && par == ser,
        format!("{m} points, action {:e}", par.action),
    ));

    let pts = rho.points();
    // pairs whose Lagrangian is well above rounding; for n = 1 many random
    // pairs have a complex-conjugate spectrum and vanishing Lagrangian
    let pairs: Vec<(usize, usize, f64)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, lagrangian(&pts[i], &pts[j])))
        .filter(|&(i, j, l)| l > 1e-6 * (pts[i].norm() * pts[j].norm()).powi(2))
        .take(10)
        .collect();
    let mut worst = 0.0f64;
    for &(i, j, l) in &pairs {
        for a in [0.1, 1.0, 10.0] {
            for b in [0.1, 2.0, 10.0] {
                let scaled = lagrangian(&pts[i].scaled(a)?, &pts[j].scaled(b)?);
                worst = worst.max((scaled - (a * b).powi(2) * l).abs() / ((a * b).powi(2) * l));
            }
        }
    }
    if pairs.is_empty() {
        worst = f64::NAN;
    }
    r.push(Check::at_most(
        "lagrangian_homogeneity",
        worst,
        SCALING_TOL,
        format!("L(ax, by) = (ab)² L(x, y) on {} pairs", pairs.len()),
    ));

    let u = random_unitary::<f64, _>(cfg.d, rng);
    let rotated = DiscreteMeasure::new(
        cfg,
        pts.iter().map(|x| x.conjugated(&u)).collect::<Result<Vec<_>>>()?,
        rho.weights().to_vec(),
    )?;
    let rot = causal_action(&rotated);
    r.push(Check::at_most(
        "unitary_invariance",
        (rot.action - par.action).abs() / par.action,
        SCALING_TOL,
        "joint conjugation",
    ));

    let c = rho.weights();
    let transposed: f64 =
        (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| c[i] * c[j] * lagrangian(&pts[j], &pts[i])).sum();
    r.push(Check::at_most(
        "kernel_symmetry",
        (transposed - par.action).abs() / par.action,
        1e-10,
        "L(x_j, x_i) in place of L(x_i, x_j)",
    ));

    if let Some(s) = opts.s_constant {
        let recovered: f64 = c.iter().zip(pts).map(|(ci, x)| ci * (ell(x, &rho, s) + s)).sum();
        r.push(Check::at_most(
            "ell_integrates_to_action",
            (recovered - par.action).abs() / par.action,
            1e-10,
            format!("s = {s}"),
        ));
    }

    let small = DiscreteMeasure::new(cfg, pts[..m.min(4)].to_vec(), c[..m.min(4)].to_vec())?;
    let run = minimize_action(&small, 0.0, 100, opts.seed, &MinimizeOptions::default());
    let monotone = run.log.windows(2).all(|w| w[1].action <= w[0].action);
    r.push(Check::flag("minimizer_monotone", monotone, format!("{} iterations", run.log.len() - 1)));
    let v0 = small.volume();
    r.push(Check::at_most("minimizer_volume", (run.measure.volume() - v0).abs() / v0, 1e-12, "relative volume drift"));
    let again = minimize_action(&small, 0.0, 100, opts.seed, &MinimizeOptions::default());
    r.push(Check::flag("minimizer_deterministic", again == run, "two runs with one seed"));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes_on_small_config() {
        for suite in [Suite::Charts, Suite::Metric, Suite::Hoelder, Suite::Chain, Suite::Action] {
            let mut opts = VerifyOptions::new(4, 1, 7);
            opts.trials = Some(match suite {
                Suite::Hoelder => 2,
                _ => 10,
            });
            opts.s_constant = Some(0.5);
            let report = run_suite(suite, &opts).unwrap();
            assert!(
                report.passed,
                "{}: {:#?}",
                suite.name(),
                report.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn degenerate_exponent_for_spin_two() {
        let mut opts = VerifyOptions::new(5, 2, 3);
        opts.trials = Some(1);
        let report = run_suite(Suite::Hoelder, &opts).unwrap();
        let fit = report.fits.iter().find(|f| f.name == "degenerate_lagrangian").unwrap();
        assert!((fit.fit.exponent_hat.unwrap() - 1.0 / 3.0).abs() < 0.1);
        assert!(report.passed, "{:#?}", report.checks);
    }
}
