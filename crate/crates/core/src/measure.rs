//! Discrete measures, the causal action with its constraint functionals,
//! and a random-descent minimizer used as experiment plumbing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CfsError, Result};
use crate::lagrangian::{boundedness_integrand, lagrangian};
use crate::linalg::{hermitian_eigen, hermitian_part, spectral_norm};
use crate::operator::{HilbertConfig, Operator};
use crate::random::random_hermitian;
use crate::scalar::{creal, lit, to_f64, CMat, Real};

/// Finite weighted sum of Dirac masses on operators of one Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<T: Real> {
    cfg: HilbertConfig<T>,
    points: Vec<Operator<T>>,
    weights: Vec<T>,
}

impl<T: Real> DiscreteMeasure<T> {
    pub fn new(cfg: &HilbertConfig<T>, points: Vec<Operator<T>>, weights: Vec<T>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(CfsError::DimensionMismatch {
                expected: format!("{} weights", points.len()),
                found: format!("{}", weights.len()),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > T::zero() && to_f64(**w).is_finite())) {
            return Err(CfsError::InvalidArgument(format!("weights must be positive and finite, got {}", to_f64(*w))));
        }
        if let Some(p) = points.iter().find(|p| !p.config().same_space(cfg)) {
            return Err(CfsError::DimensionMismatch {
                expected: format!("d={} n={}", cfg.d, cfg.n),
                found: format!("d={} n={}", p.config().d, p.config().n),
            });
        }
        Ok(Self { cfg: *cfg, points, weights })
    }

    pub fn empty(cfg: &HilbertConfig<T>) -> Self {
        Self { cfg: *cfg, points: Vec::new(), weights: Vec::new() }
    }

    /// Unit weights.
    pub fn uniform(cfg: &HilbertConfig<T>, points: Vec<Operator<T>>) -> Result<Self> {
        let weights = vec![T::one(); points.len()];
        Self::new(cfg, points, weights)
    }

    pub fn config(&self) -> &HilbertConfig<T> {
        &self.cfg
    }

    pub fn points(&self) -> &[Operator<T>] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total mass `Σ c_i`.
    pub fn volume(&self) -> T {
        self.weights.iter().fold(T::zero(), |a, &c| a + c)
    }
}

/// Action, constraints and the per-point integrals `Σ_j c_j ℒ(x_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionReport<T> {
    pub action: T,
    pub volume: T,
    pub trace_integral: T,
    pub boundedness: T,
    pub integrated: Vec<T>,
}

impl<T: Real> ActionReport<T> {
    /// `ℓ(x_i) = Σ_j c_j ℒ(x_i, x_j) - s` at every support point.
    pub fn ell_values(&self, s: T) -> Vec<T> {
        self.integrated.iter().map(|&v| v - s).collect()
    }
}

/// `(ℒ(x, y), |xy|²)`.
pub fn pair_terms<T: Real>(x: &Operator<T>, y: &Operator<T>) -> (T, T) {
    (lagrangian(x, y), boundedness_integrand(x, y))
}

fn reduce<T: Real>(rho: &DiscreteMeasure<T>, term: impl Fn(usize, usize) -> (T, T)) -> ActionReport<T> {
    let c = &rho.weights;
    let mut action = T::zero();
    let mut boundedness = T::zero();
    let mut integrated = Vec::with_capacity(c.len());
    for i in 0..c.len() {
        let mut row = T::zero();
        for j in 0..c.len() {
            let (l, w) = term(i, j);
            let cc = c[i] * c[j];
            action += cc * l;
            boundedness += cc * w;
            row += c[j] * l;
        }
        integrated.push(row);
    }
    let trace_integral = rho.points.iter().zip(c).fold(T::zero(), |a, (x, &ci)| a + ci * x.trace());
    ActionReport { action, volume: rho.volume(), trace_integral, boundedness, integrated }
}

/// `𝒮 = Σ_{i,j} c_i c_j ℒ(x_i, x_j)` together with volume, trace integral
/// and `Σ c_i c_j |x_i x_j|²`. The pair terms are evaluated in parallel;
/// the sums run serially with `i` outer and `j` inner, so the result is
/// bitwise identical to [`causal_action_serial`].
pub fn causal_action<T: Real>(rho: &DiscreteMeasure<T>) -> ActionReport<T> {
    let m = rho.len();
    let table: Vec<(T, T)> =
        (0..m * m).into_par_iter().map(|k| pair_terms(&rho.points[k / m], &rho.points[k % m])).collect();
    reduce(rho, |i, j| table[i * m + j])
}

/// Plain double loop, the reference for [`causal_action`].
pub fn causal_action_serial<T: Real>(rho: &DiscreteMeasure<T>) -> ActionReport<T> {
    reduce(rho, |i, j| pair_terms(&rho.points[i], &rho.points[j]))
}

/// `ℓ(x) = Σ_i c_i ℒ(x, y_i) - s`.
pub fn ell<T: Real>(x: &Operator<T>, rho: &DiscreteMeasure<T>, s: T) -> T {
    rho.points.iter().zip(&rho.weights).fold(T::zero(), |a, (y, &c)| a + c * lagrangian(x, y)) - s
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport<T> {
    pub traces: Vec<T>,
    /// Unweighted mean of the traces.
    pub mean: T,
    pub max_deviation: T,
}

/// Spread of `tr(x_i)` around its mean; a minimizer has constant trace on
/// its support.
pub fn local_trace_check<T: Real>(rho: &DiscreteMeasure<T>) -> TraceReport<T> {
    let traces: Vec<T> = rho.points.iter().map(Operator::trace).collect();
    if traces.is_empty() {
        return TraceReport { traces, mean: T::zero(), max_deviation: T::zero() };
    }
    let mean = traces.iter().fold(T::zero(), |a, &t| a + t) / lit(traces.len() as f64);
    let max_deviation = traces.iter().fold(T::zero(), |a, &t| a.max((t - mean).abs()));
    TraceReport { traces, mean, max_deviation }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    /// Rescale moved points to keep their trace.
    pub fix_trace: bool,
    /// Initial relative step of the point moves.
    pub initial_step: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { fix_trace: false, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLog<T> {
    pub iter: usize,
    pub action: T,
    pub boundedness: T,
    pub volume: T,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimized<T: Real> {
    pub measure: DiscreteMeasure<T>,
    /// Entry 0 is the start; entry `k` is the current state after
    /// iteration `k`.
    pub log: Vec<IterationLog<T>>,
}

/// Projects a selfadjoint matrix to the admissible operators: keeps the `n`
/// largest positive and the `n` most negative eigenvalues.
pub fn clip_to_signature<T: Real>(m: &CMat<T>, cfg: &HilbertConfig<T>) -> Result<Operator<T>> {
    let (values, vectors) = hermitian_eigen(&hermitian_part(m));
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
    let keep_pos = order.iter().copied().take(cfg.n).filter(|&i| values[i] > T::zero());
    let keep_neg = order.iter().rev().copied().take(cfg.n).filter(|&i| values[i] < T::zero());
    let mut out = CMat::zeros(cfg.d, cfg.d);
    for i in keep_pos.chain(keep_neg) {
        let v = vectors.column(i);
        out += v * v.adjoint() * creal(values[i]);
    }
    Operator::new(hermitian_part(&out), cfg)
}

fn objective<T: Real>(report: &ActionReport<T>, kappa: T) -> T {
    report.action + kappa * report.boundedness
}

fn log_entry<T: Real>(iter: usize, r: &ActionReport<T>, accepted: bool) -> IterationLog<T> {
    IterationLog { iter, action: r.action, boundedness: r.boundedness, volume: r.volume, accepted }
}

fn propose_point<T: Real>(
    rho: &DiscreteMeasure<T>,
    i: usize,
    sigma: f64,
    opts: &MinimizeOptions,
    rng: &mut ChaCha8Rng,
) -> Option<Operator<T>> {
    let x = &rho.points[i];
    let cfg = &rho.cfg;
    let h = random_hermitian::<T, _>(cfg.d, rng);
    let scale = lit::<T>(sigma) * x.norm().max(T::one()) / spectral_norm(&h);
    let moved = clip_to_signature(&(x.matrix() + h * creal(scale)), cfg).ok()?;
    if !opts.fix_trace {
        return Some(moved);
    }
    let (old, new) = (x.trace(), moved.trace());
    let tiny = lit::<T>(1e-12) * x.norm().max(T::one());
    if old.abs() <= tiny {
        return (new.abs() <= tiny).then_some(moved);
    }
    let factor = old / new;
    if new.abs() <= tiny || factor <= T::zero() {
        return None;
    }
    moved.scaled(factor).ok()
}

/// Random-perturbation descent on `𝒮 + κ Σ c_i c_j |x_i x_j|²` at fixed
/// volume. Each iteration proposes either a point move (projected back by
/// [`clip_to_signature`]) or a mass transfer between two points, and
/// accepts it only on strict decrease. Step sizes adapt to the acceptance
/// rate. No optimality is claimed.
pub fn minimize_action<T: Real>(
    rho0: &DiscreteMeasure<T>,
    kappa: T,
    budget: usize,
    seed: u64,
    opts: &MinimizeOptions,
) -> Minimized<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rho = rho0.clone();
    let mut report = causal_action(&rho);
    let mut log = vec![log_entry(0, &report, true)];
    let m = rho.len();
    let (mut sigma_point, mut sigma_weight) = (opts.initial_step, 0.5);

    for iter in 1..=budget {
        if m == 0 {
            log.push(log_entry(iter, &report, false));
            continue;
        }
        let weight_move = m >= 2 && rng.random_bool(0.3);
        let mut candidate = rho.clone();
        if weight_move {
            let i = rng.random_range(0..m);
            let j = (i + rng.random_range(1..m)) % m;
            let frac = lit::<T>(sigma_weight * rng.random::<f64>());
            let delta = candidate.weights[i] * frac;
            candidate.weights[i] -= delta;
            candidate.weights[j] += delta;
            if candidate.weights[i] <= T::zero() {
                log.push(log_entry(iter, &report, false));
                continue;
            }
        } else {
            let i = rng.random_range(0..m);
            match propose_point(&rho, i, sigma_point, opts, &mut rng) {
                Some(x) => candidate.points[i] = x,
                None => {
                    sigma_point *= 0.95;
                    log.push(log_entry(iter, &report, false));
                    continue;
                }
            }
        }
        let trial = causal_action(&candidate);
        let accepted = objective(&trial, kappa) < objective(&report, kappa);
        let sigma = if weight_move { &mut sigma_weight } else { &mut sigma_point };
        if accepted {
            rho = candidate;
            report = trial;
            *sigma = (*sigma * 1.2).min(if weight_move { 0.9 } else { 1.0 });
        } else {
            *sigma *= 0.95;
        }
        log.push(log_entry(iter, &report, accepted));
    }
    Minimized { measure: rho, log }
}
