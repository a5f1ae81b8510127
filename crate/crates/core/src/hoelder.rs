//! Empirical Hölder exponents of the Lagrangian and the boundedness
//! integrand, and the scale-free global bound ratio.

use rayon::prelude::*;

use crate::error::{CfsError, Result};
use crate::lagrangian::{boundedness_integrand, lagrangian};
use crate::linalg::{column_space, spectral_norm};
use crate::operator::{HilbertConfig, Operator};
use crate::scalar::{creal, lit, to_f64, CMat, Real};

/// Number of smallest steps used for the asymptotic fit.
pub const TAIL_POINTS: usize = 10;
/// Decades the fitted tail must span for a confident fit.
pub const TAIL_DECADES: f64 = 2.0;
/// Deltas below this (relative to `max(1, |base value|)`) count as zero.
pub const ZERO_DELTA: f64 = 1e-14;

/// Power-law fit `delta ≈ constant * t^exponent` of a perturbation scan.
#[derive(Debug, Clone, PartialEq)]
pub struct HoelderFit {
    pub exponent_hat: f64,
    pub constant_hat: f64,
    pub r2: f64,
    pub n_points: usize,
    /// `(t, delta)` with strictly decreasing `t`.
    pub scan: Vec<(f64, f64)>,
    /// All deltas vanish; no fit was attempted.
    pub exact_zero: bool,
    /// The fitted tail spans fewer than [`TAIL_DECADES`] decades.
    pub low_confidence: bool,
}

impl HoelderFit {
    /// `(t, delta, delta / t^alpha)` rows.
    pub fn ratio_rows(&self, alpha: f64) -> Vec<(f64, f64, f64)> {
        self.scan.iter().map(|&(t, d)| (t, d, d / t.powf(alpha))).collect()
    }

    /// True when `delta / t^alpha` does not grow as `t` decreases: every
    /// ratio stays below `growth_limit` times the ratio at the largest step.
    pub fn ratio_bounded(&self, alpha: f64, growth_limit: f64) -> bool {
        let rows = self.ratio_rows(alpha);
        let Some(&(_, _, first)) = rows.first() else { return true };
        rows.iter().all(|&(_, _, r)| r.is_finite() && r <= growth_limit * first.max(f64::MIN_POSITIVE))
    }
}

/// Least-squares slope and intercept of `y` on `x`, plus `r²`.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

fn check_steps(steps: &[f64]) -> Result<()> {
    if steps.len() < 2 {
        return Err(CfsError::InvalidArgument("a scan needs at least two steps".into()));
    }
    if steps.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(CfsError::InvalidArgument("steps must be positive and finite".into()));
    }
    if steps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CfsError::InvalidArgument("steps must be strictly decreasing".into()));
    }
    Ok(())
}

/// Fits `log delta` against `log t` over the smallest [`TAIL_POINTS`] steps,
/// extending the tail until it spans [`TAIL_DECADES`] decades if possible.
pub fn fit_power_law(scan: Vec<(f64, f64)>, base_value: f64) -> HoelderFit {
    let zero = ZERO_DELTA * base_value.abs().max(1.0);
    if scan.iter().all(|&(_, d)| d < zero) {
        return HoelderFit {
            exponent_hat: f64::NAN,
            constant_hat: 0.0,
            r2: f64::NAN,
            n_points: 0,
            scan,
            exact_zero: true,
            low_confidence: false,
        };
    }
    let usable: Vec<(f64, f64)> = scan.iter().copied().filter(|&(_, d)| d >= zero).collect();
    let mut k = TAIL_POINTS.min(usable.len());
    let span = |k: usize| {
        let tail = &usable[usable.len() - k..];
        (tail[0].0 / tail[k - 1].0).log10()
    };
    while k < usable.len() && span(k) < TAIL_DECADES {
        k += 1;
    }
    let tail = &usable[usable.len() - k..];
    let low_confidence = k < 2 || span(k) < TAIL_DECADES;
    let xs: Vec<f64> = tail.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r2) = if k >= 2 { linear_regression(&xs, &ys) } else { (f64::NAN, f64::NAN, f64::NAN) };
    HoelderFit {
        exponent_hat: slope,
        constant_hat: intercept.exp(),
        r2,
        n_points: k,
        scan,
        exact_zero: false,
        low_confidence,
    }
}

fn scan_with<T, F>(y: &Operator<T>, direction: &CMat<T>, steps: &[f64], value: F) -> Result<HoelderFit>
where
    T: Real,
    F: Fn(&Operator<T>) -> T + Sync,
{
    check_steps(steps)?;
    let base = value(y);
    let deltas: Vec<Result<(f64, f64)>> = steps
        .par_iter()
        .map(|&t| {
            let moved = y.shifted(direction, lit(t))?;
            Ok((t, to_f64((value(&moved) - base).abs())))
        })
        .collect();
    let scan = deltas.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(fit_power_law(scan, to_f64(base)))
}

/// Scan of `|ℒ(x, y + t d) - ℒ(x, y)|` over the steps `t`.
pub fn hoelder_scan_lagrangian<T: Real>(
    x: &Operator<T>,
    y: &Operator<T>,
    direction: &CMat<T>,
    steps: &[f64],
) -> Result<HoelderFit> {
    scan_with(y, direction, steps, |moved| lagrangian(x, moved))
}

/// Scan of `||x y|² - |x ỹ|²|` with `ỹ = y + t d`.
pub fn hoelder_scan_boundedness<T: Real>(
    x: &Operator<T>,
    y: &Operator<T>,
    direction: &CMat<T>,
    steps: &[f64],
) -> Result<HoelderFit> {
    scan_with(y, direction, steps, |moved| boundedness_integrand(x, moved))
}

/// `count` logarithmically spaced steps from `from` down to `to`.
pub fn log_steps(from: f64, to: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![from];
    }
    let (a, b) = (from.ln(), to.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}

/// Hölder exponent `1 / (2n - 1)` of the Lagrangian.
pub fn lagrangian_exponent(n: usize) -> f64 {
    1.0 / (2 * n - 1) as f64
}

/// A base pair with a perturbation direction, together with the exponent
/// the construction is designed to exhibit.
#[derive(Debug, Clone)]
pub struct ScanCase<T: Real> {
    pub x: Operator<T>,
    pub y: Operator<T>,
    pub direction: CMat<T>,
    pub expected_exponent: f64,
}

/// `k x k` antidiagonal flip.
fn flip<T: Real>(k: usize) -> CMat<T> {
    CMat::from_fn(k, k, |r, c| if r + c + 1 == k { creal(T::one()) } else { creal(T::zero()) })
}

/// `k x k` nilpotent Jordan block.
fn jordan<T: Real>(k: usize) -> CMat<T> {
    CMat::from_fn(k, k, |r, c| if c == r + 1 { creal(T::one()) } else { creal(T::zero()) })
}

fn embed_block<T: Real>(d: usize, blocks: &[CMat<T>]) -> CMat<T> {
    let mut m = CMat::zeros(d, d);
    let mut at = 0;
    for b in blocks {
        m.view_mut((at, at), (b.nrows(), b.ncols())).copy_from(b);
        at += b.nrows();
    }
    m
}

/// Pair for which `xy` has one eigenvalue (zero) of multiplicity `k = 2n-1`
/// and one eigenvalue `b`:
/// `x = F_k ⊕ (-1)`, `y = F_k J_k ⊕ (-b)`, `xy = J_k ⊕ b`, where `F_k` is the
/// flip and `J_k` the nilpotent Jordan block. Moving `y` along `E_00` puts
/// `t` in the corner of the Jordan block, so the `k` small eigenvalues have
/// modulus `t^{1/k}` and
/// `ℒ(x, y + t E_00) = (k / 2n) (b - t^{1/k})²`.
pub fn degenerate_case<T: Real>(cfg: &HilbertConfig<T>, b: f64) -> Result<ScanCase<T>> {
    let k = 2 * cfg.n - 1;
    let minus = |v: f64| CMat::from_element(1, 1, creal(lit::<T>(-v)));
    let x = embed_block(cfg.d, &[flip(k), minus(1.0)]);
    let y = embed_block(cfg.d, &[flip::<T>(k) * jordan::<T>(k), minus(b)]);
    let mut direction = CMat::zeros(cfg.d, cfg.d);
    direction[(0, 0)] = creal(T::one());
    Ok(ScanCase { x: Operator::new(x, cfg)?, y: Operator::new(y, cfg)?, direction, expected_exponent: 1.0 / k as f64 })
}

/// Closed form of `ℒ` along [`degenerate_case`].
pub fn degenerate_case_lagrangian(n: usize, b: f64, t: f64) -> f64 {
    let k = (2 * n - 1) as f64;
    let s = t.powf(1.0 / k);
    k / (2 * n) as f64 * (b - s) * (b - s)
}

/// Pair with `xy = J_{2n}`, all `2n` eigenvalues degenerate at zero:
/// `x = F_{2n}`, `y = F_{2n} J_{2n}`, moved along `-E_00`. Then
/// `|x ỹ|² = 4n² t^{1/n}`.
pub fn boundedness_case<T: Real>(cfg: &HilbertConfig<T>) -> Result<ScanCase<T>> {
    let g = 2 * cfg.n;
    let x = embed_block(cfg.d, &[flip(g)]);
    let y = embed_block(cfg.d, &[flip::<T>(g) * jordan::<T>(g)]);
    let mut direction = CMat::zeros(cfg.d, cfg.d);
    direction[(0, 0)] = creal(-T::one());
    Ok(ScanCase {
        x: Operator::new(x, cfg)?,
        y: Operator::new(y, cfg)?,
        direction,
        expected_exponent: 1.0 / cfg.n as f64,
    })
}

/// Outcome of the global Hölder comparison for one triple `(x, y, ỹ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalBoundReport {
    pub exponent: f64,
    pub delta_l: f64,
    /// `|Δℒ| / (||y||^{2-α} ||x||² ||ỹ - y||^α)`.
    pub ratio: f64,
    /// Same quantity with the Lagrangian evaluated as `ℒ(y, x) - ℒ(ỹ, x)`.
    pub ratio_swapped: f64,
    /// `||x||²`, the fixed-argument factor of the bound.
    pub coarse_factor: f64,
    /// `||π_J x π_J||²` with `J = span(S_y, S_ỹ)`.
    pub refined_factor: f64,
    /// `|Δℒ|` recomputed with `x` replaced by `π_J x π_J`.
    pub delta_l_refined: f64,
    /// `||ỹ - y|| <= 0.1 ||y||`.
    pub in_neighborhood: bool,
}

/// Orthogonal projection onto `span(S_a, S_b)`.
pub fn joint_range_projector<T: Real>(a: &Operator<T>, b: &Operator<T>) -> CMat<T> {
    let ra = a.range_basis();
    let rb = b.range_basis();
    let mut both = CMat::zeros(a.config().d, ra.ncols() + rb.ncols());
    both.columns_mut(0, ra.ncols()).copy_from(&ra);
    both.columns_mut(ra.ncols(), rb.ncols()).copy_from(&rb);
    let basis = column_space(&both, lit(1e-10));
    &basis * basis.adjoint()
}

pub fn global_bound_check<T: Real>(
    x: &Operator<T>,
    y: &Operator<T>,
    y_tilde: &Operator<T>,
) -> Result<GlobalBoundReport> {
    let alpha = lagrangian_exponent(x.config().n);
    let norm_x = to_f64(x.norm());
    let norm_y = to_f64(y.norm());
    let step = to_f64(spectral_norm(&(y_tilde.matrix() - y.matrix())));
    let denom = norm_y.powf(2.0 - alpha) * norm_x * norm_x * step.powf(alpha);

    let delta_l = to_f64((lagrangian(x, y) - lagrangian(x, y_tilde)).abs());
    let delta_swapped = to_f64((lagrangian(y, x) - lagrangian(y_tilde, x)).abs());

    let pj = joint_range_projector(y, y_tilde);
    let x_compressed = Operator::new(&pj * x.matrix() * &pj, x.config())?;
    let refined = to_f64(x_compressed.norm());
    let delta_refined = to_f64((lagrangian(&x_compressed, y) - lagrangian(&x_compressed, y_tilde)).abs());

    Ok(GlobalBoundReport {
        exponent: alpha,
        delta_l,
        ratio: delta_l / denom,
        ratio_swapped: delta_swapped / denom,
        coarse_factor: norm_x * norm_x,
        refined_factor: refined * refined,
        delta_l_refined: delta_refined,
        in_neighborhood: step <= 0.1 * norm_y,
    })
}

/// `ℒ(x, ỹ) / (||x||² ||ỹ||²)`, the ratio of the improved bound at `y = 0`.
pub fn zero_branch_ratio<T: Real>(x: &Operator<T>, y_tilde: &Operator<T>) -> f64 {
    let nx = to_f64(x.norm());
    let ny = to_f64(y_tilde.norm());
    if nx == 0.0 || ny == 0.0 {
        return 0.0;
    }
    to_f64(lagrangian(x, y_tilde)) / (nx * nx * ny * ny)
}

/// Empirical lower estimate of the global Hölder constant `c(n)`: the
/// largest normalized ratio over random triples with `ỹ - y` supported on
/// the range of `y` and over the degenerate construction. No sharpness is
/// claimed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimate {
    pub n: usize,
    pub samples: usize,
    pub max_ratio: f64,
    pub max_ratio_swapped: f64,
    pub max_zero_branch: f64,
}

pub fn estimate_global_constant<T: Real>(cfg: &HilbertConfig<T>, trials: usize, seed: u64) -> Result<ConstantEstimate> {
    use crate::random::{random_admissible_direction, random_regular_operator};
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut est =
        ConstantEstimate { n: cfg.n, samples: 0, max_ratio: 0.0, max_ratio_swapped: 0.0, max_zero_branch: 0.0 };
    let mut record = |r: &GlobalBoundReport, zero: f64| {
        est.samples += 1;
        est.max_ratio = est.max_ratio.max(r.ratio);
        est.max_ratio_swapped = est.max_ratio_swapped.max(r.ratio_swapped);
        est.max_zero_branch = est.max_zero_branch.max(zero);
    };
    for _ in 0..trials {
        let x = random_regular_operator(cfg, &mut rng);
        let y = random_regular_operator(cfg, &mut rng);
        let dir = random_admissible_direction(&y, &mut rng);
        for t in [0.5, 1e-2, 1e-4] {
            let yt = y.shifted(&dir, lit(t))?;
            record(&global_bound_check(&x, &y, &yt)?, zero_branch_ratio(&x, &yt));
        }
    }
    if cfg.d > 2 * cfg.n {
        let case = degenerate_case(cfg, 1.0)?;
        for t in [1e-2, 1e-4, 1e-6, 1e-8] {
            let yt = case.y.shifted(&case.direction, lit(t))?;
            record(&global_bound_check(&case.x, &case.y, &yt)?, zero_branch_ratio(&case.x, &yt));
        }
    }
    Ok(est)
}
