//! Derivatives of non-smooth functions restricted to finite-dimensional
//! subspaces, and numerical checks of the chain rules along curves.
//!
//! The maximal admissible subspace is not computable. Callers supply a
//! subspace; [`admissibility_probe`] gives a heuristic, finite-sample
//! verdict on whether it is admissible.

use rayon::prelude::*;

use crate::chart::{forward_matrix, TangentVector};
use crate::error::{CfsError, Result};
use crate::fd::{curve_derivative, default_step, difference, mixed_central, richardson, LinearSpace};
use crate::lagrangian::kernel_between;
use crate::linalg::spectral_norm;
use crate::measure::{ell, DiscreteMeasure};
use crate::operator::{Operator, SpinSpaceFrame};
use crate::scalar::{eps, lit, to_f64, CMat, Real};

/// Directions spanning a finite-dimensional subspace through `origin`.
#[derive(Debug, Clone)]
pub struct SubspaceBasis<T: Real, V> {
    origin: V,
    vectors: Vec<V>,
    tol: T,
}

fn gram<T: Real, V: LinearSpace<T>>(vs: &[V]) -> nalgebra::DMatrix<T> {
    nalgebra::DMatrix::from_fn(vs.len(), vs.len(), |i, j| vs[i].inner(&vs[j]))
}

fn normalized<T: Real, V: LinearSpace<T>>(v: &V) -> Option<V> {
    let n = v.magnitude();
    (n > T::zero()).then(|| v.scaled(T::one() / n))
}

/// Determinant of the Gram matrix of the normalized vectors; 1 for an
/// orthogonal family, 0 for a dependent one.
fn independence<T: Real, V: LinearSpace<T>>(vs: &[V]) -> T {
    let unit: Option<Vec<V>> = vs.iter().map(normalized).collect();
    match unit {
        Some(u) => gram(&u).determinant(),
        None => T::zero(),
    }
}

impl<T: Real, V: LinearSpace<T>> SubspaceBasis<T, V> {
    /// Fails unless the vectors are linearly independent, measured by the
    /// normalized Gram determinant against `tol`.
    pub fn new(origin: V, vectors: Vec<V>, tol: T) -> Result<Self> {
        if !vectors.is_empty() && independence(&vectors) <= tol {
            return Err(CfsError::InvalidArgument("subspace vectors are linearly dependent".into()));
        }
        Ok(Self { origin, vectors, tol })
    }

    /// Greedily keeps the vectors that enlarge the span.
    pub fn spanned_by(origin: V, candidates: &[V], tol: T) -> Self {
        let mut vectors: Vec<V> = Vec::new();
        for c in candidates {
            let mut trial = vectors.clone();
            trial.push(c.clone());
            if independence(&trial) > tol {
                vectors = trial;
            }
        }
        Self { origin, vectors, tol }
    }

    pub fn origin(&self) -> &V {
        &self.origin
    }

    pub fn vectors(&self) -> &[V] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Norm of the component of `v` orthogonal to the span, relative to `|v|`.
    pub fn distance_to_span(&self, v: &V) -> T {
        let norm = v.magnitude();
        if norm == T::zero() {
            return T::zero();
        }
        if self.vectors.is_empty() {
            return T::one();
        }
        let g = gram(&self.vectors);
        let rhs = nalgebra::DVector::from_iterator(self.vectors.len(), self.vectors.iter().map(|b| b.inner(v)));
        let Some(coef) = g.lu().solve(&rhs) else { return T::one() };
        let proj = self.vectors.iter().zip(coef.iter()).fold(v.zero_like(), |acc, (b, &c)| acc.add_scaled(c, b));
        difference(v, &proj).magnitude() / norm
    }

    pub fn contains(&self, v: &V) -> bool {
        self.distance_to_span(v) <= self.tol.sqrt()
    }
}

/// Derivative estimates at three step sizes with the convergence
/// diagnostics used to accept or reject them.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeDiagnostics {
    pub h: f64,
    /// Stencil values at `h`, `h/2`, `h/4`.
    pub estimates: [f64; 3],
    pub cauchy_ok: bool,
    /// One-sided quotient disagreement at `h` and `h/4`; first order only.
    pub one_sided_gap: Option<(f64, f64)>,
    pub value: f64,
}

impl DerivativeDiagnostics {
    pub fn converged(&self) -> bool {
        self.cauchy_ok && self.one_sided_gap.is_none_or(|(coarse, fine)| fine <= gap_limit(coarse, self.value))
    }
}

fn gap_limit(coarse: f64, value: f64) -> f64 {
    (0.5 * coarse).max(f64::EPSILON.sqrt() * value.abs().max(1.0))
}

/// Runs the stencils for `D^k f|_origin(dirs)` and reports the convergence
/// diagnostics without deciding.
pub fn derivative_diagnostics<T, V, F>(f: &F, origin: &V, dirs: &[V]) -> Result<DerivativeDiagnostics>
where
    T: Real,
    V: LinearSpace<T>,
    F: Fn(&V) -> Result<T>,
{
    let k = dirs.len();
    let norms: Vec<T> = dirs.iter().map(LinearSpace::magnitude).collect();
    if norms.iter().any(|&n| n == T::zero()) {
        return Ok(DerivativeDiagnostics {
            h: 0.0,
            estimates: [0.0; 3],
            cauchy_ok: true,
            one_sided_gap: None,
            value: 0.0,
        });
    }
    let unit: Vec<V> = dirs.iter().zip(&norms).map(|(d, &n)| d.scaled(T::one() / n)).collect();
    let factor = norms.iter().fold(T::one(), |a, &n| a * n);
    let h = default_step(k, origin.magnitude());
    let steps = [h, h * lit(0.5), h * lit(0.25)];
    let mut d = [T::zero(); 3];
    for (slot, &s) in d.iter_mut().zip(&steps) {
        *slot = mixed_central(f, origin, &unit, s)?;
    }
    let f0 = f(origin)?;
    let fscale = f0.abs().max(T::one());
    let e1 = (d[0] - d[1]).abs();
    let e2 = (d[1] - d[2]).abs();
    let value = richardson(&d[1], &d[2]);
    let floor =
        lit::<T>(100.0) * eps::<T>() * fscale / steps[2].powi(k as i32) + lit::<T>(1e-8) * value.abs().max(T::one());
    let cauchy_ok = e2 <= (e1 * lit(0.5)).max(floor);

    let one_sided_gap = if k == 1 {
        let gap = |s: T| -> Result<T> {
            let fwd = (f(&origin.add_scaled(s, &unit[0]))? - f0) / s;
            let bwd = (f0 - f(&origin.add_scaled(-s, &unit[0]))?) / s;
            Ok((fwd - bwd).abs())
        };
        Some((to_f64(gap(steps[0])?), to_f64(gap(steps[2])?)))
    } else {
        None
    };
    Ok(DerivativeDiagnostics {
        h: to_f64(h),
        estimates: d.map(|v| to_f64(v * factor)),
        cauchy_ok,
        one_sided_gap: one_sided_gap.map(|(a, b)| (a * to_f64(factor), b * to_f64(factor))),
        value: to_f64(value * factor),
    })
}

/// `D^k f|_origin(h_1, …, h_k)` for directions in the subspace `basis`,
/// via central mixed differences at three refinements and a Richardson
/// step. Fails with `NonDifferentiableDirection` when the refinements do
/// not converge.
pub fn subspace_derivative<T, V, F>(f: &F, basis: &SubspaceBasis<T, V>, dirs: &[V]) -> Result<T>
where
    T: Real,
    V: LinearSpace<T>,
    F: Fn(&V) -> Result<T>,
{
    if dirs.is_empty() {
        return f(&basis.origin);
    }
    if let Some(i) = dirs.iter().position(|d| !basis.contains(d)) {
        return Err(CfsError::InvalidArgument(format!("direction {i} is not in the subspace")));
    }
    let diag = derivative_diagnostics(f, &basis.origin, dirs)?;
    if !diag.converged() {
        return Err(CfsError::NonDifferentiableDirection(format!(
            "order {} quotients {:?}, one-sided gap {:?}",
            dirs.len(),
            diag.estimates,
            diag.one_sided_gap
        )));
    }
    Ok(lit(diag.value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEntry {
    /// Indices into the subspace basis, nondecreasing.
    pub multi_index: Vec<usize>,
    pub diagnostics: Option<DerivativeDiagnostics>,
    /// `|D(origin + r w) - D(origin)|` for `r = 1e-2, 1e-3` along the
    /// normalized sum `w` of the basis vectors.
    pub continuity: Option<(f64, f64)>,
    pub passed: bool,
    pub note: Option<String>,
}

/// Finite-sample admissibility diagnostics. The verdict is heuristic:
/// continuity of derivatives cannot be decided from samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub order: usize,
    pub entries: Vec<ProbeEntry>,
    pub heuristic_verdict: bool,
}

fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..order {
        let mut next = Vec::new();
        for idx in &current {
            let start = idx.last().copied().unwrap_or(0);
            for i in start..dim {
                let mut e = idx.clone();
                e.push(i);
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        current = next;
    }
    out
}

/// Probes every mixed partial of order `1..=order` along the basis:
/// convergence under step refinement, one-sided agreement at first order,
/// and continuity of the derivative at two nearby base points.
pub fn admissibility_probe<T, V, F>(f: &F, basis: &SubspaceBasis<T, V>, order: usize) -> ProbeReport
where
    T: Real,
    V: LinearSpace<T> + Send + Sync,
    F: Fn(&V) -> Result<T> + Sync,
{
    let entries: Vec<ProbeEntry> =
        multi_indices(basis.dim(), order).into_par_iter().map(|idx| probe_one(f, basis, idx)).collect();
    let heuristic_verdict = entries.iter().all(|e| e.passed);
    ProbeReport { order, entries, heuristic_verdict }
}

fn probe_one<T, V, F>(f: &F, basis: &SubspaceBasis<T, V>, multi_index: Vec<usize>) -> ProbeEntry
where
    T: Real,
    V: LinearSpace<T>,
    F: Fn(&V) -> Result<T>,
{
    let dirs: Vec<V> = multi_index.iter().map(|&i| basis.vectors[i].clone()).collect();
    let fail = |note: String, diagnostics, continuity| ProbeEntry {
        multi_index: multi_index.clone(),
        diagnostics,
        continuity,
        passed: false,
        note: Some(note),
    };
    let at = match derivative_diagnostics(f, &basis.origin, &dirs) {
        Ok(d) => d,
        Err(e) => return fail(e.to_string(), None, None),
    };
    if !at.converged() {
        return fail("difference quotients do not converge".into(), Some(at), None);
    }
    let shift = basis.vectors.iter().fold(basis.origin.zero_like(), |a, v| a.add_scaled(T::one(), v));
    let Some(shift) = normalized(&shift) else {
        return fail("empty subspace".into(), Some(at), None);
    };
    let mut near = [0.0; 2];
    for (slot, r) in near.iter_mut().zip([1e-2, 1e-3]) {
        match derivative_diagnostics(f, &basis.origin.add_scaled(lit(r), &shift), &dirs) {
            Ok(d) if d.converged() => *slot = (d.value - at.value).abs(),
            Ok(d) => return fail(format!("quotients do not converge at offset {r}"), Some(d), None),
            Err(e) => return fail(e.to_string(), Some(at), None),
        }
    }
    let tol = 1e-6 * at.value.abs().max(1.0);
    let continuous = near[1] <= (0.5 * near[0]).max(tol);
    ProbeEntry {
        multi_index,
        diagnostics: Some(at),
        continuity: Some((near[0], near[1])),
        passed: continuous,
        note: (!continuous).then(|| "derivative jumps near the base point".into()),
    }
}

type Evaluator<T, V> = Box<dyn Fn(T) -> Result<V> + Send + Sync>;

/// A smooth curve `t ↦ γ(t)` in some coordinate space with the derivatives
/// `γ^{(1)}, …, γ^{(p)}` at `t0`.
pub struct SmoothCurve<T: Real, V> {
    eval: Evaluator<T, V>,
    t0: T,
    derivatives: Vec<V>,
}

impl<T: Real, V: LinearSpace<T>> std::fmt::Debug for SmoothCurve<T, V> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothCurve")
            .field("t0", &to_f64(self.t0))
            .field("derivatives", &self.derivatives.len())
            .finish()
    }
}

impl<T: Real, V: LinearSpace<T>> SmoothCurve<T, V> {
    /// Curve with analytically known derivatives.
    pub fn new(eval: impl Fn(T) -> Result<V> + Send + Sync + 'static, t0: T, derivatives: Vec<V>) -> Self {
        Self { eval: Box::new(eval), t0, derivatives }
    }

    /// Curve whose first `p` derivatives are estimated by central
    /// differences.
    pub fn from_fd(eval: impl Fn(T) -> Result<V> + Send + Sync + 'static, t0: T, p: usize) -> Result<Self> {
        let mut curve = Self { eval: Box::new(eval), t0, derivatives: Vec::new() };
        curve.derivatives = curve.fd_derivatives(p)?;
        Ok(curve)
    }

    fn fd_derivatives(&self, p: usize) -> Result<Vec<V>> {
        (1..=p).map(|k| curve_derivative(&|t: T| (self.eval)(t), self.t0, k, default_step(k, self.t0.abs()))).collect()
    }

    pub fn eval(&self, t: T) -> Result<V> {
        (self.eval)(t)
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn base(&self) -> Result<V> {
        (self.eval)(self.t0)
    }

    pub fn derivatives(&self) -> &[V] {
        &self.derivatives
    }

    /// Largest relative disagreement between the cached derivatives and a
    /// fresh finite-difference estimate.
    pub fn consistency_defect(&self) -> Result<T> {
        let fresh = self.fd_derivatives(self.derivatives.len())?;
        Ok(fresh
            .iter()
            .zip(&self.derivatives)
            .fold(T::zero(), |acc, (a, b)| acc.max(difference(a, b).magnitude() / b.magnitude().max(T::one()))))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainStep {
    pub h: f64,
    pub lhs: f64,
    pub residual: f64,
}

/// Finite-difference derivative of `f ∘ γ` against the chain-rule side
/// built from subspace derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub order: usize,
    /// Tangents required, `⌈q / α⌉`.
    pub tangents_required: usize,
    /// Dimension of the subspace spanned by the supplied derivatives.
    pub subspace_dim: usize,
    pub rhs: f64,
    /// Residual at the smallest step.
    pub residual_abs: f64,
    pub residual_rel: f64,
    /// Log-log slope of residual against step over points above the
    /// rounding floor; infinite when every residual sits at the floor.
    pub decay_order: f64,
    pub steps: Vec<ChainStep>,
}

/// `⌈q / α⌉`.
pub fn required_tangents(q: usize, alpha: f64) -> usize {
    (q as f64 / alpha - 1e-9).ceil().max(1.0) as usize
}

pub const CHAIN_STEPS: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];
pub const CHAIN_STEPS_ORDER2: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
pub const CHAIN_STEPS_ORDER3: [f64; 5] = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3];

/// `(f ∘ γ)'(t0) = D f|_{γ(t0)} γ'(t0)` with the derivative taken in the
/// subspace spanned by the supplied curve derivatives.
pub fn chain_rule_check<T, V, F>(f: &F, gamma: &SmoothCurve<T, V>, alpha: f64) -> Result<ChainReport>
where
    T: Real,
    V: LinearSpace<T>,
    F: Fn(&V) -> Result<T>,
{
    higher_chain_rule_check(f, gamma, alpha, 1)
}

/// Order-`q` chain rule (Faà di Bruno) for `q ≤ 3`:
/// `q = 2`: `f''(γ', γ') + f'(γ'')`;
/// `q = 3`: `f'''(γ', γ', γ') + 3 f''(γ'', γ') + f'(γ''')`.
pub fn higher_chain_rule_check<T, V, F>(f: &F, gamma: &SmoothCurve<T, V>, alpha: f64, q: usize) -> Result<ChainReport>
where
    T: Real,
    V: LinearSpace<T>,
    F: Fn(&V) -> Result<T>,
{
    if q == 0 || q > 3 {
        return Err(CfsError::UnsupportedOrder(q));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(CfsError::InvalidArgument(format!("Hölder exponent {alpha} outside (0, 1]")));
    }
    let required = required_tangents(q, alpha).max(q);
    let supplied = gamma.derivatives.len();
    if supplied < required {
        return Err(CfsError::InsufficientTangents { required, supplied });
    }
    let origin = gamma.base()?;
    let basis = SubspaceBasis::spanned_by(origin.clone(), &gamma.derivatives[..required], eps::<T>().sqrt());
    let g = &gamma.derivatives;
    let d = |dirs: &[&V]| -> Result<f64> {
        let owned: Vec<V> = dirs.iter().map(|v| (*v).clone()).collect();
        subspace_derivative(f, &basis, &owned).map(to_f64)
    };
    let rhs = match q {
        1 => d(&[&g[0]])?,
        2 => d(&[&g[0], &g[0]])? + d(&[&g[1]])?,
        _ => d(&[&g[0], &g[0], &g[0]])? + 3.0 * d(&[&g[1], &g[0]])? + d(&[&g[2]])?,
    };

    let f0 = to_f64(f(&origin)?).abs().max(1.0);
    let composed = |t: T| -> Result<T> { f(&gamma.eval(t)?) };
    let schedule: &[f64] = match q {
        1 => &CHAIN_STEPS,
        2 => &CHAIN_STEPS_ORDER2,
        _ => &CHAIN_STEPS_ORDER3,
    };
    let mut steps = Vec::with_capacity(schedule.len());
    for &h in schedule {
        let lhs = to_f64(curve_derivative(&composed, gamma.t0, q, lit(h))?);
        steps.push(ChainStep { h, lhs, residual: (lhs - rhs).abs() });
    }
    let last = steps.last().expect("nonempty schedule");
    let residual_abs = last.residual;
    let residual_rel = residual_abs / rhs.abs().max(f64::EPSILON * f0);
    let decay_order = decay_order(&steps, q, f0);
    Ok(ChainReport {
        order: q,
        tangents_required: required,
        subspace_dim: basis.dim(),
        rhs,
        residual_abs,
        residual_rel,
        decay_order,
        steps,
    })
}

fn decay_order(steps: &[ChainStep], q: usize, f_scale: f64) -> f64 {
    // Evaluation noise of f can sit well above eps·|f|; once a residual
    // stops shrinking the schedule has left the truncation regime.
    let regime = 1 + steps.windows(2).take_while(|w| w[1].residual < w[0].residual).count();
    let above: Vec<&ChainStep> = steps[..regime.min(steps.len())]
        .iter()
        .filter(|s| s.residual > 10.0 * f64::EPSILON * f_scale / s.h.powi(q as i32))
        .collect();
    if above.len() < 2 {
        return f64::INFINITY;
    }
    let xs: Vec<f64> = above.iter().map(|s| s.h.ln()).collect();
    let ys: Vec<f64> = above.iter().map(|s| s.residual.ln()).collect();
    crate::hoelder::linear_regression(&xs, &ys).0
}

/// `∇_(a,u) ℓ = a ℓ(x) + D_u ℓ(x)` at the base point of `u`, with the
/// directional derivative taken in the chart of `u`.
pub fn jet_derivative_ell<T: Real>(a: T, u: &TangentVector<T>, rho: &DiscreteMeasure<T>, s: T) -> Result<T> {
    let x = &u.base;
    let value = ell(x, rho, s);
    if u.v.iter().all(|z| z.re == T::zero() && z.im == T::zero()) {
        return Ok(a * value);
    }
    let frame = &u.anchor;
    let f = |psi: &CMat<T>| -> Result<T> {
        let y = Operator::new(forward_matrix(frame, psi), frame.config())?;
        Ok(ell(&y, rho, s))
    };
    let basis = SubspaceBasis::new(u.base_coords()?, vec![u.v.clone()], eps::<T>().sqrt())?;
    Ok(a * value + subspace_derivative(&f, &basis, std::slice::from_ref(&u.v))?)
}

/// `max_τ Σ_i c_i ||P(γ(τ), y_i)||⁴ ||Y_i⁻¹||²` for a curve given in the
/// chart coordinates of `frame`.
pub fn ell_curve_condition<T: Real>(
    frame: &SpinSpaceFrame<T>,
    gamma: &SmoothCurve<T, CMat<T>>,
    rho: &DiscreteMeasure<T>,
    taus: &[T],
) -> Result<T> {
    if rho.is_empty() {
        return Ok(T::zero());
    }
    let targets = rho
        .points()
        .iter()
        .map(|y| {
            let fy = SpinSpaceFrame::new(y)?;
            let inv = spectral_norm(&fy.x_inv);
            Ok((fy, inv * inv))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst = T::zero();
    for &tau in taus {
        let x = Operator::new(forward_matrix(frame, &gamma.eval(tau)?), frame.config())?;
        let fx = SpinSpaceFrame::new(&x)?;
        let sum = targets.iter().zip(rho.weights()).fold(T::zero(), |acc, ((fy, inv2), &c)| {
            let p = spectral_norm(&kernel_between(&fx, fy));
            acc + c * p.powi(4) * *inv2
        });
        worst = worst.max(sum);
    }
    Ok(worst)
}
