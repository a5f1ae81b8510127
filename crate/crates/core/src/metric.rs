//! Hilbert-Schmidt embedding of the regular set, its induced metric and the
//! squared distance with its chart derivatives.
//!
//! For a tangent `v` at `x` (coordinates in the chart anchored at `x`) the
//! embedded tangent is `v† x + x v`, the derivative of `ψ ↦ ψ† X ψ` at the
//! chart origin. The chart formula
//! `g̃(u, v) = 4 Re(tr(X v_I X u_I) + tr(X² u v†))` equals exactly twice the
//! trace inner product of the embedded tangents; [`METRIC_SCALE`] records this.

use crate::chart::{chart_inverse_matrix, chart_origin, forward_matrix, TangentVector};
use crate::error::{CfsError, Result};
use crate::fd::{directional_derivative, mixed_central, richardson};
use crate::linalg::{hermitian_part, hs_norm, max_abs, spectral_norm, trace, trace_of_product};
use crate::operator::{Operator, SpinSpaceFrame};
use crate::scalar::{lit, to_f64, CMat, Real};

/// `g̃_x = METRIC_SCALE * g_x`, where `g_x` is the trace inner product of
/// embedded tangents.
pub const METRIC_SCALE: f64 = 2.0;

/// A selfadjoint matrix, viewed as an element of the Hilbert-Schmidt space.
#[derive(Debug, Clone, PartialEq)]
pub struct HsVector<T: Real>(CMat<T>);

impl<T: Real> HsVector<T> {
    pub fn new(mat: CMat<T>, herm_tol: T) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(CfsError::DimensionMismatch {
                expected: "square matrix".into(),
                found: format!("{}x{}", mat.nrows(), mat.ncols()),
            });
        }
        let asymmetry = max_abs(&(&mat - mat.adjoint()));
        let tolerance = herm_tol * max_abs(&mat).max(T::one());
        if asymmetry > tolerance {
            return Err(CfsError::NotSelfadjoint { asymmetry: to_f64(asymmetry), tolerance: to_f64(tolerance) });
        }
        Ok(Self(hermitian_part(&mat)))
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.0
    }
}

/// `Re tr(AB)`.
pub fn hs_inner<T: Real>(a: &HsVector<T>, b: &HsVector<T>) -> T {
    trace_of_product(&a.0, &b.0).re
}

#[derive(Debug, Clone)]
pub struct EmbeddedTangent<T: Real> {
    pub base: Operator<T>,
    /// Chart coordinates of the base point, `(id, 0)`.
    pub psi0: CMat<T>,
    pub v: CMat<T>,
    pub ambient: HsVector<T>,
}

/// `v† X E + E† X v` with `E = (id, 0)`, in frame coordinates.
pub fn embedded_frame_matrix<T: Real>(frame: &SpinSpaceFrame<T>, v: &CMat<T>) -> CMat<T> {
    let e = chart_origin(frame);
    let xv = &frame.x_block * v;
    e.adjoint() * &xv + xv.adjoint() * e
}

fn require_own_anchor<T: Real>(v: &TangentVector<T>) -> Result<()> {
    if v.anchor.base != v.base {
        return Err(CfsError::InvalidArgument("tangent must be anchored at its own base point".into()));
    }
    Ok(())
}

pub fn embed_tangent<T: Real>(v: &TangentVector<T>) -> Result<EmbeddedTangent<T>> {
    require_own_anchor(v)?;
    let frame = &v.anchor;
    let ambient = frame.from_frame(&embedded_frame_matrix(frame, &v.v));
    Ok(EmbeddedTangent {
        base: v.base.clone(),
        psi0: chart_origin(frame),
        v: v.v.clone(),
        ambient: HsVector::new(ambient, frame.config().tol.herm)?,
    })
}

/// `4 Re(tr(X v_I X u_I) + tr(X² u v†))`, traces taken on `S_x`.
pub fn metric_coords<T: Real>(frame: &SpinSpaceFrame<T>, u: &CMat<T>, v: &CMat<T>) -> T {
    let g = frame.spin_rank();
    let x = &frame.x_block;
    let u_i = u.columns(0, g);
    let v_i = v.columns(0, g);
    let first = trace(&(x * v_i * x * u_i));
    let second = trace(&(x * x * u * v.adjoint()));
    lit::<T>(4.0) * (first.re + second.re)
}

pub fn metric<T: Real>(x: &Operator<T>, u: &TangentVector<T>, v: &TangentVector<T>) -> Result<T> {
    for t in [u, v] {
        require_own_anchor(t)?;
        if &t.base != x {
            return Err(CfsError::InvalidArgument("tangent is not attached at the given point".into()));
        }
    }
    Ok(metric_coords(&u.anchor, &u.v, &v.v))
}

/// `tr((x - y)²) = ||x - y||²_HS`.
pub fn dist_sq<T: Real>(x: &Operator<T>, y: &Operator<T>) -> T {
    let diff = x.matrix() - y.matrix();
    let n = hs_norm(&diff);
    n * n
}

/// `E_x ∘ φ_y⁻¹` on chart coordinates of the chart anchored at `chart`.
pub fn dist_sq_in_chart<T: Real>(x: &Operator<T>, chart: &SpinSpaceFrame<T>, psi: &CMat<T>) -> T {
    let n = hs_norm(&(x.matrix() - forward_matrix(chart, psi)));
    n * n
}

/// Closed-form second derivative of `E_x ∘ φ_y⁻¹` at `φ = φ_y(x)`:
/// `4 Re(tr(Y φ v† Y φ u†) + tr(Y u v† Y φ φ†))`.
pub fn dist_sq_hessian_in<T: Real>(chart: &SpinSpaceFrame<T>, phi: &CMat<T>, u: &CMat<T>, v: &CMat<T>) -> T {
    let y = &chart.x_block;
    let y_phi = y * phi;
    let first = trace(&(&y_phi * v.adjoint() * &y_phi * u.adjoint()));
    let second = trace(&(y * u * v.adjoint() * &y_phi * phi.adjoint()));
    lit::<T>(4.0) * (first.re + second.re)
}

/// Hessian of `E_x` in the chart anchored at `x`, where `φ_x(x) = (id, 0)`.
pub fn dist_sq_hessian<T: Real>(x: &Operator<T>, u: &TangentVector<T>, v: &TangentVector<T>) -> Result<T> {
    for t in [u, v] {
        require_own_anchor(t)?;
        if &t.base != x {
            return Err(CfsError::InvalidArgument("tangent is not attached at the given point".into()));
        }
    }
    Ok(dist_sq_hessian_in(&u.anchor, &chart_origin(&u.anchor), &u.v, &v.v))
}

/// Hessian of `E_x` evaluated through the chart of a nearby anchor: the
/// tangents are pushed to `chart` and the closed form is applied at `φ_y(x)`.
pub fn dist_sq_hessian_via<T: Real>(
    chart: &SpinSpaceFrame<T>,
    u: &TangentVector<T>,
    v: &TangentVector<T>,
) -> Result<T> {
    let phi = chart_inverse_matrix(chart, u.base.matrix())?;
    let pu = crate::chart::pushforward(u, chart)?;
    let pv = crate::chart::pushforward(v, chart)?;
    Ok(dist_sq_hessian_in(chart, &phi, &pu.v, &pv.v))
}

/// Finite-difference Hessian of `E_x ∘ φ_x⁻¹` at the chart origin: mixed
/// central stencil at `h` and `h/2`, Richardson-combined.
pub fn fd_dist_sq_hessian<T: Real>(frame: &SpinSpaceFrame<T>, u: &CMat<T>, v: &CMat<T>, h: T) -> Result<T> {
    let x = &frame.base;
    let origin = chart_origin(frame);
    let f = |p: &CMat<T>| -> Result<T> { Ok(dist_sq_in_chart(x, frame, p)) };
    let dirs = [u.clone(), v.clone()];
    let coarse: T = mixed_central(&f, &origin, &dirs, h)?;
    let fine: T = mixed_central(&f, &origin, &dirs, h * lit(0.5))?;
    Ok(richardson(&coarse, &fine))
}

/// Finite-difference gradient of `E_x ∘ φ_x⁻¹` at the chart origin, one
/// component per supplied direction.
pub fn fd_dist_sq_gradient<T: Real>(frame: &SpinSpaceFrame<T>, dirs: &[CMat<T>], h: T) -> Result<Vec<T>> {
    let x = &frame.base;
    let origin = chart_origin(frame);
    let f = |p: &CMat<T>| -> Result<T> { Ok(dist_sq_in_chart(x, frame, p)) };
    dirs.iter().map(|d| directional_derivative(&f, &origin, d, h)).collect()
}

/// `ℛ(ψ, B) = ψ† X ψ + (0 ⊕ B)` in the ambient space.
pub fn hs_embed<T: Real>(frame: &SpinSpaceFrame<T>, psi: &CMat<T>, b: &CMat<T>) -> Result<CMat<T>> {
    let (g, d) = (frame.spin_rank(), frame.d());
    if b.nrows() != d - g || b.ncols() != d - g {
        return Err(CfsError::DimensionMismatch {
            expected: format!("{0}x{0}", d - g),
            found: format!("{}x{}", b.nrows(), b.ncols()),
        });
    }
    let mut m = psi.adjoint() * &frame.x_block * psi;
    let block = m.view((g, g), (d - g, d - g)) + b;
    m.view_mut((g, g), (d - g, d - g)).copy_from(&block);
    Ok(hermitian_part(&frame.from_frame(&m)))
}

/// Inverse of [`hs_embed`]: `E ↦ (φ_x(π_x E), (E - R_x(φ_x(π_x E)))|_J)`.
pub fn hs_chart<T: Real>(frame: &SpinSpaceFrame<T>, e: &CMat<T>) -> Result<(CMat<T>, CMat<T>)> {
    let (g, d) = (frame.spin_rank(), frame.d());
    let psi = chart_inverse_matrix(frame, e)?;
    let rest = frame.to_frame(&(e - forward_matrix(frame, &psi)));
    Ok((psi, rest.view((g, g), (d - g, d - g)).into_owned()))
}

/// Residuals `(||Φ(ℛ(ψ,B)) - (ψ,B)||, ||ℛ(Φ(E)) - E||)` for `E = ℛ(ψ,B)`,
/// in operator norm.
pub fn hs_embedding_roundtrip<T: Real>(frame: &SpinSpaceFrame<T>, psi: &CMat<T>, b: &CMat<T>) -> Result<(T, T)> {
    let e = hs_embed(frame, psi, b)?;
    let (psi_back, b_back) = hs_chart(frame, &e)?;
    let first = spectral_norm(&(&psi_back - psi)).max(spectral_norm(&(&b_back - b)));
    let e_back = hs_embed(frame, &psi_back, &b_back)?;
    Ok((first, spectral_norm(&(e_back - e))))
}
