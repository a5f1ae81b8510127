//! Eigenvalues of the non-normal product `xy`, the causal Lagrangian and
//! the closed-chain kernel matrices.

use std::cmp::Ordering;

use nalgebra::{Complex, ComplexField};

use crate::error::Result;
use crate::linalg::eigenvalues;
use crate::operator::{Operator, SpinSpaceFrame};
use crate::scalar::{lit, CMat, Real};

/// The `2n` eigenvalues of `xy`, counted with algebraic multiplicity and
/// padded with exact zeros, sorted by descending modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct XYSpectrum<T: Real> {
    pub lambdas: Vec<Complex<T>>,
    /// Size of the reduced eigenvalue problem, `rank(x)`.
    pub g: usize,
}

impl<T: Real> XYSpectrum<T> {
    pub fn moduli(&self) -> Vec<T> {
        self.lambdas.iter().map(|l| l.modulus()).collect()
    }
}

/// Reduced `g x g` matrix of `x y π_x` on `x(H)`, written in the range
/// basis of `x`.
pub fn reduced_product<T: Real>(x: &Operator<T>, y: &Operator<T>) -> CMat<T> {
    let b = x.range_basis();
    let x_block = b.adjoint() * x.matrix() * &b;
    let y_block = b.adjoint() * y.matrix() * &b;
    x_block * y_block
}

fn by_descending_modulus<T: Real>(a: &Complex<T>, b: &Complex<T>) -> Ordering {
    b.modulus()
        .partial_cmp(&a.modulus())
        .unwrap_or(Ordering::Equal)
        .then(b.re.partial_cmp(&a.re).unwrap_or(Ordering::Equal))
        .then(b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal))
}

pub fn xy_spectrum<T: Real>(x: &Operator<T>, y: &Operator<T>) -> XYSpectrum<T> {
    let slots = x.config().max_rank();
    let m = reduced_product(x, y);
    let g = m.nrows();
    let mut lambdas = eigenvalues(&m);
    lambdas.resize(slots.max(g), Complex::new(T::zero(), T::zero()));
    lambdas.sort_by(by_descending_modulus);
    XYSpectrum { lambdas, g }
}

/// `(1/4n) Σ_{i,j} (a_i - a_j)²` over the given moduli.
pub fn lagrangian_from_moduli<T: Real>(moduli: &[T], n: usize) -> T {
    let mut acc = T::zero();
    for i in 0..moduli.len() {
        for j in (i + 1)..moduli.len() {
            let diff = moduli[i] - moduli[j];
            acc += diff * diff;
        }
    }
    (acc * lit(2.0) / lit((4 * n) as f64)).max(T::zero())
}

/// Causal Lagrangian `ℒ(x, y)`.
pub fn lagrangian<T: Real>(x: &Operator<T>, y: &Operator<T>) -> T {
    lagrangian_from_moduli(&xy_spectrum(x, y).moduli(), x.config().n)
}

/// Spectral weight `|xy| = Σ |λ_i|`.
pub fn spectral_weight<T: Real>(x: &Operator<T>, y: &Operator<T>) -> T {
    xy_spectrum(x, y).moduli().into_iter().fold(T::zero(), |a, b| a + b)
}

/// Boundedness integrand `|xy|²`.
pub fn boundedness_integrand<T: Real>(x: &Operator<T>, y: &Operator<T>) -> T {
    let w = spectral_weight(x, y);
    w * w
}

/// `ℒ_κ = ℒ + κ |xy|²`.
pub fn lagrangian_kappa<T: Real>(x: &Operator<T>, y: &Operator<T>, kappa: T) -> T {
    let spec = xy_spectrum(x, y);
    let moduli = spec.moduli();
    let w = moduli.iter().fold(T::zero(), |a, &b| a + b);
    lagrangian_from_moduli(&moduli, x.config().n) + kappa * w * w
}

/// Kernel matrices in the deterministic spin frames of `x` and `y`.
#[derive(Debug, Clone)]
pub struct KernelPair<T: Real> {
    /// `π_x y |_{S_y}`, maps `S_y` coordinates to `S_x` coordinates.
    pub p_xy: CMat<T>,
    pub p_yx: CMat<T>,
    /// Closed chain `A_xy = P(x,y) P(y,x)`.
    pub a_xy: CMat<T>,
}

/// `π_x y |_{S_y}` in the given frames.
pub fn kernel_between<T: Real>(fx: &SpinSpaceFrame<T>, fy: &SpinSpaceFrame<T>) -> CMat<T> {
    fx.basis_i.adjoint() * fy.base.matrix() * &fy.basis_i
}

pub fn kernel_pair<T: Real>(x: &Operator<T>, y: &Operator<T>) -> Result<KernelPair<T>> {
    let fx = SpinSpaceFrame::new(x)?;
    let fy = SpinSpaceFrame::new(y)?;
    let p_xy = kernel_between(&fx, &fy);
    let p_yx = kernel_between(&fy, &fx);
    let a_xy = &p_xy * &p_yx;
    Ok(KernelPair { p_xy, p_yx, a_xy })
}
