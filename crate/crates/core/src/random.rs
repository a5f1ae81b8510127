//! Seeded generators for operators, frames and chart coordinates.
//!
//! All randomness flows through caller-supplied [`rand::Rng`]s; the CLI
//! and the tests use `ChaCha8Rng::seed_from_u64`, which is portable across
//! platforms.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::linalg::{hermitian_part, spectral_norm};
use crate::operator::{HilbertConfig, Operator, SpinSpaceFrame};
use crate::scalar::{cplx, creal, lit, CMat, Real};

fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let v: f64 = StandardNormal.sample(rng);
    lit(v)
}

/// Matrix with i.i.d. complex Gaussian entries of unit variance.
pub fn random_complex<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat<T> {
    let half = lit::<T>(std::f64::consts::FRAC_1_SQRT_2);
    CMat::from_fn(rows, cols, |_, _| cplx(normal::<T, R>(rng) * half, normal::<T, R>(rng) * half))
}

/// Hermitian matrix from the Gaussian unitary ensemble (unnormalized).
pub fn random_hermitian<T: Real, R: Rng + ?Sized>(k: usize, rng: &mut R) -> CMat<T> {
    hermitian_part(&random_complex(k, k, rng))
}

/// Haar-distributed unitary via QR with phase correction.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(k: usize, rng: &mut R) -> CMat<T> {
    let qr = random_complex::<T, R>(k, k, rng).qr();
    let (mut q, r) = qr.unpack();
    for c in 0..k {
        let d = r[(c, c)];
        let m = nalgebra::ComplexField::modulus(d);
        if m > T::zero() {
            let phase = d / creal(m);
            for row in 0..k {
                q[(row, c)] *= phase;
            }
        }
    }
    q
}

/// Uniform sample from `[lo, hi)`.
pub fn uniform<T: Real, R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> T {
    lit(Uniform::new(lo, hi).expect("valid range").sample(rng))
}

/// Random regular operator `ψ† A ψ` with a random `2n x d` map `ψ` and a
/// diagonal `A` of signature `(n, n)`, magnitudes in `[0.5, 2)`.
pub fn random_regular_operator<T: Real, R: Rng + ?Sized>(cfg: &HilbertConfig<T>, rng: &mut R) -> Operator<T> {
    loop {
        let psi = random_complex::<T, R>(2 * cfg.n, cfg.d, rng);
        let mut a = CMat::zeros(2 * cfg.n, 2 * cfg.n);
        for i in 0..2 * cfg.n {
            let mag: T = uniform(0.5, 2.0, rng);
            a[(i, i)] = creal(if i < cfg.n { mag } else { -mag });
        }
        let m = hermitian_part(&(psi.adjoint() * a * psi));
        if let Ok(x) = Operator::new(m, cfg) {
            if x.is_regular() {
                return x;
            }
        }
    }
}

/// Random element of `V_x = Symm(S_x) ⊕ L(J, S_x)` in frame coordinates,
/// normalized to unit operator norm.
pub fn random_tangent<T: Real, R: Rng + ?Sized>(frame: &SpinSpaceFrame<T>, rng: &mut R) -> CMat<T> {
    let g = frame.spin_rank();
    let d = frame.d();
    let mut v = CMat::zeros(g, d);
    let sym = &frame.x_inv * random_hermitian::<T, R>(g, rng);
    v.columns_mut(0, g).copy_from(&sym);
    if d > g {
        v.columns_mut(g, d - g).copy_from(&random_complex::<T, R>(g, d - g, rng));
    }
    let norm = spectral_norm(&v);
    v / creal(norm)
}

/// Chart coordinates `(id, 0) + v` with `v` a random tangent of operator
/// norm uniform in `(0, radius]`.
pub fn random_chart_coords<T: Real, R: Rng + ?Sized>(frame: &SpinSpaceFrame<T>, radius: f64, rng: &mut R) -> CMat<T> {
    let r: T = uniform(0.0, 1.0, rng);
    let scale = (T::one() - r) * lit(radius);
    crate::chart::chart_origin(frame) + random_tangent(frame, rng) * creal(scale)
}

/// Selfadjoint direction `B H B†` supported on the range of `y`, with `B`
/// an orthonormal range basis and `H` random; unit operator norm.
pub fn random_range_direction<T: Real, R: Rng + ?Sized>(y: &Operator<T>, rng: &mut R) -> CMat<T> {
    let b = y.range_basis();
    let h = random_hermitian::<T, R>(b.ncols(), rng);
    let m = hermitian_part(&(&b * h * b.adjoint()));
    let norm = spectral_norm(&m);
    m / creal(norm)
}

/// [`random_range_direction`] scaled by the smallest nonzero eigenvalue
/// modulus of `y`, so `y + t d` keeps the signature for `|t| < 1`.
pub fn random_admissible_direction<T: Real, R: Rng + ?Sized>(y: &Operator<T>, rng: &mut R) -> CMat<T> {
    let cutoff = y.config().tol.rank * y.norm();
    let floor = y.eigenvalues().iter().map(|v| v.abs()).filter(|&v| v > cutoff).fold(y.norm(), |a, b| a.min(b));
    random_range_direction(y, rng) * creal(floor)
}

/// `count` regular operators from a `ChaCha8Rng` seeded with `seed`.
pub fn generate_operators<T: Real>(cfg: &HilbertConfig<T>, count: usize, seed: u64) -> Vec<Operator<T>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_regular_operator(cfg, &mut rng)).collect()
}
