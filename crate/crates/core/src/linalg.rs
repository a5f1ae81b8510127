//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Complex, ComplexField, DMatrix, Schur, SymmetricEigen};

use crate::scalar::{creal, lit, CMat, Real};

/// Operator (spectral) norm, the largest singular value.
pub fn spectral_norm<T: Real>(m: &CMat<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    let sv = m.clone().singular_values();
    sv.iter().copied().fold(T::zero(), |a, b| a.max(b))
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm<T: Real>(m: &CMat<T>) -> T {
    m.iter().map(|z| z.modulus_squared()).fold(T::zero(), |a, b| a + b).sqrt()
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(m: &CMat<T>) -> T {
    m.iter().map(|z| z.modulus()).fold(T::zero(), |a, b| a.max(b))
}

pub fn trace<T: Real>(m: &CMat<T>) -> Complex<T> {
    m.diagonal().iter().copied().fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Complex<T> {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn identity<T: Real>(k: usize) -> CMat<T> {
    DMatrix::identity(k, k)
}

/// `(m + m†) / 2`.
pub fn hermitian_part<T: Real>(m: &CMat<T>) -> CMat<T> {
    (m + m.adjoint()) * creal(lit::<T>(0.5))
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues are real and
/// unsorted; eigenvectors are the columns of the returned matrix.
pub fn hermitian_eigen<T: Real>(m: &CMat<T>) -> (Vec<T>, CMat<T>) {
    if m.is_empty() {
        return (Vec::new(), m.clone());
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Eigenvalues of a general (non-normal) complex matrix via the complex
/// Schur form.
pub fn eigenvalues<T: Real>(m: &CMat<T>) -> Vec<Complex<T>> {
    let g = m.nrows();
    if g == 0 {
        return Vec::new();
    }
    if g == 1 {
        return vec![m[(0, 0)]];
    }
    let t = Schur::new(m.clone()).unpack().1;
    let scale = max_abs(&t);
    let mut out = Vec::with_capacity(g);
    let mut i = 0;
    while i < g {
        // Complex Schur forms are triangular; a residual 2x2 bump is solved
        // explicitly.
        if i + 1 < g && t[(i + 1, i)].modulus() > lit::<T>(1e-14) * scale {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half_tr = (a + d) * creal(lit::<T>(0.5));
            let det = a * d - b * c;
            let disc = (half_tr * half_tr - det).sqrt();
            out.push(half_tr + disc);
            out.push(half_tr - disc);
            i += 2;
        } else {
            out.push(t[(i, i)]);
            i += 1;
        }
    }
    out
}

pub fn inverse<T: Real>(m: &CMat<T>) -> Option<CMat<T>> {
    if m.is_empty() {
        return Some(m.clone());
    }
    m.clone().try_inverse()
}

/// Orthonormal basis (as columns) of the column space of `m`, using a
/// relative singular-value cutoff.
pub fn column_space<T: Real>(m: &CMat<T>, rel_tol: T) -> CMat<T> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > rel_tol * smax).collect();
    CMat::from_fn(m.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// `m^k` for small non-negative `k`.
pub fn matrix_power<T: Real>(m: &CMat<T>, k: usize) -> CMat<T> {
    let mut out = identity::<T>(m.nrows());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Multiplies the column so that its first entry above `floor` in modulus
/// becomes real and positive.
pub fn normalize_phase<T: Real>(v: &mut CMat<T>, col: usize, floor: T) {
    let pivot = (0..v.nrows()).map(|r| v[(r, col)]).find(|z| z.modulus() > floor);
    if let Some(z) = pivot {
        let phase = z.conjugate() / creal(z.modulus());
        for r in 0..v.nrows() {
            v[(r, col)] *= phase;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    #[test]
    fn nilpotent_jordan_block_splits_like_cube_root() {
        let z = creal(0.0);
        let o = creal(1.0);
        let m = CMat::<f64>::from_row_slice(3, 3, &[z, o, z, z, z, o, creal(1e-9), z, z]);
        let ev = eigenvalues(&m);
        for l in &ev {
            assert!((l.modulus() - 1e-3).abs() < 1e-8, "{l}");
        }
        let sum = ev.iter().fold(creal(0.0), |a, b| a + b);
        assert!(sum.modulus() < 1e-12);
    }

    #[test]
    fn rotation_has_conjugate_eigenvalues() {
        let m = CMat::<f64>::from_row_slice(2, 2, &[creal(0.0), creal(-1.0), creal(1.0), creal(0.0)]);
        let mut ev = eigenvalues(&m);
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((ev[0] - cplx(0.0, -1.0)).modulus() < 1e-12);
        assert!((ev[1] - cplx(0.0, 1.0)).modulus() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = CMat::<f64>::from_diagonal(&nalgebra::DVector::from_vec(vec![creal(2.0), creal(-3.0), creal(0.5)]));
        assert!((spectral_norm(&m) - 3.0).abs() < 1e-12);
        assert!((hs_norm(&m) - (4.0f64 + 9.0 + 0.25).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn column_space_drops_null_directions() {
        let m = CMat::<f64>::from_row_slice(
            3,
            2,
            &[creal(1.0), creal(2.0), creal(0.0), creal(0.0), creal(1.0), creal(2.0)],
        );
        assert_eq!(column_space(&m, 1e-10).ncols(), 1);
    }
}
