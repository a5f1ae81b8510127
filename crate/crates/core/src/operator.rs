//! Selfadjoint operators of bounded rank and signature, spin-space frames
//! and projections.
//!
//! Everything lives in a finite ambient dimension `d`. An operator belongs
//! to the admissible set when it is selfadjoint with at most `n` positive
//! and at most `n` negative eigenvalues; it is *regular* when its rank is
//! exactly `2n`.

use std::cmp::Ordering;

use crate::error::{CfsError, Result};
use crate::linalg::{hermitian_eigen, hermitian_part, inverse, max_abs, normalize_phase};
use crate::scalar::{creal, eps, lit, to_f64, CMat, Real};

/// Numerical tolerances. Defaults are tuned for `f64`; for lower precision
/// each one is floored at a small multiple of the machine epsilon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Relative selfadjointness tolerance (times `||mat||`).
    pub herm: T,
    /// Relative eigenvalue cutoff for rank and signature (times `||mat||`).
    pub rank: T,
    /// Relative round-trip tolerance for charts.
    pub chart: T,
    /// Absolute truncation threshold for operator power series.
    pub series: T,
    /// Maximum number of power-series terms.
    pub series_max_terms: usize,
    /// Spin-symmetry tolerance for the first chart block.
    pub symm: T,
    /// Minimum Gram determinant for a set of directions to count as independent.
    pub indep: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        let e = eps::<T>();
        Self {
            herm: lit::<T>(1e-12).max(e * lit(100.0)),
            rank: lit::<T>(1e-10).max(e * lit(1000.0)),
            chart: lit::<T>(1e-8).max(e * lit(1e4)),
            series: lit::<T>(1e-13).max(e * lit(10.0)),
            series_max_terms: 200,
            symm: lit::<T>(1e-9).max(e * lit(1e4)),
            indep: lit::<T>(1e-10).max(e * lit(1e3)),
        }
    }
}

/// Ambient dimension `d` and spin dimension `n`, together with the numerical
/// tolerances used by every operation on this space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HilbertConfig<T> {
    pub d: usize,
    pub n: usize,
    pub tol: Tolerances<T>,
}

impl<T: Real> HilbertConfig<T> {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        Self::with_tolerances(d, n, Tolerances::default())
    }

    pub fn with_tolerances(d: usize, n: usize, tol: Tolerances<T>) -> Result<Self> {
        if n == 0 {
            return Err(CfsError::InvalidConfig("spin dimension must be at least 1".into()));
        }
        if d < 2 * n {
            return Err(CfsError::InvalidConfig(format!("ambient dimension {d} is smaller than 2n = {}", 2 * n)));
        }
        Ok(Self { d, n, tol })
    }

    /// Maximal rank `2n`.
    pub fn max_rank(&self) -> usize {
        2 * self.n
    }

    pub fn same_space(&self, other: &Self) -> bool {
        self.d == other.d && self.n == other.n
    }
}

/// A point of the admissible operator set.
///
/// The stored matrix is the exact Hermitian part of the input; its
/// eigen-decomposition is computed once on construction.
#[derive(Debug, Clone)]
pub struct Operator<T: Real> {
    cfg: HilbertConfig<T>,
    mat: CMat<T>,
    rank: usize,
    n_pos: usize,
    n_neg: usize,
    eigenvalues: Vec<T>,
    eigenvectors: CMat<T>,
    norm: T,
}

impl<T: Real> PartialEq for Operator<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cfg.same_space(&other.cfg) && self.mat == other.mat
    }
}

/// Validates a matrix and wraps it as an [`Operator`].
pub fn make_operator<T: Real>(mat: CMat<T>, cfg: &HilbertConfig<T>) -> Result<Operator<T>> {
    Operator::new(mat, cfg)
}

impl<T: Real> Operator<T> {
    pub fn new(mat: CMat<T>, cfg: &HilbertConfig<T>) -> Result<Self> {
        let d = cfg.d;
        if mat.nrows() != d || mat.ncols() != d {
            return Err(CfsError::DimensionMismatch {
                expected: format!("{d}x{d}"),
                found: format!("{}x{}", mat.nrows(), mat.ncols()),
            });
        }
        let herm = hermitian_part(&mat);
        let (eigenvalues, eigenvectors) = hermitian_eigen(&herm);
        let norm = eigenvalues.iter().fold(T::zero(), |a, &b| a.max(b.abs()));

        let asymmetry = max_abs(&(&mat - mat.adjoint()));
        let herm_tol = cfg.tol.herm * norm;
        if asymmetry > herm_tol {
            return Err(CfsError::NotSelfadjoint { asymmetry: to_f64(asymmetry), tolerance: to_f64(herm_tol) });
        }

        let cutoff = cfg.tol.rank * norm;
        let n_pos = eigenvalues.iter().filter(|&&l| l > cutoff).count();
        let n_neg = eigenvalues.iter().filter(|&&l| l < -cutoff).count();
        if n_pos > cfg.n || n_neg > cfg.n {
            return Err(CfsError::SignatureViolation { n_pos, n_neg, n: cfg.n });
        }
        Ok(Self { cfg: *cfg, mat: herm, rank: n_pos + n_neg, n_pos, n_neg, eigenvalues, eigenvectors, norm })
    }

    pub fn zero(cfg: &HilbertConfig<T>) -> Self {
        Self::new(CMat::zeros(cfg.d, cfg.d), cfg).expect("zero operator is admissible")
    }

    /// Real diagonal operator; entries beyond `diag.len()` are zero.
    pub fn from_diagonal(diag: &[f64], cfg: &HilbertConfig<T>) -> Result<Self> {
        if diag.len() > cfg.d {
            return Err(CfsError::DimensionMismatch {
                expected: format!("at most {} diagonal entries", cfg.d),
                found: diag.len().to_string(),
            });
        }
        let mut m = CMat::zeros(cfg.d, cfg.d);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = creal(lit(v));
        }
        Self::new(m, cfg)
    }

    pub fn config(&self) -> &HilbertConfig<T> {
        &self.cfg
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.mat
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    /// Operator norm `||x||`.
    pub fn norm(&self) -> T {
        self.norm
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn trace(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn is_regular(&self) -> bool {
        self.rank == self.cfg.max_rank()
    }

    /// `a * x`.
    pub fn scaled(&self, a: T) -> Result<Self> {
        Self::new(&self.mat * creal(a), &self.cfg)
    }

    /// `x + t * direction` for a selfadjoint direction.
    pub fn shifted(&self, direction: &CMat<T>, t: T) -> Result<Self> {
        Self::new(&self.mat + direction * creal(t), &self.cfg)
    }

    /// `U x U†`.
    pub fn conjugated(&self, u: &CMat<T>) -> Result<Self> {
        Self::new(u * &self.mat * u.adjoint(), &self.cfg)
    }

    fn cutoff(&self) -> T {
        self.cfg.tol.rank * self.norm
    }

    /// Indices of nonzero and zero eigenvalues in the deterministic frame
    /// order: nonzero by descending modulus then descending signed value,
    /// the kernel by descending signed value.
    fn ordered_indices(&self) -> (Vec<usize>, Vec<usize>) {
        let cutoff = self.cutoff();
        let ev = &self.eigenvalues;
        let (mut range, mut kernel): (Vec<usize>, Vec<usize>) = (0..ev.len()).partition(|&i| ev[i].abs() > cutoff);
        range.sort_by(|&a, &b| {
            ev[b]
                .abs()
                .partial_cmp(&ev[a].abs())
                .unwrap_or(Ordering::Equal)
                .then(ev[b].partial_cmp(&ev[a]).unwrap_or(Ordering::Equal))
                .then(a.cmp(&b))
        });
        kernel.sort_by(|&a, &b| ev[b].partial_cmp(&ev[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
        (range, kernel)
    }

    fn columns(&self, idx: &[usize]) -> CMat<T> {
        let mut out = CMat::from_fn(self.cfg.d, idx.len(), |r, c| self.eigenvectors[(r, idx[c])]);
        let floor = eps::<T>().sqrt();
        for c in 0..idx.len() {
            normalize_phase(&mut out, c, floor);
        }
        out
    }

    /// Orthonormal basis (columns) of the range `x(H)` in frame order,
    /// valid for any rank.
    pub fn range_basis(&self) -> CMat<T> {
        let (range, _) = self.ordered_indices();
        self.columns(&range)
    }
}

/// Returns true iff `x` has the maximal rank `2n`.
pub fn is_regular<T: Real>(x: &Operator<T>) -> bool {
    x.is_regular()
}

/// Orthonormal frame adapted to the decomposition `H = S_x ⊕ J`.
#[derive(Debug, Clone)]
pub struct SpinSpaceFrame<T: Real> {
    pub base: Operator<T>,
    /// `d x 2n`, orthonormal basis of `S_x`.
    pub basis_i: CMat<T>,
    /// `d x (d - 2n)`, orthonormal basis of the complement.
    pub basis_j: CMat<T>,
    /// `X = basis_i† x basis_i`.
    pub x_block: CMat<T>,
    pub x_inv: CMat<T>,
    /// `[basis_i | basis_j]`, unitary.
    pub q: CMat<T>,
}

impl<T: Real> SpinSpaceFrame<T> {
    pub fn new(x: &Operator<T>) -> Result<Self> {
        let required = x.cfg.max_rank();
        if x.rank != required {
            return Err(CfsError::SingularPoint { rank: x.rank, required });
        }
        let (range, kernel) = x.ordered_indices();
        let basis_i = x.columns(&range);
        let basis_j = x.columns(&kernel);
        let x_block = basis_i.adjoint() * &x.mat * &basis_i;
        let x_inv = inverse(&x_block).ok_or(CfsError::SingularPoint { rank: x.rank, required })?;
        let mut q = CMat::zeros(x.cfg.d, x.cfg.d);
        q.columns_mut(0, required).copy_from(&basis_i);
        q.columns_mut(required, x.cfg.d - required).copy_from(&basis_j);
        Ok(Self { base: x.clone(), basis_i, basis_j, x_block, x_inv, q })
    }

    pub fn config(&self) -> &HilbertConfig<T> {
        self.base.config()
    }

    /// `2n`.
    pub fn spin_rank(&self) -> usize {
        self.basis_i.ncols()
    }

    pub fn d(&self) -> usize {
        self.q.nrows()
    }

    /// Ambient matrix expressed in the frame: `q† m q`.
    pub fn to_frame(&self, m: &CMat<T>) -> CMat<T> {
        self.q.adjoint() * m * &self.q
    }

    /// Inverse of [`Self::to_frame`].
    pub fn from_frame(&self, m: &CMat<T>) -> CMat<T> {
        &self.q * m * self.q.adjoint()
    }

    /// Ambient `d x d` matrix of a map `H -> S_x` given by its `2n x d`
    /// frame coordinates.
    pub fn lift_map(&self, psi: &CMat<T>) -> CMat<T> {
        &self.basis_i * psi * self.q.adjoint()
    }

    /// Orthogonal projection onto `S_x`.
    pub fn projector(&self) -> CMat<T> {
        &self.basis_i * self.basis_i.adjoint()
    }

    /// Spin adjoint `A* = X⁻¹ A† X` of an operator on `S_x`.
    pub fn spin_adjoint(&self, a: &CMat<T>) -> CMat<T> {
        &self.x_inv * a.adjoint() * &self.x_block
    }
}

pub fn spin_frame<T: Real>(x: &Operator<T>) -> Result<SpinSpaceFrame<T>> {
    SpinSpaceFrame::new(x)
}

pub fn spin_adjoint<T: Real>(a: &CMat<T>, frame: &SpinSpaceFrame<T>) -> CMat<T> {
    frame.spin_adjoint(a)
}

pub fn projector<T: Real>(x: &Operator<T>) -> Result<CMat<T>> {
    Ok(SpinSpaceFrame::new(x)?.projector())
}
