//! Symmetric wave charts around a regular point.
//!
//! Chart coordinates of a point near `x` are a `2n x d` matrix `ψ` mapping
//! `H` (in the frame `q = [basis_i | basis_j]`) to `S_x` (in `basis_i`).
//! The first `2n` columns form the block `ψ_I`, which is spin-symmetric,
//! i.e. `X ψ_I` is Hermitian. The remaining columns form `ψ_J`.

use nalgebra::DMatrix;

use crate::error::{CfsError, Result};
use crate::fd::{directional_derivative, LinearSpace};
use crate::linalg::{hermitian_part, identity, max_abs, spectral_norm};
use crate::operator::{HilbertConfig, Operator, SpinSpaceFrame, Tolerances};
use crate::scalar::{creal, lit, to_f64, CMat, Real};

/// A point in the symmetric wave chart anchored at `frame.base`.
#[derive(Debug, Clone)]
pub struct WaveChartPoint<T: Real> {
    frame: SpinSpaceFrame<T>,
    psi: CMat<T>,
}

fn check_coords_shape<T: Real>(frame: &SpinSpaceFrame<T>, psi: &CMat<T>) -> Result<()> {
    let (g, d) = (frame.spin_rank(), frame.d());
    if psi.nrows() != g || psi.ncols() != d {
        return Err(CfsError::DimensionMismatch {
            expected: format!("{g}x{d}"),
            found: format!("{}x{}", psi.nrows(), psi.ncols()),
        });
    }
    Ok(())
}

/// Hermiticity defect of `X ψ_I`, relative to `||X|| max(1, ||ψ_I||)`.
fn relative_symmetry_defect<T: Real>(frame: &SpinSpaceFrame<T>, psi: &CMat<T>) -> T {
    let g = frame.spin_rank();
    let block = psi.columns(0, g).into_owned();
    let xb = &frame.x_block * &block;
    let scale = max_abs(&frame.x_block) * max_abs(&block).max(T::one());
    max_abs(&(&xb - xb.adjoint())) / scale
}

fn check_symmetric<T: Real>(frame: &SpinSpaceFrame<T>, psi: &CMat<T>) -> Result<()> {
    let defect = relative_symmetry_defect(frame, psi);
    if defect > frame.config().tol.symm {
        return Err(CfsError::InvalidArgument(format!(
            "first chart block is not spin-symmetric (relative defect {:e})",
            to_f64(defect)
        )));
    }
    Ok(())
}

impl<T: Real> WaveChartPoint<T> {
    pub fn new(frame: SpinSpaceFrame<T>, psi: CMat<T>) -> Result<Self> {
        check_coords_shape(&frame, &psi)?;
        check_symmetric(&frame, &psi)?;
        Ok(Self { frame, psi })
    }

    /// `(id, 0)`, the coordinates of the anchor itself.
    pub fn origin(frame: SpinSpaceFrame<T>) -> Self {
        let psi = chart_origin(&frame);
        Self { frame, psi }
    }

    pub fn anchor(&self) -> &Operator<T> {
        &self.frame.base
    }

    pub fn frame(&self) -> &SpinSpaceFrame<T> {
        &self.frame
    }

    pub fn psi(&self) -> &CMat<T> {
        &self.psi
    }

    pub fn psi_i(&self) -> CMat<T> {
        self.psi.columns(0, self.frame.spin_rank()).into_owned()
    }

    pub fn psi_j(&self) -> CMat<T> {
        let g = self.frame.spin_rank();
        self.psi.columns(g, self.frame.d() - g).into_owned()
    }

    /// `max |spin_adjoint(ψ_I) - ψ_I|`.
    pub fn symmetry_defect(&self) -> T {
        let block = self.psi_i();
        max_abs(&(self.frame.spin_adjoint(&block) - block))
    }
}

pub fn chart_origin<T: Real>(frame: &SpinSpaceFrame<T>) -> CMat<T> {
    let g = frame.spin_rank();
    CMat::from_fn(g, frame.d(), |r, c| if r == c { creal(T::one()) } else { creal(T::zero()) })
}

/// Ambient `d x d` matrix `ψ† X ψ` of chart coordinates, without validation.
pub fn forward_matrix<T: Real>(frame: &SpinSpaceFrame<T>, psi: &CMat<T>) -> CMat<T> {
    let inner = psi.adjoint() * &frame.x_block * psi;
    hermitian_part(&frame.from_frame(&inner))
}

/// `R_x(ψ) = ψ† X ψ` as an operator.
pub fn chart_forward<T: Real>(p: &WaveChartPoint<T>) -> Result<Operator<T>> {
    Operator::new(forward_matrix(&p.frame, &p.psi), p.frame.config())
}

/// `(1 - B)^β = Σ_k (-1)^k binom(β, k) B^k` for `||B|| < 1/2`.
///
/// Summation stops once the majorant `|c_k| ||B||^k` drops below
/// `tol.series`, or after `tol.series_max_terms` terms.
pub fn binomial_series<T: Real>(b: &CMat<T>, beta: T, tol: &Tolerances<T>) -> Result<CMat<T>> {
    let radius = spectral_norm(b);
    if radius >= lit(0.5) {
        return Err(CfsError::OutsideConvergenceRadius { distance: to_f64(radius) });
    }
    let mut sum = identity::<T>(b.nrows());
    let mut power = identity::<T>(b.nrows());
    let mut coeff = T::one();
    let mut majorant = T::one();
    for k in 1..tol.series_max_terms {
        coeff = coeff * (lit::<T>((k - 1) as f64) - beta) / lit(k as f64);
        let next = coeff.abs() * radius.powi(k as i32);
        debug_assert!(next <= majorant || next < tol.series);
        majorant = next;
        if majorant < tol.series {
            break;
        }
        power = &power * b;
        sum += &power * creal(coeff);
    }
    Ok(sum)
}

/// `A^{1/2}` (or `A^{-1/2}` when `inverse`) by the binomial series in
/// `id - A`.
pub fn series_sqrt<T: Real>(a: &CMat<T>, inverse: bool, tol: &Tolerances<T>) -> Result<CMat<T>> {
    let b = identity::<T>(a.nrows()) - a;
    let beta = if inverse { lit(-0.5) } else { lit(0.5) };
    binomial_series(&b, beta, tol)
}

/// `X⁻¹ π_x y |_{S_x}` in the frame.
pub fn chart_argument<T: Real>(frame: &SpinSpaceFrame<T>, y: &CMat<T>) -> CMat<T> {
    &frame.x_inv * (frame.basis_i.adjoint() * y * &frame.basis_i)
}

/// `||id - X⁻¹ π_x y|_{S_x}||`; the chart domain is where this is below 1/2.
pub fn chart_domain_distance<T: Real>(frame: &SpinSpaceFrame<T>, y: &CMat<T>) -> T {
    spectral_norm(&(identity::<T>(frame.spin_rank()) - chart_argument(frame, y)))
}

/// `φ_x(y) = (X⁻¹ π_x y|_{S_x})^{-1/2} X⁻¹ π_x y` on raw matrices.
pub fn chart_inverse_matrix<T: Real>(frame: &SpinSpaceFrame<T>, y: &CMat<T>) -> Result<CMat<T>> {
    let a = chart_argument(frame, y);
    let b = identity::<T>(frame.spin_rank()) - &a;
    let distance = spectral_norm(&b);
    if distance >= lit(0.5) {
        return Err(CfsError::OutsideChartDomain { distance: to_f64(distance) });
    }
    let root = binomial_series(&b, lit(-0.5), &frame.config().tol)?;
    Ok(root * &frame.x_inv * (frame.basis_i.adjoint() * y * &frame.q))
}

/// Chart coordinates of `y` in the chart anchored at `frame.base`.
pub fn chart_inverse_in<T: Real>(frame: &SpinSpaceFrame<T>, y: &Operator<T>) -> Result<WaveChartPoint<T>> {
    if !y.is_regular() {
        return Err(CfsError::SingularPoint { rank: y.rank(), required: y.config().max_rank() });
    }
    let psi = chart_inverse_matrix(frame, y.matrix())?;
    Ok(WaveChartPoint { frame: frame.clone(), psi })
}

pub fn chart_inverse<T: Real>(x: &Operator<T>, y: &Operator<T>) -> Result<WaveChartPoint<T>> {
    chart_inverse_in(&SpinSpaceFrame::new(x)?, y)
}

/// Transition `φ_y ∘ φ_x⁻¹` evaluated as `W(id - B̃(ψ)) ∘ B(ψ)` with
/// `B(ψ) = Y⁻¹ π_y ψ† X ψ`, `B̃(ψ) = B(ψ)|_{S_y}` and `W(B) = (1 - B)^{-1/2}`.
pub fn transition_coords<T: Real>(from: &SpinSpaceFrame<T>, to: &SpinSpaceFrame<T>, psi: &CMat<T>) -> Result<CMat<T>> {
    check_coords_shape(from, psi)?;
    let z = forward_matrix(from, psi);
    let b = &to.x_inv * (to.basis_i.adjoint() * &z * &to.q);
    let g = to.spin_rank();
    let b_restricted = b.columns(0, g).into_owned();
    let arg = identity::<T>(g) - b_restricted;
    let distance = spectral_norm(&arg);
    if distance >= lit(0.5) {
        return Err(CfsError::OutsideChartDomain { distance: to_f64(distance) });
    }
    Ok(binomial_series(&arg, lit(-0.5), &to.config().tol)? * b)
}

pub fn transition_map<T: Real>(to: &SpinSpaceFrame<T>, p: &WaveChartPoint<T>) -> Result<WaveChartPoint<T>> {
    let psi = transition_coords(&p.frame, to, &p.psi)?;
    Ok(WaveChartPoint { frame: to.clone(), psi })
}

/// Tangent datum `[base, v, anchor]`: `v` is a direction in the chart
/// coordinates of `anchor`, attached at `base`.
#[derive(Debug, Clone)]
pub struct TangentVector<T: Real> {
    pub base: Operator<T>,
    pub anchor: SpinSpaceFrame<T>,
    pub v: CMat<T>,
}

impl<T: Real> TangentVector<T> {
    pub fn new(base: Operator<T>, anchor: SpinSpaceFrame<T>, v: CMat<T>) -> Result<Self> {
        check_coords_shape(&anchor, &v)?;
        check_symmetric(&anchor, &v)?;
        Ok(Self { base, anchor, v })
    }

    /// Tangent anchored at its own base point.
    pub fn at(frame: &SpinSpaceFrame<T>, v: CMat<T>) -> Result<Self> {
        Self::new(frame.base.clone(), frame.clone(), v)
    }

    /// Coordinates of the base point in the anchor chart.
    pub fn base_coords(&self) -> Result<CMat<T>> {
        chart_inverse_matrix(&self.anchor, self.base.matrix())
    }
}

/// Finite-difference step for chart derivatives at coordinates `psi`.
pub fn chart_step<T: Real>(psi: &CMat<T>) -> T {
    lit::<T>(1e-5) * (T::one() + psi.magnitude())
}

/// Re-expresses a tangent vector in the chart anchored at `new_anchor`,
/// applying the derivative of the transition map at the base point.
pub fn pushforward<T: Real>(v: &TangentVector<T>, new_anchor: &SpinSpaceFrame<T>) -> Result<TangentVector<T>> {
    if new_anchor.base == v.anchor.base {
        return Ok(TangentVector { base: v.base.clone(), anchor: new_anchor.clone(), v: v.v.clone() });
    }
    let psi = v.base_coords()?;
    let length = v.v.magnitude();
    let out = if length == T::zero() {
        CMat::zeros(new_anchor.spin_rank(), new_anchor.d())
    } else {
        let dir = v.v.scaled(T::one() / length);
        let f = |p: &CMat<T>| transition_coords(&v.anchor, new_anchor, p);
        let d: CMat<T> = directional_derivative(&f, &psi, &dir, chart_step(&psi))?;
        d.scaled(length)
    };
    Ok(TangentVector { base: v.base.clone(), anchor: new_anchor.clone(), v: out })
}

/// Real dimension of `V_x = Symm(S_x) ⊕ L(J, S_x)`, i.e. `4nd - 4n²`.
pub fn tangent_dim<T: Real>(cfg: &HilbertConfig<T>) -> usize {
    4 * cfg.n * cfg.d - 4 * cfg.n * cfg.n
}

/// A real basis of `V_x`: `X⁻¹ H` for a basis of Hermitian `H`, followed by
/// the real and imaginary matrix units of the `J` block.
pub fn chart_basis<T: Real>(frame: &SpinSpaceFrame<T>) -> Vec<CMat<T>> {
    let (g, d) = (frame.spin_rank(), frame.d());
    let one = creal(T::one());
    let i = crate::scalar::cplx(T::zero(), T::one());
    let embed = |h: CMat<T>| {
        let mut v = CMat::zeros(g, d);
        v.columns_mut(0, g).copy_from(&(&frame.x_inv * h));
        v
    };
    let mut out = Vec::with_capacity(tangent_dim(frame.config()));
    for r in 0..g {
        for c in r..g {
            let mut h = CMat::zeros(g, g);
            if r == c {
                h[(r, r)] = one;
                out.push(embed(h));
            } else {
                h[(r, c)] = one;
                h[(c, r)] = one;
                out.push(embed(h.clone()));
                h[(r, c)] = i;
                h[(c, r)] = -i;
                out.push(embed(h));
            }
        }
    }
    for r in 0..g {
        for c in g..d {
            for unit in [one, i] {
                let mut v = CMat::zeros(g, d);
                v[(r, c)] = unit;
                out.push(v);
            }
        }
    }
    out
}

/// Projects arbitrary `2n x d` coordinates onto `V_x` by symmetrizing the
/// first block: `ψ_I ↦ (ψ_I + spin_adjoint(ψ_I)) / 2`.
pub fn project_to_tangent<T: Real>(frame: &SpinSpaceFrame<T>, m: &CMat<T>) -> CMat<T> {
    let g = frame.spin_rank();
    let block = m.columns(0, g).into_owned();
    let sym = (&block + frame.spin_adjoint(&block)) * creal(lit::<T>(0.5));
    let mut out = m.clone();
    out.columns_mut(0, g).copy_from(&sym);
    out
}

/// Flattens complex coordinates into a real column (real parts first).
pub fn to_real_vector<T: Real>(m: &CMat<T>) -> nalgebra::DVector<T> {
    let n = m.len();
    nalgebra::DVector::from_fn(2 * n, |k, _| if k < n { m[k].re } else { m[k - n].im })
}

/// Real matrix whose columns are the flattened vectors.
pub fn real_column_matrix<T: Real>(vectors: &[CMat<T>]) -> DMatrix<T> {
    let rows = vectors.first().map_or(0, |v| 2 * v.len());
    let mut out = DMatrix::zeros(rows, vectors.len());
    for (c, v) in vectors.iter().enumerate() {
        out.set_column(c, &to_real_vector(v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::mixed_central;
    use crate::linalg::hs_norm;
    use crate::operator::spin_frame;
    use crate::random::{random_chart_coords, random_regular_operator, random_tangent};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(d: usize, n: usize) -> HilbertConfig<f64> {
        HilbertConfig::new(d, n).unwrap()
    }

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    #[test]
    fn origin_maps_to_anchor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_regular_operator(&cfg(6, 2), &mut rng);
        let p = WaveChartPoint::origin(spin_frame(&x).unwrap());
        let y = chart_forward(&p).unwrap();
        assert!(max_abs(&(y.matrix() - x.matrix())) < 1e-12 * x.norm());
        let back = chart_inverse(&x, &x).unwrap();
        assert!(max_abs(&(back.psi() - p.psi())) < 1e-12);
    }

    #[test]
    fn forward_is_quadratic_and_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_regular_operator(&cfg(5, 2), &mut rng);
        let f = spin_frame(&x).unwrap();
        for _ in 0..20 {
            let a = random_chart_coords(&f, 0.1, &mut rng);
            let b = random_chart_coords(&f, 0.1, &mut rng);
            let ra = forward_matrix(&f, &a);
            let scaled = forward_matrix(&f, &(&a * creal(1.7)));
            assert!(max_abs(&(scaled - &ra * creal(1.7 * 1.7))) < 1e-12 * x.norm() * 4.0);
            let lhs = spectral_norm(&(&ra - forward_matrix(&f, &b)));
            let rhs = (spectral_norm(&a) + spectral_norm(&b)) * spectral_norm(&f.x_block) * spectral_norm(&(&a - &b));
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn scalar_series_values() {
        let id = identity::<f64>(3);
        assert!(max_abs(&(series_sqrt(&id, false, &tol()).unwrap() - &id)) < 1e-15);
        let a = &id * creal(0.64);
        let r = series_sqrt(&a, false, &tol()).unwrap();
        let ri = series_sqrt(&a, true, &tol()).unwrap();
        assert!(max_abs(&(r - &id * creal(0.8))) < 1e-13);
        assert!(max_abs(&(ri - &id * creal(1.25))) < 1e-13);
        let far = &id * creal(0.4);
        assert!(matches!(series_sqrt(&far, false, &tol()), Err(CfsError::OutsideConvergenceRadius { .. })));
    }

    #[test]
    fn series_roots_square_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let b = crate::random::random_complex::<f64, _>(4, 4, &mut rng);
            let b = &b * creal(0.45 / spectral_norm(&b));
            let a = identity::<f64>(4) - &b;
            let r = series_sqrt(&a, false, &tol()).unwrap();
            let ri = series_sqrt(&a, true, &tol()).unwrap();
            assert!(max_abs(&(&r * &r - &a)) < 10.0 * tol().series * 10.0);
            assert!(max_abs(&(&ri * &r - identity::<f64>(4))) < 10.0 * tol().series * 10.0);
        }
    }

    #[test]
    fn round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (d, n) in [(4, 1), (6, 1), (4, 2), (6, 2)] {
            for _ in 0..10 {
                let x = random_regular_operator(&cfg(d, n), &mut rng);
                let f = spin_frame(&x).unwrap();
                let psi = random_chart_coords(&f, 0.1, &mut rng);
                let p = WaveChartPoint::new(f.clone(), psi.clone()).unwrap();
                let y = chart_forward(&p).unwrap();
                assert!(y.is_regular());
                let back = chart_inverse_in(&f, &y).unwrap();
                assert!(spectral_norm(&(back.psi() - &psi)) <= 1e-8 * (1.0 + spectral_norm(&psi)));
                assert!(back.symmetry_defect() <= 1e-9);
                let again = chart_forward(&back).unwrap();
                assert!(spectral_norm(&(again.matrix() - y.matrix())) <= 1e-8 * y.norm());
            }
        }
    }

    #[test]
    fn non_symmetric_coordinates_rejected() {
        let x = Operator::from_diagonal(&[1.0, -1.0, 0.0], &cfg(3, 1)).unwrap();
        let f = spin_frame(&x).unwrap();
        let mut psi = chart_origin(&f);
        psi[(0, 1)] = creal(0.3);
        assert!(WaveChartPoint::new(f.clone(), psi.clone()).is_err());
        // X psi_I Hermitian requires psi_I[1,0] = -psi_I[0,1] for X = diag(1,-1)
        psi[(1, 0)] = creal(-0.3);
        let p = WaveChartPoint::new(f, psi).unwrap();
        assert!(p.symmetry_defect() < 1e-15);
    }

    #[test]
    fn far_point_outside_domain() {
        let c = cfg(2, 1);
        let x = Operator::from_diagonal(&[1.0, -1.0], &c).unwrap();
        let y = Operator::from_diagonal(&[3.0, -1.0], &c).unwrap();
        assert!(matches!(chart_inverse(&x, &y), Err(CfsError::OutsideChartDomain { .. })));
    }

    #[test]
    fn transition_agrees_with_chart_inverse_and_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = cfg(6, 2);
        let x = random_regular_operator(&c, &mut rng);
        let fx = spin_frame(&x).unwrap();
        let y =
            chart_forward(&WaveChartPoint::new(fx.clone(), random_chart_coords(&fx, 0.05, &mut rng)).unwrap()).unwrap();
        let z =
            chart_forward(&WaveChartPoint::new(fx.clone(), random_chart_coords(&fx, 0.05, &mut rng)).unwrap()).unwrap();
        let (fy, fz) = (spin_frame(&y).unwrap(), spin_frame(&z).unwrap());
        let p = WaveChartPoint::new(fx.clone(), random_chart_coords(&fx, 0.03, &mut rng)).unwrap();

        let same = transition_map(&fx, &p).unwrap();
        assert!(max_abs(&(same.psi() - p.psi())) < 1e-10);

        let direct = transition_map(&fy, &p).unwrap();
        let via_inverse = chart_inverse_in(&fy, &chart_forward(&p).unwrap()).unwrap();
        assert!(max_abs(&(direct.psi() - via_inverse.psi())) < 1e-10);

        let two_step = transition_map(&fz, &direct).unwrap();
        let one_step = transition_map(&fz, &p).unwrap();
        assert!(max_abs(&(two_step.psi() - one_step.psi())) < 1e-9);
    }

    #[test]
    fn transition_jacobian_is_invertible_and_second_derivative_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = cfg(4, 1);
        let x = random_regular_operator(&c, &mut rng);
        let fx = spin_frame(&x).unwrap();
        let y =
            chart_forward(&WaveChartPoint::new(fx.clone(), random_chart_coords(&fx, 0.05, &mut rng)).unwrap()).unwrap();
        let fy = spin_frame(&y).unwrap();
        let psi = random_chart_coords(&fx, 0.03, &mut rng);
        let f = |p: &CMat<f64>| transition_coords(&fx, &fy, p);
        let images: Vec<CMat<f64>> =
            chart_basis(&fx).iter().map(|b| directional_derivative(&f, &psi, b, 1e-5).unwrap()).collect();
        let jac = real_column_matrix(&images);
        let sv = jac.singular_values();
        let (smin, smax) = (sv.min(), sv.max());
        assert!(smin > 1e-6 * smax, "condition number {}", smax / smin);

        let u = random_tangent(&fx, &mut rng);
        let v = random_tangent(&fx, &mut rng);
        let h = 1e-3;
        let d_uv: CMat<f64> = mixed_central(&f, &psi, &[u.clone(), v.clone()], h).unwrap();
        let d_plus: CMat<f64> = mixed_central(&f, &psi, &[&u + &v, &u + &v], h).unwrap();
        let d_minus: CMat<f64> = mixed_central(&f, &psi, &[&u - &v, &u - &v], h).unwrap();
        let polar = (d_plus - d_minus) * creal(0.25);
        assert!(hs_norm(&(&d_uv - &polar)) < 1e-4 * (1.0 + hs_norm(&d_uv)));
    }

    #[test]
    fn pushforward_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = cfg(5, 1);
        let x = random_regular_operator(&c, &mut rng);
        let fx = spin_frame(&x).unwrap();
        let y =
            chart_forward(&WaveChartPoint::new(fx.clone(), random_chart_coords(&fx, 0.05, &mut rng)).unwrap()).unwrap();
        let fy = spin_frame(&y).unwrap();
        let base =
            chart_forward(&WaveChartPoint::new(fx.clone(), random_chart_coords(&fx, 0.02, &mut rng)).unwrap()).unwrap();

        let u = TangentVector::new(base.clone(), fx.clone(), random_tangent(&fx, &mut rng)).unwrap();
        let w = TangentVector::new(base.clone(), fx.clone(), random_tangent(&fx, &mut rng)).unwrap();

        let same = pushforward(&u, &fx).unwrap();
        assert_eq!(same.v, u.v);

        let (a, b) = (0.7, -1.3);
        let combo = TangentVector::new(base.clone(), fx.clone(), &u.v * creal(a) + &w.v * creal(b)).unwrap();
        let lhs = pushforward(&combo, &fy).unwrap().v;
        let rhs = pushforward(&u, &fy).unwrap().v * creal(a) + pushforward(&w, &fy).unwrap().v * creal(b);
        assert!(hs_norm(&(&lhs - &rhs)) < 1e-7 * hs_norm(&lhs));

        let there = pushforward(&u, &fy).unwrap();
        let back = pushforward(&there, &fx).unwrap();
        assert!(hs_norm(&(&back.v - &u.v)) < 1e-7 * hs_norm(&u.v));
    }

    #[test]
    fn tangent_basis_spans_the_right_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (d, n) in [(2, 1), (4, 1), (5, 2)] {
            let c = cfg(d, n);
            let f = spin_frame(&random_regular_operator(&c, &mut rng)).unwrap();
            let basis = chart_basis(&f);
            assert_eq!(basis.len(), tangent_dim(&c));
            for b in &basis {
                assert!(relative_symmetry_defect(&f, b) < 1e-12);
            }
            let m = real_column_matrix(&basis);
            assert_eq!(m.rank(1e-10 * m.norm()), basis.len());
            // projection is idempotent and lands in V_x
            let raw = crate::random::random_complex::<f64, _>(2 * n, d, &mut rng);
            let p = project_to_tangent(&f, &raw);
            assert!(relative_symmetry_defect(&f, &p) < 1e-12);
            assert!(max_abs(&(project_to_tangent(&f, &p) - &p)) < 1e-12);
        }
    }
}
