use nalgebra::{Complex, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cfs_core::chart::{chart_inverse_in, forward_matrix, series_sqrt, transition_coords};
use cfs_core::hoelder::{global_bound_check, linear_regression};
use cfs_core::linalg::{eigenvalues, hs_norm, identity, max_abs, spectral_norm};
use cfs_core::measure::{causal_action_serial, pair_terms};
use cfs_core::metric::metric_coords;
use cfs_core::random::{
    random_admissible_direction, random_chart_coords, random_complex, random_regular_operator, random_tangent,
    random_unitary,
};
use cfs_core::scalar::{creal, CMat};
use cfs_core::verify::random_measure;
use cfs_core::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(d, n)` with `d ≥ 2n`.
fn shape() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=2).prop_flat_map(|n| (2 * n..=2 * n + 3).prop_map(move |d| (d, n)))
}

fn cfg(d: usize, n: usize) -> HilbertConfig<f64> {
    HilbertConfig::new(d, n).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn accepted_operators_respect_signature_and_projector(seed: u64, (d, n) in shape()) {
        let x = random_regular_operator(&cfg(d, n), &mut rng(seed));
        let m = x.matrix();
        prop_assert!(max_abs(&(m - m.adjoint())) <= x.config().tol.herm);
        prop_assert!(x.n_pos() <= n && x.n_neg() <= n);
        let p = projector(&x).unwrap();
        let scale = x.norm();
        prop_assert!(spectral_norm(&(&p * m - m)) <= 1e-12 * scale);
        prop_assert!(spectral_norm(&(m * &p - m)) <= 1e-12 * scale);
    }

    #[test]
    fn spin_adjoint_is_an_anti_automorphism(seed: u64, (d, n) in shape()) {
        let mut r = rng(seed);
        let x = random_regular_operator(&cfg(d, n), &mut r);
        let frame = SpinSpaceFrame::new(&x).unwrap();
        let k = frame.spin_rank();
        let (a, b): (CMat<f64>, CMat<f64>) = (random_complex(k, k, &mut r), random_complex(k, k, &mut r));
        let twice = frame.spin_adjoint(&frame.spin_adjoint(&a));
        prop_assert!(spectral_norm(&(twice - &a)) <= 1e-9 * spectral_norm(&a));
        let lhs = frame.spin_adjoint(&(&a * &b));
        let rhs = frame.spin_adjoint(&b) * frame.spin_adjoint(&a);
        prop_assert!(spectral_norm(&(&lhs - &rhs)) <= 1e-9 * spectral_norm(&lhs).max(1.0));
        let block = frame.basis_i.adjoint() * x.matrix() * &frame.basis_i;
        prop_assert!(spectral_norm(&(block - &frame.x_block)) <= 1e-14 * x.norm().max(1.0));
    }

    #[test]
    fn lagrangian_is_symmetric_and_nonnegative(seed: u64, (d, n) in shape()) {
        let mut r = rng(seed);
        let c = cfg(d, n);
        let (x, y) = (random_regular_operator(&c, &mut r), random_regular_operator(&c, &mut r));
        let (lxy, lyx) = (lagrangian(&x, &y), lagrangian(&y, &x));
        prop_assert!((lxy - lyx).abs() <= 1e-10 * (1.0 + (x.norm() * y.norm()).powi(2)));
        prop_assert!(lxy >= -1e-14 && lyx >= -1e-14);
    }

    #[test]
    fn lagrangian_homogeneity(seed: u64, (d, n) in shape(), a in prop::sample::select(vec![0.5, 2.0, 10.0]), b in prop::sample::select(vec![0.5, 2.0, 10.0])) {
        let mut r = rng(seed);
        let c = cfg(d, n);
        let (x, y) = (random_regular_operator(&c, &mut r), random_regular_operator(&c, &mut r));
        let base = lagrangian(&x, &y);
        let floor = 1e-6 * (x.norm() * y.norm()).powi(2);
        prop_assume!(base > floor);
        let scaled = lagrangian(&x.scaled(a).unwrap(), &y.scaled(b).unwrap());
        prop_assert!(rel(scaled, (a * b).powi(2) * base) <= 1e-8);
    }

    #[test]
    fn lagrangian_unitary_invariance(seed: u64, (d, n) in shape()) {
        let mut r = rng(seed);
        let c = cfg(d, n);
        let (x, y) = (random_regular_operator(&c, &mut r), random_regular_operator(&c, &mut r));
        let base = lagrangian(&x, &y);
        prop_assume!(base > 1e-6 * (x.norm() * y.norm()).powi(2));
        let u = random_unitary::<f64, _>(d, &mut r);
        let rotated = lagrangian(&x.conjugated(&u).unwrap(), &y.conjugated(&u).unwrap());
        prop_assert!(rel(rotated, base) <= 1e-8);
    }

    #[test]
    fn reduced_spectrum_matches_full_product(seed: u64, (d, n) in shape()) {
        let mut r = rng(seed);
        let c = cfg(d, n);
        let (x, y) = (random_regular_operator(&c, &mut r), random_regular_operator(&c, &mut r));
        let scale = x.norm() * y.norm();
        let mut reduced: Vec<f64> = xy_spectrum(&x, &y).moduli();
        let mut full: Vec<f64> = eigenvalues(&(x.matrix() * y.matrix())).iter().map(|z| z.norm()).collect();
        reduced.sort_by(|a, b| b.total_cmp(a));
        full.sort_by(|a, b| b.total_cmp(a));
        // moduli sorted descending is the optimal matching on the real line
        for (a, b) in reduced.iter().zip(&full) {
            prop_assert!((a - b).abs() <= 1e-8 * scale, "{reduced:?} vs {full:?}");
        }
        prop_assert!(full[reduced.len()..].iter().all(|&m| m <= 1e-8 * scale));
    }

    #[test]
    fn chart_round_trip_and_symmetry(seed: u64, (d, n) in shape()) {
        let mut r = rng(seed);
        let x = random_regular_operator(&cfg(d, n), &mut r);
        let frame = SpinSpaceFrame::new(&x).unwrap();
        let psi = random_chart_coords(&frame, 0.1, &mut r);
        let p = WaveChartPoint::new(frame.clone(), psi.clone()).unwrap();
        let y = chart_forward(&p).unwrap();
        let back = chart_inverse_in(&frame, &y).unwrap();
        prop_assert!(spectral_norm(&(back.psi() - &psi)) <= 1e-8 * (1.0 + spectral_norm(&psi)));
        prop_assert!(back.symmetry_defect() <= 1e-9);
    }

    #[test]
    fn series_square_root(seed: u64, k in 2usize..=5) {
        let mut r = rng(seed);
        let b: CMat<f64> = random_complex(k, k, &mut r);
        let a = identity::<f64>(k) - &b * creal(0.3 / spectral_norm(&b));
        let tol = Tolerances::<f64>::default();
        let root = series_sqrt(&a, false, &tol).unwrap();
        let inv = series_sqrt(&a, true, &tol).unwrap();
        prop_assert!(spectral_norm(&(&root * &root - &a)) <= 10.0 * tol.series);
        prop_assert!(spectral_norm(&(&inv * &root - identity::<f64>(k))) <= 10.0 * tol.series);
    }

    #[test]
    fn transition_second_derivatives_commute(seed: u64, (d, n) in shape()) {
        let mut r = rng(seed);
        let c = cfg(d, n);
        let x = random_regular_operator(&c, &mut r);
        let from = SpinSpaceFrame::new(&x).unwrap();
        let near = chart_forward(&WaveChartPoint::new(from.clone(), random_chart_coords(&from, 0.05, &mut r)).unwrap()).unwrap();
        let to = SpinSpaceFrame::new(&near).unwrap();
        let base = random_chart_coords(&from, 0.02, &mut r);
        let (u, v) = (random_tangent(&from, &mut r), random_tangent(&from, &mut r));
        let f = |p: &CMat<f64>, q: &CMat<f64>, s: f64, t: f64| {
            transition_coords(&from, &to, &(&base + p * creal(s) + q * creal(t))).unwrap()
        };
        // unequal steps per slot, so the two orders sample different points
        let (h1, h2) = (1e-3, 2e-3);
        let mixed = |p: &CMat<f64>, q: &CMat<f64>| {
            (f(p, q, h1, h2) - f(p, q, h1, -h2) - f(p, q, -h1, h2) + f(p, q, -h1, -h2)) / creal(4.0 * h1 * h2)
        };
        let (uv, vu) = (mixed(&u, &v), mixed(&v, &u));
        prop_assert!(spectral_norm(&(&uv - &vu)) <= 1e-5 * (1.0 + spectral_norm(&uv)));
    }

    #[test]
    fn metric_is_symmetric_and_bilinear(seed: u64, (d, n) in shape(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut r = rng(seed);
        let x = random_regular_operator(&cfg(d, n), &mut r);
        let frame = SpinSpaceFrame::new(&x).unwrap();
        let (u, v, w) = (random_tangent(&frame, &mut r), random_tangent(&frame, &mut r), random_tangent(&frame, &mut r));
        let g = |a: &CMat<f64>, b: &CMat<f64>| metric_coords(&frame, a, b);
        let scale = (g(&u, &u) * g(&v, &v)).sqrt().max(g(&w, &w));
        prop_assert!((g(&u, &v) - g(&v, &u)).abs() <= 1e-10 * scale);
        let combo = &u * creal(alpha) + &v * creal(beta);
        let lhs = g(&combo, &w);
        let rhs = alpha * g(&u, &w) + beta * g(&v, &w);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale * (1.0 + alpha.abs() + beta.abs()));
    }

    #[test]
    fn norm_equivalence_on_low_rank(seed: u64, (d, n) in shape()) {
        let x = random_regular_operator(&cfg(d, n), &mut rng(seed));
        let (op, hs) = (spectral_norm(x.matrix()), hs_norm(x.matrix()));
        prop_assert!(op <= hs * (1.0 + 1e-12));
        prop_assert!(hs <= (2.0 * n as f64).sqrt() * op * (1.0 + 1e-12));
    }

    #[test]
    fn refined_global_bound_never_weaker(seed: u64, (d, n) in shape()) {
        let mut r = rng(seed);
        let c = cfg(d, n);
        let (x, y) = (random_regular_operator(&c, &mut r), random_regular_operator(&c, &mut r));
        let yt = y.shifted(&random_admissible_direction(&y, &mut r), 1e-2).unwrap();
        let report = global_bound_check(&x, &y, &yt).unwrap();
        prop_assert!(report.refined_factor <= report.coarse_factor * (1.0 + 1e-12));
    }

    #[test]
    fn regression_recovers_exact_lines(slope in -5.0f64..5.0, intercept in -5.0f64..5.0) {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 0.5 - 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| slope * x + intercept).collect();
        let (s, i, r2) = linear_regression(&xs, &ys);
        prop_assert!((s - slope).abs() <= 1e-10 && (i - intercept).abs() <= 1e-10);
        prop_assert!(slope.abs() < 1e-9 || r2 > 1.0 - 1e-10);
    }

    #[test]
    fn polynomial_roots_from_roots(roots in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=5)) {
        let zs: Vec<(Complex<f64>, usize)> = roots.iter().map(|&(a, b)| (Complex::new(a, b), 1)).collect();
        let spread = zs.iter().flat_map(|a| zs.iter().map(move |b| (a.0 - b.0).norm())).filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
        prop_assume!(zs.len() == 1 || spread > 0.05);
        let p = MonicPolynomial::from_roots(&zs).unwrap();
        let q = MonicPolynomial::from_coeffs(p.coeffs().to_vec()).unwrap();
        let m = match_roots(&p, &q).unwrap();
        prop_assert!(m.max_deviation() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn action_matches_double_sum_and_kernel_symmetry(seed: u64, m in 1usize..8) {
        let mut r = rng(seed);
        let c = cfg(4, 1);
        let rho = random_measure(&c, m, &mut r).unwrap();
        let report = causal_action(&rho);
        prop_assert_eq!(report.action.to_bits(), causal_action_serial(&rho).action.to_bits());
        let (pts, w) = (rho.points(), rho.weights());
        let mut swapped = 0.0;
        for i in 0..m {
            for j in 0..m {
                swapped += w[i] * w[j] * pair_terms(&pts[j], &pts[i]).0;
            }
        }
        prop_assert!((swapped - report.action).abs() <= 1e-10 * report.action.abs().max(1e-300));
    }

    #[test]
    fn minimizer_descends_and_keeps_volume(seed: u64, kappa in 0.0f64..0.5) {
        let mut r = rng(seed);
        let rho = random_measure(&cfg(4, 1), 3, &mut r).unwrap();
        let run = minimize_action(&rho, kappa, 40, seed, &measure::MinimizeOptions::default());
        let objective = |l: &measure::IterationLog<f64>| l.action + kappa * l.boundedness;
        prop_assert!(run.log.windows(2).all(|w| objective(&w[1]) <= objective(&w[0])));
        let v0 = rho.volume();
        prop_assert!((run.measure.volume() - v0).abs() <= 1e-12 * v0);
    }

    #[test]
    fn subspace_derivative_is_multilinear(a in -2.0f64..2.0, b in -2.0f64..2.0, c0 in -1.0f64..1.0, c1 in -1.0f64..1.0) {
        let f = |v: &DVector<f64>| -> Result<f64> { Ok(v[0].sin() * v[1] + v[2].powi(3) + v[0] * v[2]) };
        let origin = DVector::from_vec(vec![0.3, -0.7, 0.5]);
        let e = |i: usize| DVector::from_fn(3, |k, _| if k == i { 1.0 } else { 0.0 });
        let basis = SubspaceBasis::new(origin, vec![e(0), e(1), e(2)], 1e-8).unwrap();
        let (u, v, w) = (DVector::from_vec(vec![1.0, c0, 0.2]), DVector::from_vec(vec![c1, 1.0, -0.4]), e(2) + e(0));
        let combo = &u * a + &v * b;
        let lhs = subspace_derivative(&f, &basis, &[combo, w.clone()]).unwrap();
        let rhs = a * subspace_derivative(&f, &basis, &[u, w.clone()]).unwrap()
            + b * subspace_derivative(&f, &basis, &[v, w]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-6 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn jet_derivative_is_linear(seed: u64, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let mut r = rng(seed);
        let c = cfg(4, 1);
        let rho = random_measure(&c, 3, &mut r).unwrap();
        let x = random_regular_operator(&c, &mut r);
        let frame = SpinSpaceFrame::new(&x).unwrap();
        let (u, v) = (random_tangent(&frame, &mut r), random_tangent(&frame, &mut r));
        let jet = |s: f64, m: CMat<f64>| jet_derivative_ell(s, &TangentVector::at(&frame, m).unwrap(), &rho, 1.0);
        let sum = jet(a + b, &u + &v);
        let (first, second) = (jet(a, u), jet(b, v));
        match (sum, first, second) {
            (Ok(s), Ok(f1), Ok(f2)) => prop_assert!((s - f1 - f2).abs() <= 1e-5 * (1.0 + s.abs()), "{s} vs {}", f1 + f2),
            // ℓ may be nondifferentiable at x (complex-conjugate boundary); linearity is only claimed where it is
            (Err(CfsError::NonDifferentiableDirection(_)), _, _) | (_, Err(CfsError::NonDifferentiableDirection(_)), _)
            | (_, _, Err(CfsError::NonDifferentiableDirection(_))) => {}
            (s, f1, f2) => prop_assert!(false, "unexpected {s:?} {f1:?} {f2:?}"),
        }
    }

    #[test]
    fn insufficient_tangents_are_rejected(q in 1usize..=3, n in 1usize..=3) {
        let alpha = 1.0 / (2 * n - 1) as f64;
        let need = expedient::required_tangents(q, alpha);
        let supplied = need - 1;
        let curve = SmoothCurve::new(|t: f64| Ok(DVector::from_vec(vec![t])), 0.0, vec![DVector::from_vec(vec![1.0]); supplied]);
        let f = |v: &DVector<f64>| -> Result<f64> { Ok(v[0]) };
        let rejected = matches!(higher_chain_rule_check(&f, &curve, alpha, q), Err(CfsError::InsufficientTangents { .. }));
        prop_assert!(rejected);
    }
}

#[test]
fn single_precision_core_runs() {
    let c = HilbertConfig::<f32>::new(4, 1).unwrap();
    let mut r = rng(3);
    let x = random_regular_operator(&c, &mut r);
    let y = random_regular_operator(&c, &mut r);
    assert!(x.is_regular());
    let (l32, l64) = (lagrangian(&x, &y), {
        let lift = |o: &Operator<f32>| {
            let m = o.matrix().map(|z| Complex::new(z.re as f64, z.im as f64));
            // f32 rounding leaves kernel eigenvalues near 1e-7
            let tol = Tolerances { rank: 1e-5, herm: 1e-5, ..Tolerances::default() };
            Operator::new(m, &HilbertConfig::with_tolerances(4, 1, tol).unwrap()).unwrap()
        };
        lagrangian(&lift(&x), &lift(&y))
    });
    assert!((l32 as f64 - l64).abs() <= 1e-3 * (1.0 + l64));
    let frame = SpinSpaceFrame::new(&x).unwrap();
    let psi = random_chart_coords(&frame, 0.1, &mut r);
    let back = chart_inverse_in(&frame, &Operator::new(forward_matrix(&frame, &psi), &c).unwrap()).unwrap();
    assert!(spectral_norm(&(back.psi() - &psi)) <= 1e-4);
}
