//! Numerical toolkit for causal fermion systems at desk scale.
//!
//! The numerics are generic over the real scalar ([`Real`], implemented by
//! `f32` and `f64`); the aliases at the bottom of this file fix the scalar
//! for the common case.

pub mod chart;
pub mod error;
pub mod expedient;
pub mod fd;
pub mod hoelder;
pub mod io;
pub mod lagrangian;
pub mod linalg;
pub mod measure;
pub mod metric;
pub mod operator;
pub mod poly;
pub mod random;
pub mod scalar;
pub mod verify;

pub use error::{CfsError, Result};
pub use operator::{
    is_regular, make_operator, projector, spin_adjoint, spin_frame, HilbertConfig, Operator, SpinSpaceFrame, Tolerances,
};
pub use scalar::{CMat, Real};

pub use chart::{chart_forward, chart_inverse, transition_map, TangentVector, WaveChartPoint};
pub use expedient::{
    admissibility_probe, chain_rule_check, ell_curve_condition, higher_chain_rule_check, jet_derivative_ell,
    subspace_derivative, ChainReport, SmoothCurve, SubspaceBasis,
};
pub use hoelder::{global_bound_check, hoelder_scan_boundedness, hoelder_scan_lagrangian, HoelderFit};
pub use lagrangian::{boundedness_integrand, kernel_pair, lagrangian, spectral_weight, xy_spectrum};
pub use measure::{causal_action, ell, local_trace_check, minimize_action, ActionReport, DiscreteMeasure};
pub use metric::{dist_sq, dist_sq_hessian, metric};
pub use poly::{match_roots, root_bound_check, MonicPolynomial, RootMatch};

pub type Config64 = HilbertConfig<f64>;
pub type Operator64 = Operator<f64>;
pub type Frame64 = SpinSpaceFrame<f64>;
pub type Matrix64 = CMat<f64>;
pub type Config32 = HilbertConfig<f32>;
pub type Operator32 = Operator<f32>;
pub type Measure64 = DiscreteMeasure<f64>;
pub type ChartPoint64 = WaveChartPoint<f64>;
pub type Tangent64 = TangentVector<f64>;
