//! Scalar abstraction shared by every module.
//!
//! All numerics are written against [`Real`], which is satisfied by `f32`
//! and `f64`. Complex matrices are `nalgebra` dynamic matrices over
//! `Complex<T>`.

use nalgebra::{Complex, DMatrix, RealField};
use num_traits::ToPrimitive;

use crate::fd::LinearSpace;

/// Real scalar usable by the toolkit.
pub trait Real: RealField + Copy + ToPrimitive + LinearSpace<Self> {}

impl<T: RealField + Copy + ToPrimitive + LinearSpace<T>> Real for T {}

/// Dense complex matrix.
pub type CMat<T> = DMatrix<Complex<T>>;

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(v: f64) -> T {
    nalgebra::convert(v)
}

/// Converts a working scalar into `f64` (for reports and serialization).
#[inline]
pub fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Machine epsilon of the working scalar.
#[inline]
pub fn eps<T: Real>() -> T {
    T::default_epsilon()
}
