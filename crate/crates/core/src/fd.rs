//! Finite-difference stencils over abstract real vector spaces.

use nalgebra::{ComplexField, DVector, RealField};

use crate::error::Result;
use crate::scalar::{lit, CMat, Real};

/// A real vector space with an inner product, enough structure for
/// difference quotients and residual norms.
pub trait LinearSpace<T: RealField + Copy>: Clone {
    fn zero_like(&self) -> Self;
    /// `self + a * other`.
    fn add_scaled(&self, a: T, other: &Self) -> Self;
    fn scaled(&self, a: T) -> Self;
    /// Real inner product.
    fn inner(&self, other: &Self) -> T;
    fn magnitude(&self) -> T {
        self.inner(self).sqrt()
    }
}

macro_rules! scalar_space {
    ($t:ty) => {
        impl LinearSpace<$t> for $t {
            fn zero_like(&self) -> Self {
                0.0
            }
            fn add_scaled(&self, a: $t, other: &Self) -> Self {
                self + a * other
            }
            fn scaled(&self, a: $t) -> Self {
                self * a
            }
            fn inner(&self, other: &Self) -> $t {
                self * other
            }
            fn magnitude(&self) -> $t {
                self.abs()
            }
        }
    };
}
scalar_space!(f64);
scalar_space!(f32);

impl<T: Real> LinearSpace<T> for CMat<T> {
    fn zero_like(&self) -> Self {
        CMat::zeros(self.nrows(), self.ncols())
    }
    fn add_scaled(&self, a: T, other: &Self) -> Self {
        self + other.map(|z| z.scale(a))
    }
    fn scaled(&self, a: T) -> Self {
        self.map(|z| z.scale(a))
    }
    /// `Re tr(A† B)`.
    fn inner(&self, other: &Self) -> T {
        self.iter().zip(other.iter()).fold(T::zero(), |acc, (a, b)| acc + a.re * b.re + a.im * b.im)
    }
}

impl<T: Real> LinearSpace<T> for DVector<T> {
    fn zero_like(&self) -> Self {
        DVector::zeros(self.len())
    }
    fn add_scaled(&self, a: T, other: &Self) -> Self {
        self + other * a
    }
    fn scaled(&self, a: T) -> Self {
        self * a
    }
    fn inner(&self, other: &Self) -> T {
        self.iter().zip(other.iter()).fold(T::zero(), |acc, (a, b)| acc + *a * *b)
    }
}

impl<T: Real, A: LinearSpace<T>, B: LinearSpace<T>> LinearSpace<T> for (A, B) {
    fn zero_like(&self) -> Self {
        (self.0.zero_like(), self.1.zero_like())
    }
    fn add_scaled(&self, a: T, other: &Self) -> Self {
        (self.0.add_scaled(a, &other.0), self.1.add_scaled(a, &other.1))
    }
    fn scaled(&self, a: T) -> Self {
        (self.0.scaled(a), self.1.scaled(a))
    }
    fn inner(&self, other: &Self) -> T {
        self.0.inner(&other.0) + self.1.inner(&other.1)
    }
}

/// `a - b`.
pub fn difference<T: Real, W: LinearSpace<T>>(a: &W, b: &W) -> W {
    a.add_scaled(-T::one(), b)
}

/// Mixed central difference `∂^k f(x0 + Σ α_i d_i) / ∂α_1 … ∂α_k` at `α = 0`:
/// `Σ_s (Π s_i) f(x0 + h Σ s_i d_i) / (2h)^k` over all sign patterns.
/// Second-order accurate in `h`.
pub fn mixed_central<T, V, W, F>(f: &F, origin: &V, dirs: &[V], h: T) -> Result<W>
where
    T: Real,
    V: LinearSpace<T>,
    W: LinearSpace<T>,
    F: Fn(&V) -> Result<W>,
{
    let k = dirs.len();
    if k == 0 {
        return f(origin);
    }
    let mut acc: Option<W> = None;
    for mask in 0..(1usize << k) {
        let mut point = origin.clone();
        let mut sign = T::one();
        for (i, d) in dirs.iter().enumerate() {
            let s = if mask & (1 << i) == 0 { T::one() } else { -T::one() };
            sign *= s;
            point = point.add_scaled(s * h, d);
        }
        let value = f(&point)?;
        acc = Some(match acc {
            None => value.scaled(sign),
            Some(a) => a.add_scaled(sign, &value),
        });
    }
    let denom = (h + h).powi(k as i32);
    Ok(acc.expect("at least one stencil point").scaled(T::one() / denom))
}

/// One Richardson step for a second-order stencil evaluated at `h` (coarse)
/// and `h/2` (fine).
pub fn richardson<T: Real, W: LinearSpace<T>>(coarse: &W, fine: &W) -> W {
    fine.scaled(lit(4.0 / 3.0)).add_scaled(lit(-1.0 / 3.0), coarse)
}

/// Directional derivative `Df|_x(dir)`: central differences at `h` and
/// `h/2`, combined by Richardson extrapolation.
pub fn directional_derivative<T, V, W, F>(f: &F, origin: &V, dir: &V, h: T) -> Result<W>
where
    T: Real,
    V: LinearSpace<T>,
    W: LinearSpace<T>,
    F: Fn(&V) -> Result<W>,
{
    let dirs = std::slice::from_ref(dir);
    let coarse = mixed_central(f, origin, dirs, h)?;
    let fine = mixed_central(f, origin, dirs, h * lit(0.5))?;
    Ok(richardson(&coarse, &fine))
}

fn binomial(k: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

/// Central difference for the `order`-th derivative of a one-parameter
/// map: `Σ_j (-1)^j C(k, j) f(t0 + (k/2 - j) h) / h^k`.
pub fn curve_derivative<T, W, F>(f: &F, t0: T, order: usize, h: T) -> Result<W>
where
    T: Real,
    W: LinearSpace<T>,
    F: Fn(T) -> Result<W>,
{
    let mut acc: Option<W> = None;
    for j in 0..=order {
        let offset = lit::<T>(order as f64 / 2.0 - j as f64) * h;
        let coeff = lit::<T>(if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(order, j));
        let value = f(t0 + offset)?;
        acc = Some(match acc {
            None => value.scaled(coeff),
            Some(a) => a.add_scaled(coeff, &value),
        });
    }
    Ok(acc.expect("order + 1 stencil points").scaled(T::one() / h.powi(order as i32)))
}

/// Step size balancing truncation and round-off for a `k`-th order
/// central stencil: `eps^{1/(k+2)} * scale`.
pub fn default_step<T: Real>(order: usize, scale: T) -> T {
    crate::scalar::eps::<T>().powf(lit(1.0 / (order as f64 + 2.0))) * scale.max(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_second_derivative_of_product() {
        let f = |v: &DVector<f64>| -> Result<f64> { Ok(v[0] * v[1] + v[0].powi(3)) };
        let x = DVector::from_vec(vec![0.5, -1.0]);
        let e0 = DVector::from_vec(vec![1.0, 0.0]);
        let e1 = DVector::from_vec(vec![0.0, 1.0]);
        let d01: f64 = mixed_central(&f, &x, &[e0.clone(), e1.clone()], 1e-3).unwrap();
        assert!((d01 - 1.0).abs() < 1e-8);
        let d00: f64 = mixed_central(&f, &x, &[e0.clone(), e0.clone()], 1e-3).unwrap();
        assert!((d00 - 3.0).abs() < 1e-5);
        let d0: f64 = directional_derivative(&f, &x, &e0, 1e-3).unwrap();
        assert!((d0 - (-1.0 + 0.75)).abs() < 1e-10);
    }

    #[test]
    fn curve_derivatives_of_polynomial() {
        let f = |t: f64| -> Result<f64> { Ok(t.powi(4) - 2.0 * t.powi(3) + t) };
        let t0 = 0.3;
        let exact = [4.0 * t0.powi(3) - 6.0 * t0 * t0 + 1.0, 12.0 * t0 * t0 - 12.0 * t0, 24.0 * t0 - 12.0];
        for (k, e) in exact.iter().enumerate() {
            let d: f64 = curve_derivative(&f, t0, k + 1, default_step(k + 1, 1.0)).unwrap();
            assert!((d - e).abs() < 1e-5 * (1.0 + e.abs()), "order {}: {d} vs {e}", k + 1);
        }
    }

    #[test]
    fn complex_matrix_inner_product() {
        use crate::scalar::cplx;
        let a = CMat::<f64>::from_row_slice(1, 2, &[cplx(1.0, 2.0), cplx(0.0, -1.0)]);
        let b = CMat::<f64>::from_row_slice(1, 2, &[cplx(3.0, 1.0), cplx(2.0, 2.0)]);
        // Re(conj(1+2i)(3+i) + conj(-i)(2+2i)) = Re((5-5i) + (-2+2i))
        assert!((a.inner(&b) - 3.0).abs() < 1e-15);
        assert!((a.magnitude() - 6f64.sqrt()).abs() < 1e-15);
    }
}
