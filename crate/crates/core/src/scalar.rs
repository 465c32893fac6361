//! Scalar abstraction shared by the numerical modules.

use nalgebra::{DMatrix, RealField};
use num_complex::Complex;

/// Real scalar usable by every numerical routine in the crate.
pub trait Real:
    RealField + Copy + num_traits::FromPrimitive + num_traits::ToPrimitive + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

pub type Cx<T> = Complex<T>;
pub type CMat<T> = DMatrix<Complex<T>>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn re<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 is representable in every Real type")
}

#[inline]
pub fn cx<T: Real>(re_part: f64, im_part: f64) -> Complex<T> {
    Complex::new(re(re_part), re(im_part))
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    num_traits::ToPrimitive::to_f64(&x).unwrap_or(f64::NAN)
}

#[inline]
pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub fn ci<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// `exp(z)` for a complex number without requiring `num_traits::Float`.
#[inline]
pub fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    let m = z.re.exp();
    Complex::new(m * z.im.cos(), m * z.im.sin())
}

/// Principal square root of a complex number.
#[inline]
pub fn csqrt<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = (z.re * z.re + z.im * z.im).sqrt();
    let two = re::<T>(2.0);
    let a = ((r + z.re) / two).sqrt();
    let b = ((r - z.re) / two).sqrt();
    if z.im < T::zero() {
        Complex::new(a, -b)
    } else {
        Complex::new(a, b)
    }
}

#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

#[inline]
pub fn cabs2<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_helpers_match_num_complex() {
        let z = Complex::new(0.3_f64, -1.7);
        let e = cexp(z);
        let want = z.exp();
        assert!((e - want).norm() < 1e-15);
        let s = csqrt(Complex::new(-4.0_f64, 0.0));
        assert!((s - Complex::new(0.0, 2.0)).norm() < 1e-15);
        let s = csqrt(z);
        assert!((s * s - z).norm() < 1e-14);
        assert!((cabs(z) - z.norm()).abs() < 1e-15);
    }

    #[test]
    fn f32_instantiates() {
        let z: Cx<f32> = cx(1.0, 2.0);
        assert!((cabs2(z) - 5.0).abs() < 1e-6);
    }
}
