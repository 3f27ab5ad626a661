//! Scalar abstraction and error-free floating point transformations.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Binary floating point type the numerical core is generic over (`f32`, `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + FromStr
    + Sum
    + LowerExp
    + Display
    + Debug
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, panicking only if the target cannot represent it.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + NumAssign
        + FromStr
        + Sum
        + LowerExp
        + Display
        + Debug
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Knuth's TwoSum: `a + b = s + e` exactly.
#[inline]
pub fn two_sum<T: Float>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// `a * b = p + e` exactly (requires a correctly rounded fused multiply-add).
#[inline]
pub fn two_prod<T: Float>(a: T, b: T) -> (T, T) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Compensated dot product (Ogita–Rump–Oishi `Dot2`): result as if computed in
/// twice the working precision, then rounded.
pub fn dot2<T: Float>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    let mut s = T::zero();
    let mut c = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        let (p, ep) = two_prod(a, b);
        let (t, es) = two_sum(s, p);
        s = t;
        c = c + (ep + es);
    }
    s + c
}

/// Compensated summation (Neumaier variant of Kahan).
pub fn sum2<T: Float>(values: impl IntoIterator<Item = T>) -> T {
    let mut s = T::zero();
    let mut c = T::zero();
    for v in values {
        let (t, e) = two_sum(s, v);
        s = t;
        c = c + e;
    }
    s + c
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`: roughly doubles the
/// working precision of `T`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble<T> {
    pub hi: T,
    pub lo: T,
}

impl<T: Float> DoubleDouble<T> {
    pub fn new(x: T) -> Self {
        Self { hi: x, lo: T::zero() }
    }

    pub fn zero() -> Self {
        Self::new(T::zero())
    }

    pub fn one() -> Self {
        Self::new(T::one())
    }

    fn renorm(hi: T, lo: T) -> Self {
        let s = hi + lo;
        let e = lo - (s - hi);
        Self { hi: s, lo: e }
    }

    pub fn to_scalar(self) -> T {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < T::zero() {
            -self
        } else {
            self
        }
    }

    /// `1/n!`-style reciprocal of an integer-valued double-double.
    pub fn recip(self) -> Self {
        Self::one() / self
    }
}

impl<T: Float> Neg for DoubleDouble<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl<T: Float> Add for DoubleDouble<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let r = Self::renorm(s, e + t);
        Self::renorm(r.hi, r.lo + f)
    }
}

impl<T: Float> Sub for DoubleDouble<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: Float> Mul for DoubleDouble<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        Self::renorm(p, e)
    }
}

impl<T: Float> Div for DoubleDouble<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        // Two Newton corrections on the leading quotient.
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Self::new(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Self::new(q2);
        let q3 = r.hi / rhs.hi;
        let q = Self::renorm(q1, q2);
        q + Self::new(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_is_exact() {
        let (s, e) = two_sum(1.0f64, 1e-20);
        assert_eq!(s, 1.0);
        assert_eq!(e, 1e-20);
    }

    #[test]
    fn dot2_recovers_cancelled_terms() {
        let x = [1e16, 1.0, -1e16];
        let y = [1.0, 1.0, 1.0];
        assert_eq!(dot2(&x, &y), 1.0);
        assert_eq!(sum2([1e16, 1.0, -1e16]), 1.0);
    }

    #[test]
    fn double_double_division_beats_f64() {
        let one = DoubleDouble::<f64>::one();
        let three = DoubleDouble::new(3.0);
        let third = one / three;
        let back = third * three;
        assert!((back - one).to_scalar().abs() < 1e-30);
        assert!(third.lo != 0.0);
    }

    #[test]
    fn generic_over_f32() {
        let x = [1e7f32, 1.0, -1e7];
        assert_eq!(dot2(&x, &[1.0, 1.0, 1.0]), 1.0f32);
    }
}
