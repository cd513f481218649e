//! Double-double floating point (an unevaluated sum `hi + lo` of two `f64`).
//!
//! Gives roughly 106 bits of significand, which is what the Gauss map and the
//! phase computations `n * alpha mod 1` need once `n` reaches 10^10 or so.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };
    /// Unit roundoff of the format.
    pub const EPSILON: f64 = 1.232_595_164_407_831e-32; // 2^-106

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn floor(self) -> Self {
        let fh = self.hi.floor();
        if fh == self.hi {
            // hi is an integer; the fractional information lives in lo
            DoubleDouble::new(fh, self.lo.floor())
        } else {
            DoubleDouble { hi: fh, lo: 0.0 }
        }
    }

    pub fn round(self) -> Self {
        (self + DoubleDouble::from_f64(0.5)).floor()
    }

    /// Fractional part in `[0, 1)`.
    pub fn fract(self) -> Self {
        let f = self - self.floor();
        if f.hi >= 1.0 {
            f - DoubleDouble::ONE
        } else if f.hi < 0.0 {
            f + DoubleDouble::ONE
        } else {
            f
        }
    }

    /// Signed distance to the nearest integer, in `[-1/2, 1/2]`.
    pub fn signed_frac(self) -> Self {
        self - self.round()
    }

    pub fn recip(self) -> Self {
        DoubleDouble::ONE / self
    }

    /// Multiply by an integer-valued `f64` (exact when |n| < 2^53).
    pub fn mul_int(self, n: f64) -> Self {
        self * DoubleDouble::from_f64(n)
    }
}

impl Add for DoubleDouble {
    type Output = DoubleDouble;
    fn add(self, b: DoubleDouble) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = DoubleDouble;
    fn neg(self) -> DoubleDouble {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DoubleDouble {
    type Output = DoubleDouble;
    fn sub(self, b: DoubleDouble) -> DoubleDouble {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = DoubleDouble;
    fn mul(self, b: DoubleDouble) -> DoubleDouble {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = DoubleDouble;
    fn div(self, b: DoubleDouble) -> DoubleDouble {
        let q1 = self.hi / b.hi;
        let r = self - b * DoubleDouble::from_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * DoubleDouble::from_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + DoubleDouble::from_f64(q3)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn third_times_three_is_one() {
        let third = DoubleDouble::ONE / DoubleDouble::from_f64(3.0);
        let back = third * DoubleDouble::from_f64(3.0);
        assert!((back - DoubleDouble::ONE).abs().to_f64() < 1e-31);
    }

    #[test]
    fn fract_of_large_multiple_keeps_digits() {
        // alpha = 1/3 in dd; 3e12 * alpha is an integer up to ~1e-19
        let third = DoubleDouble::ONE / DoubleDouble::from_f64(3.0);
        let f = third.mul_int(3.0e12).signed_frac();
        assert!(f.abs().to_f64() < 1e-18);
        let g = third.mul_int(1.0e12 + 1.0).fract();
        assert!((g.to_f64() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn floor_handles_integer_hi() {
        let x = DoubleDouble::new(5.0, -1e-20);
        assert_eq!(x.floor().to_f64(), 4.0);
        assert_eq!(DoubleDouble::new(5.0, 1e-20).floor().to_f64(), 5.0);
    }
}
