//! Scalar abstraction shared by the f64 and double-double pipelines.

use crate::dd::Dd;
use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Real:
    Copy
    + Send
    + Sync
    + Debug
    + Display
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn pi() -> Self;
    fn sin_cos(self) -> (Self, Self);
    fn exp(self) -> Self;
    /// Unit roundoff.
    fn epsilon() -> f64;
    fn mul_f64(self, b: f64) -> Self;

    fn div_f64(self, b: f64) -> Self {
        self / Self::from_f64(b)
    }

    fn hypot(self, b: Self) -> Self {
        let (a, b) = (self.abs(), b.abs());
        let (big, small) = if a > b { (a, b) } else { (b, a) };
        if big == Self::zero() {
            return big;
        }
        let r = small / big;
        big * (Self::one() + r * r).sqrt()
    }

    fn max(self, b: Self) -> Self {
        if self > b {
            self
        } else {
            b
        }
    }

    fn signum_f64(self) -> f64 {
        let x = self.to_f64();
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

impl Real for f64 {
    fn zero() -> f64 {
        0.0
    }
    fn one() -> f64 {
        1.0
    }
    fn from_f64(x: f64) -> f64 {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn pi() -> f64 {
        std::f64::consts::PI
    }
    fn sin_cos(self) -> (f64, f64) {
        f64::sin_cos(self)
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn epsilon() -> f64 {
        f64::EPSILON / 2.0
    }
    fn mul_f64(self, b: f64) -> f64 {
        self * b
    }
}

impl Real for Dd {
    fn zero() -> Dd {
        Dd::ZERO
    }
    fn one() -> Dd {
        Dd::ONE
    }
    fn from_f64(x: f64) -> Dd {
        Dd::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
    fn sqrt(self) -> Dd {
        Dd::sqrt(self)
    }
    fn abs(self) -> Dd {
        Dd::abs(self)
    }
    fn pi() -> Dd {
        Dd::PI
    }
    fn sin_cos(self) -> (Dd, Dd) {
        Dd::sin_cos(self)
    }
    fn exp(self) -> Dd {
        Dd::exp(self)
    }
    fn epsilon() -> f64 {
        Dd::EPSILON
    }
    fn mul_f64(self, b: f64) -> Dd {
        Dd::mul_f64(self, b)
    }
    fn div_f64(self, b: f64) -> Dd {
        Dd::div_f64(self, b)
    }
}
