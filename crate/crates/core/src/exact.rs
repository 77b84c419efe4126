//! Exact arithmetic on dyadic rationals (every finite `f64` is one).
//!
//! Sums and products of `f64` values are carried exactly and rounded to the
//! nearest `f64` once at the end, so two algebraically identical expressions
//! over the same inputs always produce the same bits.

use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, One, ToPrimitive, Zero};

/// `mant · 2^exp`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dyadic {
    mant: BigInt,
    exp: i32,
}

impl Dyadic {
    pub fn zero() -> Self {
        Self { mant: BigInt::zero(), exp: 0 }
    }

    /// Panics on non-finite input.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "dyadic conversion of non-finite value");
        let (mant, exp, sign) = x.integer_decode();
        let m = BigInt::from(mant);
        Self { mant: if sign < 0 { -m } else { m }, exp: i32::from(exp) }
    }

    /// Nearest `f64`, ties to even.
    pub fn to_f64(&self) -> f64 {
        if self.mant.is_zero() {
            return 0.0;
        }
        let ratio = if self.exp >= 0 {
            BigRational::from_integer(&self.mant << (self.exp as usize))
        } else {
            BigRational::new_raw(self.mant.clone(), BigInt::one() << ((-self.exp) as usize))
        };
        ratio.to_f64().unwrap_or(f64::NAN)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        if self.mant.is_zero() {
            return rhs;
        }
        if rhs.mant.is_zero() {
            return self;
        }
        let exp = self.exp.min(rhs.exp);
        let lhs = self.mant << ((self.exp - exp) as usize);
        let rhs_m = rhs.mant << ((rhs.exp - exp) as usize);
        Dyadic { mant: lhs + rhs_m, exp }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: Dyadic) -> Dyadic {
        Dyadic { mant: self.mant * rhs.mant, exp: self.exp + rhs.exp }
    }
}

impl Mul<f64> for Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: f64) -> Dyadic {
        self * Dyadic::from_f64(rhs)
    }
}

impl From<f64> for Dyadic {
    fn from(x: f64) -> Self {
        Dyadic::from_f64(x)
    }
}
