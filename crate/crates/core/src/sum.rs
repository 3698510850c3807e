//! Order-independent summation.
//!
//! Functional values are accumulated in 2^-36 fixed point on an `i128`, so the
//! result does not depend on summation order or on how the cells are split
//! across threads or windows. As long as the accumulated total stays below
//! 2^17 in magnitude, the conversion back to `f64` is exact and splitting a
//! sum over disjoint windows reproduces the total bit for bit.

use std::iter::Sum;
use std::ops::{Add, AddAssign};

const SCALE_BITS: i32 = 36;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FixedSum(i128);

impl FixedSum {
    pub const ZERO: FixedSum = FixedSum(0);

    /// Quantizes one term. Non-finite or out-of-range terms are rejected.
    pub fn from_f64(x: f64) -> Option<FixedSum> {
        if !x.is_finite() {
            return None;
        }
        let scaled = x * 2f64.powi(SCALE_BITS);
        if scaled.abs() >= 2f64.powi(120) {
            return None;
        }
        Some(FixedSum(scaled.round() as i128))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2f64.powi(SCALE_BITS)
    }

    /// Smallest representable increment.
    pub fn quantum() -> f64 {
        2f64.powi(-SCALE_BITS)
    }
}

impl Add for FixedSum {
    type Output = FixedSum;
    fn add(self, rhs: FixedSum) -> FixedSum {
        FixedSum(self.0 + rhs.0)
    }
}

impl AddAssign for FixedSum {
    fn add_assign(&mut self, rhs: FixedSum) {
        self.0 += rhs.0;
    }
}

impl Sum for FixedSum {
    fn sum<I: Iterator<Item = FixedSum>>(iter: I) -> FixedSum {
        iter.fold(FixedSum::ZERO, Add::add)
    }
}
