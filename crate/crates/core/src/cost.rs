//! Exact contraction cost arithmetic.
//!
//! Step costs are products of bond dimensions and total costs are sums of
//! step costs. At chi = 10 a single bad step on a modest lattice already
//! exceeds 10^20 multiplications, so costs are kept as arbitrary-precision
//! unsigned integers and never rounded. Floating point enters only through
//! the explicit [`Cost::ln`] / [`Cost::log10`] views used for fitness,
//! acceptance probabilities, and reporting.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact non-negative contraction cost.
///
/// Serializes as a decimal string so JSON consumers never see a rounded
/// value. Comparison and equality are exact integer semantics.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cost(BigUint);

impl Cost {
    /// Cost of doing nothing (the empty sequence).
    pub fn zero() -> Self {
        Cost(BigUint::zero())
    }

    /// Multiplicative identity, the starting point for a step-cost product.
    pub fn one() -> Self {
        Cost(BigUint::from(1u8))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Product of a collection of bond dimensions.
    pub fn product_of_dims<I: IntoIterator<Item = u64>>(dims: I) -> Self {
        let mut factors: Vec<u64> = dims.into_iter().collect();
        Self::product_of_buffer(&mut factors)
    }

    /// As [`Cost::product_of_dims`] but reuses the caller's buffer, which is
    /// reordered in place.
    pub(crate) fn product_of_buffer(factors: &mut [u64]) -> Self {
        // Group repeated dimensions and exponentiate: step costs multiply
        // dozens of identical chi values, and one pow beats a long chain of
        // scalar multiplications on wide accumulators.
        factors.sort_unstable();
        let mut acc = BigUint::from(1u8);
        let mut i = 0;
        while i < factors.len() {
            let chi = factors[i];
            let mut j = i + 1;
            while j < factors.len() && factors[j] == chi {
                j += 1;
            }
            if chi != 1 {
                acc *= BigUint::from(chi).pow((j - i) as u32);
            }
            i = j;
        }
        Cost(acc)
    }

    /// Natural logarithm as f64; `None`-free by mapping zero to `-inf`.
    ///
    /// For values wider than 53 bits the top 53 bits are used as mantissa and
    /// the discarded width re-enters as a multiple of ln 2, so the result is
    /// accurate to f64 precision at any magnitude.
    pub fn ln(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.0.bits();
        if bits <= 53 {
            return (self.0.to_u64().expect("fits in 53 bits") as f64).ln();
        }
        let shift = (bits - 53) as usize;
        let top = (&self.0 >> shift).to_u64().expect("top 53 bits") as f64;
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }

    /// Base-10 logarithm as f64 (`-inf` for zero).
    pub fn log10(&self) -> f64 {
        self.ln() / std::f64::consts::LN_10
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }
}

impl From<u64> for Cost {
    fn from(n: u64) -> Self {
        Cost(BigUint::from(n))
    }
}

impl From<BigUint> for Cost {
    fn from(n: BigUint) -> Self {
        Cost(n)
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost(self.0 + rhs.0)
    }
}

impl Add<&Cost> for Cost {
    type Output = Cost;
    fn add(self, rhs: &Cost) -> Cost {
        Cost(self.0 + &rhs.0)
    }
}

impl AddAssign<&Cost> for Cost {
    fn add_assign(&mut self, rhs: &Cost) {
        self.0 += &rhs.0;
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, rhs: Cost) {
        self.0 += rhs.0;
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::zero(), |acc, c| acc + c)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cost({})", self.0)
    }
}

impl FromStr for Cost {
    type Err = num_bigint::ParseBigIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Cost(BigUint::from_str(s)?))
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Cost::from_str(&s).map_err(serde::de::Error::custom)
    }
}
