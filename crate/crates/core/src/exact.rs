//! Order-independent summation.
//!
//! Each term is rounded once to a multiple of `2^-64` and accumulated as an
//! `i128`, so sums are exactly associative and commutative: any partition of
//! a stream into shards, merged in any order, reproduces the same bits.

/// Fixed-point accumulator with `2^-64` resolution and range `±2^63`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ExactSum(i128);

const SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

impl ExactSum {
    pub const ZERO: ExactSum = ExactSum(0);

    /// Fixed-point image of `x`; panics on non-finite or out-of-range input.
    pub fn quantize(x: f64) -> i128 {
        assert!(x.is_finite() && x.abs() < 9.2e18, "value {x} outside the fixed-point range");
        (x * SCALE).round() as i128
    }

    pub fn add(&mut self, x: f64) {
        self.0 += Self::quantize(x);
    }

    pub fn merge(&mut self, other: &ExactSum) {
        self.0 += other.0;
    }

    pub fn value(&self) -> f64 {
        self.0 as f64 / SCALE
    }

    pub fn raw(&self) -> i128 {
        self.0
    }

    pub fn from_raw(raw: i128) -> Self {
        Self(raw)
    }

    pub fn to_le_bytes(&self) -> [u8; 16] {
        self.0.to_le_bytes()
    }

    pub fn from_le_bytes(bytes: [u8; 16]) -> Self {
        Self(i128::from_le_bytes(bytes))
    }
}
