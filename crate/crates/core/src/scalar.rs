//! Scalar abstractions shared by the preprocessing and analytics code.
//!
//! [`SourceFloat`] covers the IEEE-754 widths a column can arrive in, and
//! [`Real`] is the floating type the clustering code computes with.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// An IEEE-754 source precision (`f32` or `f64`).
pub trait SourceFloat: Float + Display + Debug + FromStr + Send + Sync + Default + 'static {
    /// Storage width in bits.
    const BITS: u8;

    /// Raw bit pattern, zero-extended into a `u64`.
    fn to_raw(self) -> u64;

    /// Inverse of [`SourceFloat::to_raw`]; high bits beyond `BITS` are ignored.
    fn from_raw(raw: u64) -> Self;

    fn to_f64_lossless(self) -> f64;

    /// Nearest value of this precision.
    fn from_f64_rounded(v: f64) -> Self;

    /// Number of digits after the decimal point in the shortest
    /// round-trip decimal form of `self`. Zero for non-finite values.
    fn decimal_places(self) -> u32 {
        if !self.is_finite() {
            return 0;
        }
        let text = self.to_string();
        match text.find('.') {
            Some(dot) => (text.len() - dot - 1) as u32,
            None => 0,
        }
    }
}

impl SourceFloat for f32 {
    const BITS: u8 = 32;

    fn to_raw(self) -> u64 {
        u64::from(self.to_bits())
    }

    fn from_raw(raw: u64) -> Self {
        f32::from_bits(raw as u32)
    }

    fn to_f64_lossless(self) -> f64 {
        f64::from(self)
    }

    fn from_f64_rounded(v: f64) -> Self {
        v as f32
    }
}

impl SourceFloat for f64 {
    const BITS: u8 = 64;

    fn to_raw(self) -> u64 {
        self.to_bits()
    }

    fn from_raw(raw: u64) -> Self {
        f64::from_bits(raw)
    }

    fn to_f64_lossless(self) -> f64 {
        self
    }

    fn from_f64_rounded(v: f64) -> Self {
        v
    }
}

/// Floating type used for clustering and metric computations.
pub trait Real: Float + FromPrimitive + ToPrimitive + Sum + Debug + Default + Send + Sync + 'static {
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_places_uses_shortest_form() {
        assert_eq!(0.39f32.decimal_places(), 2);
        assert_eq!(0.39f64.decimal_places(), 2);
        assert_eq!(98.92f32.decimal_places(), 2);
        assert_eq!(3.0f64.decimal_places(), 0);
        assert_eq!(1.0e-7f64.decimal_places(), 7);
        assert_eq!(f64::NAN.decimal_places(), 0);
    }

    #[test]
    fn raw_bits_round_trip() {
        assert_eq!(f32::from_raw(1.5f32.to_raw()), 1.5);
        assert_eq!(1.5f32.to_raw(), 0x3fc0_0000);
        assert_eq!(f64::from_raw((-0.0f64).to_raw()).to_bits(), (-0.0f64).to_bits());
    }
}
