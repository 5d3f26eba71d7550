//! Fixed-point embedding of reals into the field.
//!
//! A real `x` becomes `round(x * 2^k)`; negatives wrap into the upper half of
//! `[0, p)`. Encoding refuses values whose magnitude would let a sum of
//! `addends` such values wrap around the modulus.

use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldModulus};

/// Default number of fractional bits.
pub const DEFAULT_SCALE_EXPONENT: u32 = 40;

/// Largest scaled magnitude allowed when `addends` encodings may be summed.
pub fn headroom_limit(modulus: &FieldModulus, addends: usize) -> u128 {
    modulus.p() / (2 * addends.max(1) as u128)
}

pub fn encode_fixed(
    x: f64,
    scale_exponent: u32,
    modulus: &FieldModulus,
    addends: usize,
) -> Result<FieldElement> {
    let limit = headroom_limit(modulus, addends);
    let scaled = x * 2f64.powi(scale_exponent as i32);
    if !scaled.is_finite() || scaled.abs() >= limit as f64 {
        return Err(Error::Overflow {
            value: x,
            scale_exponent,
            limit,
        });
    }
    let rounded = scaled.round() as i128;
    if rounded.unsigned_abs() >= limit {
        return Err(Error::Overflow {
            value: x,
            scale_exponent,
            limit,
        });
    }
    Ok(modulus.from_signed(rounded))
}

pub fn decode_fixed(e: FieldElement, scale_exponent: u32, modulus: &FieldModulus) -> f64 {
    modulus.to_signed(e) as f64 / 2f64.powi(scale_exponent as i32)
}

/// Encoder bound to one modulus, scale and aggregation width.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixedPoint {
    pub modulus: FieldModulus,
    pub scale_exponent: u32,
    pub addends: usize,
}

impl FixedPoint {
    pub fn new(modulus: FieldModulus, scale_exponent: u32, addends: usize) -> Self {
        FixedPoint {
            modulus,
            scale_exponent,
            addends,
        }
    }

    pub fn encode(&self, x: f64) -> Result<FieldElement> {
        encode_fixed(x, self.scale_exponent, &self.modulus, self.addends)
    }

    pub fn decode(&self, e: FieldElement) -> f64 {
        decode_fixed(e, self.scale_exponent, &self.modulus)
    }

    pub fn encode_all(&self, xs: &[f64]) -> Result<Vec<FieldElement>> {
        xs.iter().map(|&x| self.encode(x)).collect()
    }

    /// Worst-case rounding error of a single encode/decode.
    pub fn quantum(&self) -> f64 {
        2f64.powi(-(self.scale_exponent as i32) - 1)
    }
}
