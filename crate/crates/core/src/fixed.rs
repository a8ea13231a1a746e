//! 32-bit fixed-point scalar type.
//!
//! All feature-map and weight data is carried as Q(31-F).F two's-complement
//! values sharing one fraction-bit count `F` per run (default 16). Addition
//! wraps in 32 bits; multiplication forms the exact 64-bit product and then
//! arithmetic-shifts right by `F`, truncating toward negative infinity. Both
//! the brute-force reference and the tiled kernel use these exact semantics,
//! which is what makes their equivalence bit-exact.

use crate::error::{Error, Result};

/// Default number of fraction bits (Q16.16).
pub const DEFAULT_FRAC_BITS: u32 = 16;

/// A 32-bit two's-complement fixed-point value with an external fraction-bit
/// count. The represented real value is `raw / 2^F`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct FixedPoint32(i32);

impl FixedPoint32 {
    pub const ZERO: Self = Self(0);

    /// Wrap a raw two's-complement value.
    #[inline]
    pub const fn from_raw(raw: i32) -> Self {
        Self(raw)
    }

    /// The raw two's-complement payload.
    #[inline]
    pub const fn raw(self) -> i32 {
        self.0
    }

    /// 1.0 under `frac_bits` fraction bits (`raw == 2^F`).
    #[inline]
    pub const fn one(frac_bits: u32) -> Self {
        Self(1 << frac_bits)
    }

    /// Quantize a real value with round-to-nearest-even.
    ///
    /// Fails with [`Error::Range`] when the rounded value does not fit in 32
    /// bits (the representable range is about `|v| < 2^(31-F)`).
    pub fn from_real(v: f64, frac_bits: u32) -> Result<Self> {
        debug_assert!(frac_bits <= 31);
        let scaled = (v * (1u64 << frac_bits) as f64).round_ties_even();
        if !(scaled >= i32::MIN as f64 && scaled <= i32::MAX as f64) {
            return Err(Error::Range(format!(
                "{v} is not representable with {frac_bits} fraction bits"
            )));
        }
        Ok(Self(scaled as i32))
    }

    /// De-quantize to a real value (exact: f64 holds any i32 / 2^F).
    #[inline]
    pub fn to_real(self, frac_bits: u32) -> f64 {
        self.0 as f64 / (1u64 << frac_bits) as f64
    }

    /// Wrapping two's-complement addition.
    #[inline]
    pub fn wrapping_add(self, rhs: Self) -> Self {
        Self(self.0.wrapping_add(rhs.0))
    }

    /// Wrapping two's-complement subtraction.
    #[inline]
    pub fn wrapping_sub(self, rhs: Self) -> Self {
        Self(self.0.wrapping_sub(rhs.0))
    }

    /// Fixed-point product: exact 64-bit multiply, arithmetic shift right by
    /// `frac_bits` (truncation toward negative infinity), wrap to 32 bits.
    #[inline]
    pub fn mul(self, rhs: Self, frac_bits: u32) -> Self {
        let product = self.0 as i64 * rhs.0 as i64;
        Self((product >> frac_bits) as i32)
    }

    /// Multiply-accumulate: `self + a * b` with the wrapping/truncating
    /// semantics above. This is the single arithmetic step of the kernels.
    #[inline]
    pub fn mac(self, a: Self, b: Self, frac_bits: u32) -> Self {
        self.wrapping_add(a.mul(b, frac_bits))
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// `max(0, x)` on the raw value.
    #[inline]
    pub fn relu(self) -> Self {
        Self(self.0.max(0))
    }

    /// Hyperbolic tangent computed by de-quantizing, applying `f64::tanh`,
    /// and re-quantizing. `|tanh| < 1` is always representable.
    #[inline]
    pub fn tanh(self, frac_bits: u32) -> Self {
        let scaled = (self.to_real(frac_bits).tanh() * (1u64 << frac_bits) as f64)
            .round_ties_even();
        Self(scaled as i32)
    }
}
