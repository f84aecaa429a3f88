//! `HPReal`: an arbitrary-precision real with explicit precision tracking.
//!
//! Thin wrapper over MPFR floats. Mixed-precision arithmetic rounds into the
//! larger of the two operand precisions; directed-rounding variants are
//! provided for the handful of places that need certified one-sided results
//! (eigenvalue enclosures, final bound rounding).
//!
//! Decimal serialization emits `ceil(p_bits * log10(2)) + 1` significant
//! digits; the extra digit over the naive count is what makes
//! decimal-then-parse round-trips exact at equal precision.

use rug::float::Round;
use rug::ops::{AddAssignRound, DivAssignRound, MulAssignRound, SubAssignRound};
use rug::Float;
use std::cmp::Ordering;
use std::fmt;

use super::HpError;

#[derive(Debug, Clone, PartialEq)]
pub struct HPReal(Float);

/// Number of significant decimal digits that guarantee an exact
/// binary -> decimal -> binary round-trip at `p_bits` precision.
pub fn decimal_digits(p_bits: u32) -> usize {
    // ceil(p_bits * log10(2)) + 1, computed without floating error for any
    // realistic precision: log10(2) = 0.30102999566398119521...
    (p_bits as usize * 30_103).div_ceil(100_000) + 1
}

impl HPReal {
    pub fn zero(prec: u32) -> HPReal {
        HPReal(Float::with_val(prec, 0))
    }

    pub fn one(prec: u32) -> HPReal {
        HPReal(Float::with_val(prec, 1))
    }

    pub fn from_u64(v: u64, prec: u32) -> HPReal {
        HPReal(Float::with_val(prec, v))
    }

    pub fn from_i64(v: i64, prec: u32) -> HPReal {
        HPReal(Float::with_val(prec, v))
    }

    pub fn from_f64(v: f64, prec: u32) -> HPReal {
        HPReal(Float::with_val(prec, v))
    }

    /// Parse a decimal string (as produced by [`HPReal::to_decimal`]).
    pub fn parse_decimal(s: &str, prec: u32) -> Result<HPReal, HpError> {
        let incomplete = Float::parse(s).map_err(|_| HpError::Parse(s.to_string()))?;
        Ok(HPReal(Float::with_val(prec, incomplete)))
    }

    /// Parse a radix-16 string (as produced by [`HPReal::to_hex`]).
    pub fn parse_hex(s: &str, prec: u32) -> Result<HPReal, HpError> {
        let incomplete = Float::parse_radix(s, 16).map_err(|_| HpError::Parse(s.to_string()))?;
        Ok(HPReal(Float::with_val(prec, incomplete)))
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_sign_positive() && !self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.cmp0() == Some(std::cmp::Ordering::Less)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    /// Scientific-notation decimal string with the round-trip digit count
    /// for this value's precision.
    pub fn to_decimal(&self) -> String {
        let digits = decimal_digits(self.prec());
        let (sign, mantissa, exp) = self.0.to_sign_string_exp(10, Some(digits));
        format_sci(sign, &mantissa, exp)
    }

    /// Exact radix-16 representation (round-trips at equal precision by
    /// construction; used for checkpoint files).
    pub fn to_hex(&self) -> String {
        let (sign, mantissa, exp) = self.0.to_sign_string_exp(16, None);
        let sig = if sign { "-" } else { "" };
        match exp {
            Some(e) => format!("{sig}0.{mantissa}@{e}"),
            None => format!("{sig}{mantissa}"), // zero / non-finite
        }
    }

    // -- exact operations ---------------------------------------------------

    pub fn neg(&self) -> HPReal {
        HPReal(Float::with_val(self.prec(), -&self.0))
    }

    pub fn abs(&self) -> HPReal {
        HPReal(Float::with_val(self.prec(), self.0.abs_ref()))
    }

    /// Multiply by 2^k exactly.
    pub fn ldexp(&self, k: i32) -> HPReal {
        let mut f = self.0.clone();
        if k >= 0 {
            f <<= k as u32;
        } else {
            f >>= (-k) as u32;
        }
        HPReal(f)
    }

    /// Binary exponent of the value (None for zero).
    pub fn exponent(&self) -> Option<i32> {
        self.0.get_exp()
    }

    // -- round-to-nearest arithmetic, result at max operand precision -------

    pub fn add(&self, rhs: &HPReal) -> HPReal {
        self.bin_op(rhs, Round::Nearest, |a, b, r| {
            a.add_assign_round(b, r);
        })
    }

    pub fn sub(&self, rhs: &HPReal) -> HPReal {
        self.bin_op(rhs, Round::Nearest, |a, b, r| {
            a.sub_assign_round(b, r);
        })
    }

    pub fn mul(&self, rhs: &HPReal) -> HPReal {
        self.bin_op(rhs, Round::Nearest, |a, b, r| {
            a.mul_assign_round(b, r);
        })
    }

    pub fn div(&self, rhs: &HPReal) -> HPReal {
        self.bin_op(rhs, Round::Nearest, |a, b, r| {
            a.div_assign_round(b, r);
        })
    }

    /// Fused form used in inner loops: `self += x * y` (two roundings, both
    /// at `self`'s precision).
    pub fn add_mul_assign(&mut self, x: &HPReal, y: &HPReal) {
        let prec = self.prec().max(x.prec()).max(y.prec());
        let mut t = Float::with_val(prec, &x.0);
        t.mul_assign_round(&y.0, Round::Nearest);
        if self.prec() < prec {
            self.0.set_prec(prec);
        }
        self.0.add_assign_round(&t, Round::Nearest);
    }

    /// In-place `self += other`, rounding to nearest at the wider precision.
    pub fn add_assign(&mut self, other: &HPReal) {
        let prec = self.prec().max(other.prec());
        if self.prec() < prec {
            self.0.set_prec(prec);
        }
        self.0.add_assign_round(&other.0, Round::Nearest);
    }

    pub fn sqrt(&self) -> HPReal {
        let mut f = self.0.clone();
        f.sqrt_round(Round::Nearest);
        HPReal(f)
    }

    /// k-th root, round to nearest.
    pub fn root(&self, k: u32) -> HPReal {
        let mut f = self.0.clone();
        f.root_round(k, Round::Nearest);
        HPReal(f)
    }

    // -- directed-rounding variants -----------------------------------------

    pub fn add_up(&self, rhs: &HPReal) -> HPReal {
        self.bin_op(rhs, Round::Up, |a, b, r| {
            a.add_assign_round(b, r);
        })
    }

    pub fn div_up(&self, rhs: &HPReal) -> HPReal {
        self.bin_op(rhs, Round::Up, |a, b, r| {
            a.div_assign_round(b, r);
        })
    }

    pub fn div_down(&self, rhs: &HPReal) -> HPReal {
        self.bin_op(rhs, Round::Down, |a, b, r| {
            a.div_assign_round(b, r);
        })
    }

    pub fn root_up(&self, k: u32) -> HPReal {
        let mut f = self.0.clone();
        f.root_round(k, Round::Up);
        HPReal(f)
    }

    pub fn root_down(&self, k: u32) -> HPReal {
        let mut f = self.0.clone();
        f.root_round(k, Round::Down);
        HPReal(f)
    }

    /// Round-trip through a lower precision, rounding up (used to round a
    /// bound upward at output precision).
    pub fn round_up_to_prec(&self, prec: u32) -> HPReal {
        let (f, _) = Float::with_val_round(prec, &self.0, Round::Up);
        HPReal(f)
    }

    pub fn round_down_to_prec(&self, prec: u32) -> HPReal {
        let (f, _) = Float::with_val_round(prec, &self.0, Round::Down);
        HPReal(f)
    }

    /// Re-round to a new precision, nearest.
    pub fn to_prec(&self, prec: u32) -> HPReal {
        HPReal(Float::with_val(prec, &self.0))
    }

    /// Decimal string rounded *upward* at exactly `digits` significant
    /// digits (used for reporting certified upper bounds).
    pub fn to_decimal_up(&self, digits: usize) -> String {
        let (sign, mantissa, exp) = self.0.to_sign_string_exp_round(10, Some(digits), Round::Up);
        format_sci(sign, &mantissa, exp)
    }

    pub fn to_decimal_down(&self, digits: usize) -> String {
        let (sign, mantissa, exp) = self
            .0
            .to_sign_string_exp_round(10, Some(digits), Round::Down);
        format_sci(sign, &mantissa, exp)
    }

    fn bin_op(
        &self,
        rhs: &HPReal,
        round: Round,
        op: impl Fn(&mut Float, &Float, Round),
    ) -> HPReal {
        let prec = self.prec().max(rhs.prec());
        let mut out = Float::with_val(prec, &self.0);
        op(&mut out, &rhs.0, round);
        HPReal(out)
    }
}

/// `1.2345e-3`-style scientific notation from rug's (sign, digits, exp)
/// decomposition, where `exp` is the position of the radix point.
fn format_sci(sign: bool, mantissa: &str, exp: Option<i32>) -> String {
    let sig = if sign { "-" } else { "" };
    match exp {
        None => format!("{sig}{mantissa}"), // "0" / "inf" / "nan"
        Some(e) => {
            let (head, tail) = mantissa.split_at(1);
            if tail.is_empty() {
                format!("{sig}{head}e{}", e - 1)
            } else {
                format!("{sig}{head}.{tail}e{}", e - 1)
            }
        }
    }
}

impl PartialOrd for HPReal {
    fn partial_cmp(&self, other: &HPReal) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl fmt::Display for HPReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal())
    }
}
