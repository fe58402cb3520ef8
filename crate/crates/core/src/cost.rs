//! Exact rational cost arithmetic.
//!
//! All edit and node costs are `Ratio<i64>` so that threshold comparisons
//! (`λ + 5 < 2λ` and the like) and golden values (`7λ`, `5λ + 2`) are exact.
//! Floating point enters only at the reporting boundary (CSV, JSON reports).

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::DssspError;

pub type Cost = Ratio<i64>;

/// Cost of `n` as an exact rational.
pub fn cost(n: i64) -> Cost {
    Ratio::from_integer(n)
}

pub fn zero() -> Cost {
    Cost::zero()
}

/// Parse a nonnegative cost given as an integer, a decimal (`0.75`), or a
/// fraction (`3/4`).
pub fn parse_cost(s: &str) -> Result<Cost, DssspError> {
    let s = s.trim();
    let bad = || DssspError::Input(format!("cannot parse `{s}` as a nonnegative rational"));
    let value = if let Some((num, den)) = s.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| bad())?;
        let den: i64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        Ratio::new(num, den)
    } else if let Some((int, frac)) = s.split_once('.') {
        let int_part: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: i64 = frac.parse().map_err(|_| bad())?;
        let scale = 10i64.pow(frac.len() as u32);
        let negative = int.starts_with('-');
        let frac_part = Ratio::new(digits, scale);
        let whole = Ratio::from_integer(int_part);
        if negative {
            whole - frac_part
        } else {
            whole + frac_part
        }
    } else {
        Ratio::from_integer(s.parse().map_err(|_| bad())?)
    };
    if value.is_negative() {
        return Err(bad());
    }
    Ok(value)
}

/// Canonical text form (`3/4`, `2`); parses back exactly.
pub fn format_cost(c: &Cost) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub fn cost_to_f64(c: &Cost) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}
