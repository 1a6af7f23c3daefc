//! Exact rational scalars: parsing from numeral strings and deterministic
//! formatting back out.
//!
//! Numerals are either fractions `a/b` or decimal literals (`0.5`, `-2`,
//! `1e-3`). Decimals are read exactly, so `0.1` is one tenth, not the nearest
//! double.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational number used throughout the crate.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty numeral")]
    Empty,
    #[error("invalid numeral {0:?}")]
    Invalid(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Parse a numeral string into an exact rational.
///
/// Accepts `a/b` fractions with integer parts, and decimal literals with an
/// optional sign, fractional part, and exponent.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| ParseRationalError::Invalid(s.to_owned()))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| ParseRationalError::Invalid(s.to_owned()))?;
        if d.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(s.to_owned()));
        }
        return Ok(Rational::new(n, d));
    }
    parse_decimal(t).ok_or_else(|| ParseRationalError::Invalid(s.to_owned()))
}

fn parse_decimal(t: &str) -> Option<Rational> {
    let (mantissa, exp) = match t.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut numer: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let mut denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    if exp >= 0 {
        numer *= BigInt::from(10u32).pow(exp as u32);
    } else {
        denom *= BigInt::from(10u32).pow(exp.unsigned_abs());
    }
    Some(Rational::new(BigInt::from(sign) * numer, denom))
}

/// Format a rational as `a/b`, or as a bare integer when the denominator is 1.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering of a rational rounded (half to even) to `sig` significant
/// digits, with trailing zeros trimmed. Used for human-readable output next to
/// the exact `a/b` form.
pub fn decimal_approx(r: &Rational, sig: u32) -> String {
    assert!(sig > 0, "need at least one significant digit");
    if r.is_zero() {
        return "0".to_owned();
    }
    let neg = r.is_negative();
    let n = r.numer().abs();
    let d = r.denom().clone();

    // Number of digits in the integer part (0 when |r| < 1).
    let int_digits = {
        let q = &n / &d;
        if q.is_zero() {
            0
        } else {
            q.to_string().len() as i64
        }
    };
    let frac_digits = if int_digits > 0 {
        sig as i64 - int_digits
    } else {
        // Leading zeros after the point until the first significant digit.
        let mut z = 0i64;
        let mut scaled = n.clone() * 10;
        while scaled < d {
            z += 1;
            scaled *= 10;
        }
        z + sig as i64
    };

    let (digits, point) = if frac_digits >= 0 {
        let scaled = round_half_even(&(n * BigInt::from(10u32).pow(frac_digits as u32)), &d);
        (scaled.to_string(), frac_digits as usize)
    } else {
        let shift = BigInt::from(10u32).pow((-frac_digits) as u32);
        let scaled = round_half_even(&n, &(d * &shift)) * shift;
        (scaled.to_string(), 0)
    };

    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if point == 0 {
        out.push_str(&digits);
    } else if digits.len() > point {
        out.push_str(&digits[..digits.len() - point]);
        out.push('.');
        out.push_str(&digits[digits.len() - point..]);
    } else {
        out.push_str("0.");
        for _ in 0..point - digits.len() {
            out.push('0');
        }
        out.push_str(&digits);
    }
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    out
}

fn round_half_even(n: &BigInt, d: &BigInt) -> BigInt {
    let (q, r) = n.div_rem(d);
    let twice = &r * 2;
    if &twice > d || (&twice == d && q.is_odd()) {
        q + 1
    } else {
        q
    }
}

/// Deterministic conversion to double precision via a 17-significant-digit
/// decimal rendering.
pub fn to_f64(r: &Rational) -> f64 {
    decimal_approx(r, 17).parse().unwrap_or(0.0)
}
