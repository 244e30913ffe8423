//! Exact rational input values.
//!
//! Configuration numbers arrive as JSON numbers, decimal strings (`"0.125"`,
//! `"-1.5e-3"`) or fractions (`"4/9"`). Strings are parsed exactly; JSON
//! numbers are taken as the exact value of the binary double they denote.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{FifError, Result};

/// Exact rational number as read from user input.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(pub BigRational);

impl Exact {
    pub fn from_f64(value: f64) -> Result<Self> {
        BigRational::from_float(value)
            .map(Exact)
            .ok_or_else(|| FifError::MalformedInput(format!("non-finite number {value}")))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.0)
    }

    pub fn into_inner(self) -> BigRational {
        self.0
    }
}

/// Correctly rounded conversion (the `ToPrimitive` impl rounds once).
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Smallest double not below `r`.
pub fn ratio_to_f64_up(r: &BigRational) -> f64 {
    let approx = ratio_to_f64(r);
    match BigRational::from_float(approx) {
        Some(back) if &back < r => approx.next_up(),
        _ => approx,
    }
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn ratio_from_f64(value: f64) -> Result<BigRational> {
    Exact::from_f64(value).map(Exact::into_inner)
}

fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(pos) => (&digits[..pos], &digits[pos + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(BigInt::from_str(&all_digits).ok()?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let power = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= power;
    } else {
        value /= power;
    }
    Some(if negative { -value } else { value })
}

impl FromStr for Exact {
    type Err = FifError;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || FifError::MalformedInput(format!("cannot parse number {text:?}"));
        if let Some((num, den)) = text.split_once('/') {
            let num = parse_decimal(num.trim()).ok_or_else(bad)?;
            let den = parse_decimal(den.trim()).ok_or_else(bad)?;
            if den.is_zero() {
                return Err(FifError::MalformedInput(format!("zero denominator in {text:?}")));
            }
            return Ok(Exact(num / den));
        }
        parse_decimal(text).map(Exact).ok_or_else(bad)
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Int(v) => Ok(Exact(BigRational::from_integer(BigInt::from(v)))),
            Raw::Float(v) => Exact::from_f64(v),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}
