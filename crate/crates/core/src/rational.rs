//! Exact rational numbers and their text encoding.
//!
//! Every cost, LP value and solution coordinate in the crate is a
//! [`Rational`]. The text form is `"p/q"` in lowest terms, or a bare integer
//! when the denominator is one.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

/// Arbitrary-precision fraction, always normalized.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed rational {0:?}")]
pub struct ParseRationalError(pub String);

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn half() -> Rational {
    ratio(1, 2)
}

/// Parses `"p/q"`, `"p"` or `"-p/q"`. The denominator must be positive.
pub fn parse(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| err())?;
    let den: BigInt = den.parse().map_err(|_| err())?;
    if !den.is_positive() {
        return Err(err());
    }
    Ok(Rational::new(num, den))
}

/// `"p/q"` in lowest terms, or `"p"` for integers.
pub fn format(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Decimal rendering for human consumption. Never fed back into computation.
pub fn approx(value: &Rational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (value * Rational::from_integer(scale.clone())).round();
    let n = scaled.to_integer();
    let neg = n.is_negative();
    let n = n.abs();
    let int_part = &n / &scale;
    let frac_part = &n % &scale;
    let mut s = String::new();
    if neg && !n.is_zero() {
        s.push('-');
    }
    s.push_str(&int_part.to_string());
    if digits > 0 {
        s.push('.');
        s.push_str(&format!(
            "{:0>width$}",
            frac_part.to_string(),
            width = digits
        ));
    }
    s
}

/// JSON value for a rational: a number when integral and small, else a string.
pub fn to_json(value: &Rational) -> serde_json::Value {
    if value.denom().is_one() {
        if let Ok(i) = i64::try_from(value.numer()) {
            return serde_json::Value::from(i);
        }
    }
    serde_json::Value::String(format(value))
}

pub fn from_json(value: &serde_json::Value) -> Result<Rational, ParseRationalError> {
    match value {
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(int(i))
            } else if let Some(u) = n.as_u64() {
                Ok(Rational::from_integer(BigInt::from(u)))
            } else {
                Err(ParseRationalError(n.to_string()))
            }
        }
        serde_json::Value::String(s) => parse(s),
        other => Err(ParseRationalError(other.to_string())),
    }
}

/// `#[serde(with = "crate::rational::serde_rational")]`
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, ser: S) -> Result<S::Ok, S::Error> {
        if value.denom().is_one() {
            if let Ok(i) = i64::try_from(value.numer()) {
                return ser.serialize_i64(i);
            }
        }
        ser.serialize_str(&format(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Rational, D::Error> {
        de.deserialize_any(RationalVisitor)
    }

    struct RationalVisitor;

    impl<'de> Visitor<'de> for RationalVisitor {
        type Value = Rational;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an integer or a \"p/q\" string")
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
            Ok(int(v))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
            Ok(Rational::from_integer(BigInt::from(v)))
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
            Err(E::custom(format!(
                "floating-point value {v} is not allowed; use \"p/q\""
            )))
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
            parse(v).map_err(E::custom)
        }
    }
}

/// Same as [`serde_rational`] for `Vec<Rational>`.
pub mod serde_rational_vec {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::Deserialize;

    pub fn serialize<S: Serializer>(values: &[Rational], ser: S) -> Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&to_json(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<serde_json::Value>::deserialize(de)?;
        raw.iter()
            .map(|v| from_json(v).map_err(de::Error::custom))
            .collect()
    }
}

pub fn sum<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Rational {
    values.into_iter().fold(Rational::zero(), |acc, v| acc + v)
}

pub fn one() -> Rational {
    Rational::one()
}
