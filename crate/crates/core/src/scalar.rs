//! Numeric domain for costs, durations and ordering keys.
//!
//! Everything that accumulates cost is generic over [`Scalar`]. The exact
//! [`Rational`] instantiation is the default used by the DSL front-end and
//! the CLI; `f64`/`f32` are provided for embedders that want float costs.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Num, ToPrimitive, Zero};

/// Exact rational used for costs parsed from text.
pub type Rational = Ratio<i64>;

/// Requirements on a cost-like number.
pub trait Scalar:
    Num + Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Converts an exact rational (table entries, config thresholds).
    fn from_rational(r: &Rational) -> Option<Self>;

    /// Finite and non-negative. Branch-and-bound pruning is only admissible
    /// over such values.
    fn is_admissible(&self) -> bool;

    fn to_f64(&self) -> f64;

    /// JSON form: integers as numbers, everything exact-but-fractional as a
    /// `"p/q"` string.
    fn to_json(&self) -> serde_json::Value;

    fn from_u64(n: u64) -> Self {
        Self::from_rational(&Rational::from_integer(n as i64)).expect("integer conversion")
    }
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Option<Self> {
        Some(*r)
    }

    fn is_admissible(&self) -> bool {
        *self >= Rational::zero()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_json(&self) -> serde_json::Value {
        if self.is_integer() {
            serde_json::Value::from(self.to_integer())
        } else {
            serde_json::Value::from(self.to_string())
        }
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_rational(r: &Rational) -> Option<Self> {
                let v = (*r.numer() as f64) / (*r.denom() as f64);
                Some(v as $t)
            }

            fn is_admissible(&self) -> bool {
                self.is_finite() && *self >= 0.0
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn to_json(&self) -> serde_json::Value {
                serde_json::Number::from_f64(*self as f64)
                    .map(serde_json::Value::Number)
                    .unwrap_or(serde_json::Value::Null)
            }
        }
    };
}

float_scalar!(f64);
float_scalar!(f32);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid number `{0}`")]
pub struct ParseRationalError(pub String);

/// Parses `7`, `-3`, `5/2` or `2.25` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let t = text.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = i64::from_str(n.trim()).map_err(|_| err())?;
        let d = i64::from_str(d.trim()).map_err(|_| err())?;
        if d == 0 {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return Err(err());
        }
        let negative = int.starts_with('-');
        let whole = if int.is_empty() || int == "-" {
            0
        } else {
            i64::from_str(int).map_err(|_| err())?.abs()
        };
        let denom = 10i64.checked_pow(frac.len() as u32).ok_or_else(err)?;
        let frac_val = i64::from_str(frac).map_err(|_| err())?;
        let numer = whole
            .checked_mul(denom)
            .and_then(|w| w.checked_add(frac_val))
            .ok_or_else(err)?;
        let r = Rational::new(numer, denom);
        return Ok(if negative { -r } else { r });
    }
    i64::from_str(t)
        .map(Rational::from_integer)
        .map_err(|_| err())
}

/// Parses text into any scalar via the exact rational route.
pub fn parse_scalar<C: Scalar>(text: &str) -> Result<C, ParseRationalError> {
    let r = parse_rational(text)?;
    C::from_rational(&r).ok_or_else(|| ParseRationalError(text.to_string()))
}

/// Sum of an iterator of scalars.
pub fn sum<C: Scalar, I: IntoIterator<Item = C>>(items: I) -> C {
    items.into_iter().fold(C::zero(), |acc, x| acc + x)
}

/// `max` for partially ordered values; incomparable values keep the left one.
pub fn max_of<C: Scalar>(a: C, b: C) -> C {
    if b > a {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integer_fraction_and_decimal() {
        assert_eq!(parse_rational("7").unwrap(), Rational::from_integer(7));
        assert_eq!(parse_rational("5/2").unwrap(), Rational::new(5, 2));
        assert_eq!(parse_rational("2.25").unwrap(), Rational::new(9, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), Rational::new(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn admissibility() {
        assert!(Rational::from_integer(0).is_admissible());
        assert!(!Rational::new(-1, 3).is_admissible());
        assert!(!f64::NAN.is_admissible());
        assert!(!f64::INFINITY.is_admissible());
        assert!(2.0f32.is_admissible());
    }

    #[test]
    fn json_form_is_exact() {
        assert_eq!(Rational::from_integer(16).to_json(), serde_json::json!(16));
        assert_eq!(Rational::new(1, 3).to_json(), serde_json::json!("1/3"));
    }

    #[test]
    fn generic_parse_for_floats() {
        let v: f64 = parse_scalar("5/2").unwrap();
        assert_eq!(v, 2.5);
    }
}
