//! Exact rational numbers and their `{num, den}` interchange form.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses "7", "-13/4" or "2.5" (finite decimals only).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::validation(format!("not a rational number: '{s}'"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(rat(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = whole.starts_with('-');
        let w: i64 = if whole.is_empty() || whole == "-" {
            0
        } else {
            whole.parse().map_err(|_| bad())?
        };
        let den = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().map_err(|_| bad())?;
        let mag = w.abs() * den + f;
        return Ok(rat(if neg { -mag } else { mag }, den));
    }
    s.parse::<i64>().map(int).map_err(|_| bad())
}

#[derive(Serialize, Deserialize)]
struct Repr {
    num: i64,
    den: i64,
}

/// Serde adapter: `#[serde(with = "crate::rational::serde_rational")]`.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        Repr {
            num: *r.numer(),
            den: *r.denom(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let r = Repr::deserialize(d)?;
        if r.den == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(rat(r.num, r.den))
    }
}

/// A rational that serializes as `{num, den}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(pub Rational);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde_rational::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        serde_rational::deserialize(d).map(Exact)
    }
}

impl From<Rational> for Exact {
    fn from(r: Rational) -> Self {
        Exact(r)
    }
}

/// Least common multiple of the denominators, used to move to integer arithmetic.
pub(crate) fn common_denominator<'a>(it: impl IntoIterator<Item = &'a Rational>) -> i64 {
    it.into_iter()
        .fold(1i64, |acc, r| num_integer::lcm(acc, *r.denom()))
}

pub(crate) fn scaled_integer(r: &Rational, den: i64) -> i64 {
    debug_assert!(!den.is_zero());
    r.numer() * (den / r.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_forms() {
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational("-13/4").unwrap(), rat(-13, 4));
        assert_eq!(parse_rational("2.5").unwrap(), rat(5, 2));
        assert_eq!(parse_rational("-0.25").unwrap(), rat(-1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn json_form_is_num_den() {
        let s = serde_json::to_string(&Exact(rat(-6, 4))).unwrap();
        assert_eq!(s, r#"{"num":-3,"den":2}"#);
        let back: Exact = serde_json::from_str(&s).unwrap();
        assert_eq!(back.0, rat(-3, 2));
    }
}
