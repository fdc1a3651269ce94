//! Exact decimal values `mantissa * 10^exponent`, used for every constant that
//! is published in a certificate. Rounding is always directed.

use std::fmt;
use std::str::FromStr;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decimal {
    mantissa: Integer,
    exponent: i32,
}

fn pow10(e: i32) -> Rational {
    let base = Integer::from(10).pow(e.unsigned_abs());
    if e >= 0 {
        Rational::from(base)
    } else {
        Rational::from((Integer::from(1), base))
    }
}

/// `floor(log10 |x|)` for nonzero `x`.
fn decimal_exponent(x: &Rational) -> i32 {
    let ax = Rational::from(x.abs_ref());
    let bits = ax.numer().significant_bits() as i64 - ax.denom().significant_bits() as i64;
    let mut e = (bits as f64 * std::f64::consts::LOG10_2).floor() as i32;
    while pow10(e) > ax {
        e -= 1;
    }
    while pow10(e + 1) <= ax {
        e += 1;
    }
    e
}

impl Decimal {
    pub fn new(mantissa: impl Into<Integer>, exponent: i32) -> Self {
        Self {
            mantissa: mantissa.into(),
            exponent,
        }
    }

    pub fn zero() -> Self {
        Self::new(0, 0)
    }

    /// Smallest value with `sig` significant digits that is `>= x`.
    pub fn round_up(x: &Rational, sig: u32) -> Self {
        Self::round_directed(x, sig, true)
    }

    /// Largest value with `sig` significant digits that is `<= x`.
    pub fn round_down(x: &Rational, sig: u32) -> Self {
        Self::round_directed(x, sig, false)
    }

    fn round_directed(x: &Rational, sig: u32, upward: bool) -> Self {
        assert!(sig >= 1);
        if *x == 0 {
            return Self::zero();
        }
        let mut k = decimal_exponent(x) - sig as i32 + 1;
        let scaled = Rational::from(x / &pow10(k));
        let mut m = if upward { scaled.ceil() } else { scaled.floor() }
            .numer()
            .clone();
        let limit = Integer::from(10).pow(sig);
        if Integer::from(m.abs_ref()) >= limit {
            // carried into a new digit, e.g. 9.9995 -> 10.00; m is exactly +-10^sig here
            m /= 10;
            k += 1;
        }
        let d = Self::new(m, k);
        debug_assert!(if upward { d.to_rational() >= *x } else { d.to_rational() <= *x });
        d
    }

    pub fn from_integer(n: &Integer) -> Self {
        Self::new(n.clone(), 0)
    }

    pub fn mantissa(&self) -> &Integer {
        &self.mantissa
    }

    pub fn exponent(&self) -> i32 {
        self.exponent
    }

    pub fn to_rational(&self) -> Rational {
        Rational::from(&self.mantissa) * pow10(self.exponent)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64()
    }

    pub fn ceil_integer(&self) -> Integer {
        self.to_rational().ceil().numer().clone()
    }

    pub fn floor_integer(&self) -> Integer {
        self.to_rational().floor().numer().clone()
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.to_rational().cmp(&other.to_rational())
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mantissa == 0 {
            return write!(f, "0");
        }
        let neg = self.mantissa < 0;
        let digits = Integer::from(self.mantissa.abs_ref()).to_string();
        let sci_exp = self.exponent + digits.len() as i32 - 1;
        let (head, tail) = digits.split_at(1);
        let sign = if neg { "-" } else { "" };
        if tail.is_empty() {
            write!(f, "{sign}{head}e{sci_exp}")
        } else {
            write!(f, "{sign}{head}.{tail}e{sci_exp}")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDecimalError(String);

impl fmt::Display for ParseDecimalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid decimal literal: {}", self.0)
    }
}

impl std::error::Error for ParseDecimalError {}

impl FromStr for Decimal {
    type Err = ParseDecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseDecimalError(s.to_string());
        let s = s.trim();
        let (body, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| err())?),
            None => (s, 0),
        };
        let (neg, body) = match body.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, body),
        };
        let (int_part, frac_part) = match body.find('.') {
            Some(i) => (&body[..i], &body[i + 1..]),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut m: Integer = digits.parse().map_err(|_| err())?;
        if neg {
            m = -m;
        }
        Ok(Self::new(m, exp - frac_part.len() as i32))
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serializes a big integer as a decimal string.
pub fn serialize_integer<S: Serializer>(n: &Integer, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_str(&n.to_string())
}

/// Big integers as decimal strings, both directions.
pub mod integer_string {
    use rug::Integer;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &Integer, serializer: S) -> Result<S::Ok, S::Error> {
        super::serialize_integer(n, serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Integer, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serializes a list of big integers as decimal strings.
pub fn serialize_integers<S: Serializer>(v: &[Integer], serializer: S) -> Result<S::Ok, S::Error> {
    serializer.collect_seq(v.iter().map(|n| n.to_string()))
}

/// Serializes integer pairs as two-element arrays of decimal strings.
pub fn serialize_integer_pairs<S: Serializer>(
    v: &[(Integer, Integer)],
    serializer: S,
) -> Result<S::Ok, S::Error> {
    serializer.collect_seq(v.iter().map(|(a, b)| [a.to_string(), b.to_string()]))
}

/// Serializes a certified real as its upper endpoint rounded up to four
/// significant digits.
pub fn serialize_real_upper<S: Serializer>(
    x: &crate::real::HighPrecReal,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    x.upper_decimal(4).serialize(serializer)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn rounds_up_to_four_significant_digits() {
        let d = Decimal::round_up(&q(21972245773, 10_000_000_000), 4);
        assert_eq!(d.to_string(), "2.198e0");
        let d = Decimal::round_up(&q(2000, 1), 4);
        assert_eq!(d.to_string(), "2.000e3");
        assert_eq!(d.to_rational(), 2000);
    }

    #[test]
    fn carry_into_next_decade() {
        let d = Decimal::round_up(&q(99996, 10), 4);
        assert_eq!(d.to_string(), "1.000e4");
    }

    #[test]
    fn negative_values_round_toward_plus_infinity() {
        let d = Decimal::round_up(&q(-19866, 10000), 3);
        assert_eq!(d.to_string(), "-1.98e0");
        let d = Decimal::round_down(&q(-19866, 10000), 3);
        assert_eq!(d.to_string(), "-1.99e0");
    }

    #[test]
    fn parse_and_display_agree() {
        for s in ["7.960e12", "1.5e45", "-3.25e-7", "4e0"] {
            let d: Decimal = s.parse().unwrap();
            let again: Decimal = d.to_string().parse().unwrap();
            assert_eq!(d.to_rational(), again.to_rational());
        }
        assert!("abc".parse::<Decimal>().is_err());
    }
}
