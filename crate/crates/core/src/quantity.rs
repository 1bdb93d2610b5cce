//! Exact numeric values for measurements and expected intervals.
//!
//! Percentages such as `100 * 1 / 3` have no finite decimal expansion, so
//! actual values are kept as reduced rationals and compared exactly. On the
//! wire a quantity is a JSON number when it has a short terminating decimal
//! form and a `"n/d"` string otherwise.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid number `{0}`")]
pub struct ParseQuantityError(pub String);

/// An exact rational number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quantity(Ratio<i128>);

impl Quantity {
    pub const ZERO: Quantity = Quantity(Ratio::new_raw(0, 1));
    pub const ONE: Quantity = Quantity(Ratio::new_raw(1, 1));

    pub fn from_integer(n: i128) -> Self {
        Quantity(Ratio::from_integer(n))
    }

    /// `numerator / denominator`. Panics on a zero denominator.
    pub fn ratio(numerator: i128, denominator: i128) -> Self {
        Quantity(Ratio::new(numerator, denominator))
    }

    /// `100 * part / whole`, with no intermediate rounding.
    pub fn percent(part: u64, whole: u64) -> Self {
        Quantity(Ratio::new(100 * part as i128, whole as i128))
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.numer() < 0
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// Number of fraction digits in the terminating decimal expansion, or
    /// `None` when the expansion repeats.
    fn decimal_places(&self) -> Option<u32> {
        let mut d = self.denom();
        let (mut twos, mut fives) = (0u32, 0u32);
        while d % 2 == 0 {
            d /= 2;
            twos += 1;
        }
        while d % 5 == 0 {
            d /= 5;
            fives += 1;
        }
        (d == 1).then_some(twos.max(fives))
    }

    /// Terminating decimal text, if one exists.
    pub fn to_decimal_string(&self) -> Option<String> {
        let places = self.decimal_places()?;
        let scale = 10i128.checked_pow(places)?;
        let scaled = self.numer().checked_mul(scale / self.denom())?;
        Some(format_scaled(scaled, places))
    }

    /// Rounds half away from zero to `places` fraction digits.
    pub fn to_fixed(&self, places: u32) -> String {
        let scale = 10i128.pow(places);
        let n = self.numer() * scale;
        let d = self.denom();
        let q = n / d;
        let r = (n % d).abs();
        let rounded = if 2 * r >= d {
            if n < 0 {
                q - 1
            } else {
                q + 1
            }
        } else {
            q
        };
        format_scaled(rounded, places)
    }
}

fn format_scaled(scaled: i128, places: u32) -> String {
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.unsigned_abs();
    if places == 0 {
        return format!("{sign}{abs}");
    }
    let scale = 10u128.pow(places);
    format!(
        "{sign}{}.{:0width$}",
        abs / scale,
        abs % scale,
        width = places as usize
    )
}

impl From<u64> for Quantity {
    fn from(n: u64) -> Self {
        Quantity::from_integer(n as i128)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_decimal_string() {
            Some(s) => f.write_str(&s),
            None => write!(f, "{}/{}", self.numer(), self.denom()),
        }
    }
}

impl FromStr for Quantity {
    type Err = ParseQuantityError;

    /// Accepts decimal notation with an optional exponent (`-1.25`, `4e-3`)
    /// and fractions (`100/3`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseQuantityError(s.to_string());
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: i128 = n.trim().parse().map_err(|_| err())?;
            let d: i128 = d.trim().parse().map_err(|_| err())?;
            if d == 0 {
                return Err(err());
            }
            return Ok(Quantity::ratio(n, d));
        }
        let (mantissa, exponent) = match t.find(['e', 'E']) {
            Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
            None => (t, 0),
        };
        let (negative, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
        {
            return Err(err());
        }
        let all: String = format!("{int_part}{frac_part}");
        let mut numer: i128 = if all.is_empty() {
            0
        } else {
            all.parse().map_err(|_| err())?
        };
        if negative {
            numer = -numer;
        }
        let exp = exponent - frac_part.len() as i32;
        let pow = 10i128.checked_pow(exp.unsigned_abs()).ok_or_else(err)?;
        let r = if exp >= 0 {
            Ratio::from_integer(numer.checked_mul(pow).ok_or_else(err)?)
        } else {
            Ratio::new(numer, pow)
        };
        Ok(Quantity(r))
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_integer() {
            if let Ok(n) = i64::try_from(self.numer()) {
                return serializer.serialize_i64(n);
            }
        }
        if let Some(text) = self.to_decimal_string() {
            let significant = text.chars().filter(|c| c.is_ascii_digit()).count();
            if significant <= 15 {
                // shortest round-trip f64 printing reproduces `text`
                if let Ok(v) = text.parse::<f64>() {
                    return serializer.serialize_f64(v);
                }
            }
        }
        serializer.serialize_str(&format!("{}/{}", self.numer(), self.denom()))
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct QuantityVisitor;

        impl Visitor<'_> for QuantityVisitor {
            type Value = Quantity;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a \"n/d\" string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Quantity, E> {
                Ok(Quantity::from_integer(v as i128))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Quantity, E> {
                Ok(Quantity::from_integer(v as i128))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Quantity, E> {
                if !v.is_finite() {
                    return Err(E::custom("non-finite number"));
                }
                format!("{v}").parse().map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Quantity, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(QuantityVisitor)
    }
}
