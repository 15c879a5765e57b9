//! Token counts, model pricing and exact USD amounts.
//!
//! Costs are accumulated as integer micro-dollars so that summing thousands
//! of per-item costs never drifts. Per-million-token rates are kept as exact
//! rationals parsed from their decimal text.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    pub const ZERO: TokenUsage = TokenUsage { prompt_tokens: 0, completion_tokens: 0 };

    pub fn new(prompt_tokens: u64, completion_tokens: u64) -> Self {
        Self { prompt_tokens, completion_tokens }
    }

    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }
}

impl Add for TokenUsage {
    type Output = TokenUsage;

    fn add(self, rhs: Self) -> Self::Output {
        TokenUsage {
            prompt_tokens: self.prompt_tokens + rhs.prompt_tokens,
            completion_tokens: self.completion_tokens + rhs.completion_tokens,
        }
    }
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sum for TokenUsage {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(TokenUsage::ZERO, Add::add)
    }
}

/// A USD amount with exactly six decimal places, stored as micro-dollars.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Usd(i64);

impl Usd {
    pub const ZERO: Usd = Usd(0);

    pub const fn from_micros(micros: i64) -> Self {
        Usd(micros)
    }

    pub const fn micros(self) -> i64 {
        self.0
    }

    /// Rounds an exact micro-dollar quantity half-to-even.
    pub fn from_micros_ratio(micros: Ratio<i128>) -> Self {
        let floor = micros.floor();
        let frac = micros - floor;
        let half = Ratio::new(1, 2);
        let mut whole = floor.to_integer();
        if frac > half || (frac == half && whole % 2 != 0) {
            whole += 1;
        }
        Usd(i64::try_from(whole).expect("USD amount exceeds i64 micro-dollars"))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    /// Fixed-point text with `places` decimals (≤ 6), rounding half away from zero.
    pub fn format_places(self, places: u32) -> String {
        let places = places.min(6);
        let scale = 10i64.pow(6 - places);
        let abs = self.0.unsigned_abs() as i64;
        let rounded = (abs + scale / 2) / scale;
        let unit = 10i64.pow(places);
        let sign = if self.0 < 0 && rounded != 0 { "-" } else { "" };
        if places == 0 {
            format!("{sign}{rounded}")
        } else {
            format!(
                "{sign}{}.{:0width$}",
                rounded / unit,
                rounded % unit,
                width = places as usize
            )
        }
    }
}

impl fmt::Display for Usd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format_places(6))
    }
}

impl Add for Usd {
    type Output = Usd;

    fn add(self, rhs: Self) -> Self::Output {
        Usd(self.0 + rhs.0)
    }
}

impl AddAssign for Usd {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sum for Usd {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Usd::ZERO, Add::add)
    }
}

impl FromStr for Usd {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let ratio = parse_decimal(s)?;
        Ok(Usd::from_micros_ratio(ratio * Ratio::from_integer(1_000_000)))
    }
}

impl Serialize for Usd {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Usd {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = DecimalText::deserialize(deserializer)?.0;
        text.parse().map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PricingError {
    #[error("not a finite decimal: {0:?}")]
    NotDecimal(String),
    #[error("rate must be non-negative: {0}")]
    Negative(String),
}

fn parse_decimal(text: &str) -> Result<Ratio<i128>, PricingError> {
    let t = text.trim();
    let bad = || PricingError::NotDecimal(text.to_string());
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) || frac_part.len() > 18 {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: i128 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
    let denom = 10i128.pow(frac_part.len() as u32);
    let value = Ratio::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// Helper that accepts a decimal given either as a JSON/TOML number or a string.
struct DecimalText(String);

impl<'de> Deserialize<'de> for DecimalText {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = DecimalText;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal number or decimal string")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<DecimalText, E> {
                Ok(DecimalText(v.to_string()))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<DecimalText, E> {
                if !v.is_finite() {
                    return Err(E::custom("non-finite decimal"));
                }
                // f64 Display is the shortest round-trip form and never uses
                // exponent notation, so "0.15" stays "0.15".
                Ok(DecimalText(v.to_string()))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<DecimalText, E> {
                Ok(DecimalText(v.to_string()))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<DecimalText, E> {
                Ok(DecimalText(v.to_string()))
            }
        }
        deserializer.deserialize_any(V)
    }
}

/// A non-negative USD-per-million-tokens rate, held exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rate(Ratio<i128>);

impl Rate {
    pub fn zero() -> Self {
        Rate(Ratio::zero())
    }

    pub fn new(value: Ratio<i128>) -> Result<Self, PricingError> {
        if value.is_negative() {
            return Err(PricingError::Negative(value.to_string()));
        }
        Ok(Rate(value))
    }

    pub fn ratio(&self) -> Ratio<i128> {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl FromStr for Rate {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rate::new(parse_decimal(s)?)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Terminating decimals print exactly; anything else falls back to f64.
        let mut denom = *self.0.denom();
        let mut places = 0u32;
        while denom % 10 == 0 {
            denom /= 10;
            places += 1;
        }
        if denom == 1 {
            let scaled = self.0 * Ratio::from_integer(10i128.pow(places));
            let n = scaled.to_integer();
            let unit = 10i128.pow(places);
            if places == 0 {
                write!(f, "{n}")
            } else {
                write!(f, "{}.{:0width$}", n / unit, n % unit, width = places as usize)
            }
        } else {
            write!(f, "{}", self.to_f64())
        }
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = DecimalText::deserialize(deserializer)?.0;
        text.parse().map_err(de::Error::custom)
    }
}

/// Per-model token pricing. Always loaded from configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pricing {
    pub model_label: String,
    pub usd_per_million_prompt_tokens: Rate,
    pub usd_per_million_completion_tokens: Rate,
}

impl Pricing {
    pub fn new(model_label: impl Into<String>, prompt: &str, completion: &str) -> Result<Self, PricingError> {
        Ok(Self {
            model_label: model_label.into(),
            usd_per_million_prompt_tokens: prompt.parse()?,
            usd_per_million_completion_tokens: completion.parse()?,
        })
    }

    pub fn free(model_label: impl Into<String>) -> Self {
        Self {
            model_label: model_label.into(),
            usd_per_million_prompt_tokens: Rate::zero(),
            usd_per_million_completion_tokens: Rate::zero(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_addition_is_a_commutative_monoid_on_small_values() {
        let vals: Vec<TokenUsage> = (0..4)
            .flat_map(|p| (0..4).map(move |c| TokenUsage::new(p, c)))
            .collect();
        for &a in &vals {
            assert_eq!(a + TokenUsage::ZERO, a);
            assert_eq!(TokenUsage::ZERO + a, a);
            for &b in &vals {
                assert_eq!(a + b, b + a);
                for &c in &vals {
                    assert_eq!((a + b) + c, a + (b + c));
                }
            }
        }
    }

    #[test]
    fn half_even_rounding() {
        let r = |n: i128, d: i128| Usd::from_micros_ratio(Ratio::new(n, d)).micros();
        assert_eq!(r(1, 2), 0);
        assert_eq!(r(3, 2), 2);
        assert_eq!(r(5, 2), 2);
        assert_eq!(r(7, 2), 4);
        assert_eq!(r(2, 3), 1);
        assert_eq!(r(1, 3), 0);
    }

    #[test]
    fn usd_text_forms() {
        let x: Usd = "2.11".parse().unwrap();
        assert_eq!(x.micros(), 2_110_000);
        assert_eq!(x.to_string(), "2.110000");
        assert_eq!(x.format_places(2), "2.11");
        assert_eq!(Usd::from_micros(4_999).format_places(2), "0.00");
        assert_eq!(Usd::from_micros(5_000).format_places(2), "0.01");
        let json = serde_json::to_string(&x).unwrap();
        assert_eq!(serde_json::from_str::<Usd>(&json).unwrap(), x);
        assert_eq!(serde_json::from_str::<Usd>("0.45").unwrap().micros(), 450_000);
    }

    #[test]
    fn rates_parse_exactly() {
        let r: Rate = "0.15".parse().unwrap();
        assert_eq!(r.ratio(), Ratio::new(15, 100));
        assert_eq!(r.to_string(), "0.15");
        assert!("-1".parse::<Rate>().is_err());
        assert!("abc".parse::<Rate>().is_err());
        assert!("".parse::<Rate>().is_err());
        let p: Pricing = serde_json::from_str(
            r#"{"model_label":"m","usd_per_million_prompt_tokens":0.15,"usd_per_million_completion_tokens":"0.60"}"#,
        )
        .unwrap();
        assert_eq!(p.usd_per_million_completion_tokens.ratio(), Ratio::new(6, 10));
    }
}
