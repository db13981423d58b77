//! Exact two-decimal currency amounts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A dollar amount stored as an integer number of cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Price(u64);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid price {0:?}: expected dollars with exactly two decimals, e.g. \"15.00\"")]
pub struct PriceParseError(pub String);

impl Price {
    pub const fn from_cents(cents: u64) -> Self {
        Price(cents)
    }

    pub const fn cents(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl FromStr for Price {
    type Err = PriceParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PriceParseError(s.to_string());
        let (whole, frac) = s.split_once('.').ok_or_else(err)?;
        if whole.is_empty()
            || frac.len() != 2
            || !whole.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        let dollars: u64 = whole.parse().map_err(|_| err())?;
        let cents: u64 = frac.parse().map_err(|_| err())?;
        dollars.checked_mul(100).and_then(|d| d.checked_add(cents)).map(Price).ok_or_else(err)
    }
}

impl Serialize for Price {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Price {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_formats() {
        let p: Price = "270.00".parse().unwrap();
        assert_eq!(p.cents(), 27000);
        assert_eq!(p.to_string(), "270.00");
        assert_eq!(Price::from_cents(5).to_string(), "0.05");
    }

    #[test]
    fn rejects_loose_formats() {
        for bad in ["15", "15.0", "15.000", ".50", "-1.00", "1,00", "1.0a", ""] {
            assert!(bad.parse::<Price>().is_err(), "{bad}");
        }
    }

    #[test]
    fn serde_uses_strings() {
        let json = serde_json::to_string(&Price::from_cents(1550)).unwrap();
        assert_eq!(json, "\"15.50\"");
        let back: Price = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Price::from_cents(1550));
        assert!(serde_json::from_str::<Price>("15.5").is_err());
    }
}
