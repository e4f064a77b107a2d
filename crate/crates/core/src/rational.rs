//! Exact rational numbers for injection rates and bound arithmetic.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
pub use num_rational::BigRational;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// An injection rate `r` in `[0, 1]`, kept as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rate(Ratio<u64>);

impl Rate {
    pub const ZERO: Rate = Rate(Ratio::new_raw(0, 1));
    pub const ONE: Rate = Rate(Ratio::new_raw(1, 1));

    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::Rate("zero denominator".into()));
        }
        let r = Ratio::new(numer, denom);
        if r > Ratio::from_integer(1) {
            return Err(Error::Rate(format!("{numer}/{denom} exceeds 1")));
        }
        Ok(Rate(r))
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn to_big(&self) -> BigRational {
        BigRational::new(BigInt::from(self.numer()), BigInt::from(self.denom()))
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// `r * h`, the product that must stay below one for the SIS bounds.
    pub fn times(&self, h: u64) -> Ratio<u64> {
        self.0 * h
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Rate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n = n.trim().parse::<u64>().map_err(|e| Error::Rate(format!("{s}: {e}")))?;
                let d = d.trim().parse::<u64>().map_err(|e| Error::Rate(format!("{s}: {e}")))?;
                Rate::new(n, d)
            }
            None => {
                let n = s.parse::<u64>().map_err(|e| Error::Rate(format!("{s}: {e}")))?;
                Rate::new(n, 1)
            }
        }
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn big_ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Largest integer not above `x`.
pub fn floor_int(x: &BigRational) -> BigInt {
    x.floor().to_integer()
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Renders `x` as `p/q` (or `p` when integral).
pub fn display(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// `true` when the integer `n` does not exceed `x`.
pub fn int_le(n: u64, x: &BigRational) -> bool {
    let n = BigRational::from_integer(BigInt::from(n));
    n <= *x
}

pub fn is_nonnegative(x: &BigRational) -> bool {
    !x.is_negative() || x.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!("1/8".parse::<Rate>().unwrap(), Rate::new(1, 8).unwrap());
        assert_eq!("2/4".parse::<Rate>().unwrap().to_string(), "1/2");
        assert_eq!("0".parse::<Rate>().unwrap(), Rate::ZERO);
        assert_eq!("1".parse::<Rate>().unwrap(), Rate::ONE);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!("3/2".parse::<Rate>().is_err());
        assert!("1/0".parse::<Rate>().is_err());
        assert!("-1/2".parse::<Rate>().is_err());
        assert!("x".parse::<Rate>().is_err());
    }

    #[test]
    fn floor_and_display() {
        let x = big_ratio(147, 50);
        assert_eq!(floor_int(&x), BigInt::from(2));
        assert_eq!(display(&x), "147/50");
        assert_eq!(display(&big(4)), "4");
        assert!(int_le(2, &x));
        assert!(!int_le(3, &x));
    }
}
