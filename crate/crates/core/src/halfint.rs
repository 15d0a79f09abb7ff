use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An element of Z - 1/2, stored as its (odd) double.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const MINUS_HALF: HalfInt = HalfInt(-1);
    pub const HALF: HalfInt = HalfInt(1);

    /// Builds `twice / 2`; `twice` must be odd.
    pub fn from_twice(twice: i64) -> Result<Self> {
        if twice.rem_euclid(2) == 1 {
            Ok(HalfInt(twice))
        } else {
            Err(Error::InvalidConfig(format!("{twice}/2 is not a half-integer")))
        }
    }

    /// Rounds a float to the nearest half-integer if it is one to 1e-12.
    pub fn from_f64(x: f64) -> Result<Self> {
        let t = (2.0 * x).round();
        if (2.0 * x - t).abs() > 1e-12 || !x.is_finite() {
            return Err(Error::InvalidConfig(format!("{x} is not a half-integer")));
        }
        Self::from_twice(t as i64)
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// The conjugate angular index -(lambda + 1).
    pub fn conjugate(self) -> Self {
        HalfInt(-self.0 - 2)
    }

    /// `self + n` for an integer shift.
    pub fn shift(self, n: i64) -> Self {
        HalfInt(self.0 + 2 * n)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2", self.0)
    }
}

impl FromStr for HalfInt {
    type Err = Error;

    /// Accepts only literals of the form `p/2` with `p` odd.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| Error::InvalidConfig(format!("`{s}` is not a p/2 literal")))?;
        if q.trim() != "2" {
            return Err(Error::InvalidConfig(format!("`{s}` is not a p/2 literal")));
        }
        let p: i64 = p
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("`{s}` is not a p/2 literal")))?;
        Self::from_twice(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let h: HalfInt = "-3/2".parse().unwrap();
        assert_eq!(h.value(), -1.5);
        assert_eq!(h.to_string().parse::<HalfInt>().unwrap(), h);
        assert!("1".parse::<HalfInt>().is_err());
        assert!("2/2".parse::<HalfInt>().is_err());
        assert!("3/4".parse::<HalfInt>().is_err());
    }

    #[test]
    fn conjugate_is_involution() {
        for t in [-7, -3, -1, 1, 5] {
            let h = HalfInt::from_twice(t).unwrap();
            assert_eq!(h.conjugate().conjugate(), h);
        }
        assert_eq!(HalfInt::MINUS_HALF.conjugate(), HalfInt::MINUS_HALF);
    }
}
