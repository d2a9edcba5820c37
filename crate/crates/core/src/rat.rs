//! Exact rational arithmetic used for every quasimorphism value.

use num_rational::Ratio;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

pub type Rat = Ratio<i64>;

pub fn int(n: i64) -> Rat {
    Rat::from_integer(n)
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

/// Parses `p`, `-p` or `p/q`.
pub fn parse(s: &str) -> Result<Rat> {
    let bad = |reason: &str| Error::InvalidParameter(format!("`{s}` is not a rational: {reason}"));
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().map_err(|_| bad("numerator"))?;
            let d: i64 = d.trim().parse().map_err(|_| bad("denominator"))?;
            if d == 0 {
                return Err(bad("zero denominator"));
            }
            Ok(Rat::new(n, d))
        }
        None => s.parse::<i64>().map(int).map_err(|_| bad("integer")),
    }
}

/// `p/q` in lowest terms, or `p` for integers.
pub fn format(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn max(a: Rat, b: Rat) -> Rat {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn abs(r: Rat) -> Rat {
    r.abs()
}

/// Smallest integer `n` with `n >= r`.
pub fn ceil(r: &Rat) -> i64 {
    r.ceil().to_integer()
}

pub fn is_zero(r: &Rat) -> bool {
    r.is_zero()
}

pub mod serde_rat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_opt_rat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rat>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&format(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rat>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| parse(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse("-4").unwrap(), int(-4));
        assert_eq!(format(&ratio(201, 32)), "201/32");
        assert_eq!(format(&int(7)), "7");
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
    }

    #[test]
    fn ceiling() {
        assert_eq!(ceil(&ratio(7, 2)), 4);
        assert_eq!(ceil(&ratio(-7, 2)), -3);
        assert_eq!(ceil(&int(5)), 5);
    }
}
