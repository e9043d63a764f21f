//! Exact rational arithmetic helpers.
//!
//! All distances in this crate are exact `BigRational`s; approximate regimes
//! are expressed as exact rationals plus an explicit error budget, never as
//! floats.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

pub type Rat = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_zero() -> Rat {
    Rat::zero()
}

pub fn rat_one() -> Rat {
    Rat::one()
}

/// `2^k` for a possibly negative exponent.
pub fn pow2(k: i64) -> Rat {
    let mag = BigInt::one() << k.unsigned_abs() as usize;
    if k >= 0 {
        Rat::from_integer(mag)
    } else {
        Rat::new(BigInt::one(), mag)
    }
}

pub fn rat_abs(x: &Rat) -> Rat {
    x.abs()
}

pub fn rat_min(a: Rat, b: Rat) -> Rat {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn rat_max(a: Rat, b: Rat) -> Rat {
    if a >= b {
        a
    } else {
        b
    }
}

/// Renders as `p/q`, or just `p` when integral.
pub fn rat_display(x: &Rat) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `p`, `p/q`, or `-p/q`.
pub fn rat_parse(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        None => s.parse::<BigInt>().ok().map(Rat::from_integer),
        Some((n, d)) => {
            let n = n.trim().parse::<BigInt>().ok()?;
            let d = d.trim().parse::<BigInt>().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rat::new(n, d))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow2_signs() {
        assert_eq!(pow2(3), rat_int(8));
        assert_eq!(pow2(0), rat_int(1));
        assert_eq!(pow2(-3), rat(1, 8));
    }

    #[test]
    fn parse_round_trip() {
        for s in ["0", "7", "-3", "1/8", "-22/7"] {
            let r = rat_parse(s).unwrap();
            assert_eq!(rat_parse(&rat_display(&r)).unwrap(), r);
        }
        assert!(rat_parse("1/0").is_none());
        assert!(rat_parse("x").is_none());
    }
}
