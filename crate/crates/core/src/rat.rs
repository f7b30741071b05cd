//! Exact rational arithmetic helpers shared by the constraint pipeline.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

/// Exact rational used everywhere constraint solving is involved.
pub type Rat = BigRational;

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_zero() -> Rat {
    Rat::zero()
}

pub fn rat_one() -> Rat {
    Rat::one()
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `3`, `-3`, `3/2` and decimal notation like `1.5` into an exact rational.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).ok()?;
        let d = BigInt::from_str(den.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rat::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let i = BigInt::from_str(if int.is_empty() { "0" } else { int }).ok()?;
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let f = BigInt::from_str(frac).ok()?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let mag = i.abs() * &scale + f;
        let mag = if neg { -mag } else { mag };
        return Some(Rat::new(mag, scale));
    }
    BigInt::from_str(s).ok().map(Rat::from_integer)
}

/// Renders a rational as `p` or `p/q`, matching the `.coef` file syntax.
pub fn show_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_forms() {
        assert_eq!(parse_rat("3").unwrap(), rat_int(3));
        assert_eq!(parse_rat("-3").unwrap(), rat_int(-3));
        assert_eq!(parse_rat("3/2").unwrap(), rat_frac(3, 2));
        assert_eq!(parse_rat("1.5").unwrap(), rat_frac(3, 2));
        assert_eq!(parse_rat("-0.25").unwrap(), rat_frac(-1, 4));
        assert!(parse_rat("1/0").is_none());
    }

    #[test]
    fn shows_round_trip() {
        for s in ["0", "7", "-7", "3/2", "-5/3"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(parse_rat(&show_rat(&r)).unwrap(), r);
        }
    }
}
