//! Helpers for exact rational scalars: parsing, formatting, and
//! continued-fraction rationalization of floating-point inputs.

use crate::error::{Error, Result};
use crate::Q;
use num::bigint::BigInt;
use num::ToPrimitive;
use num_traits::{One, Signed, Zero};

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(num: i64) -> Q {
    Q::from_integer(BigInt::from(num))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"p/q"`, an integer, or a plain decimal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in `{s}`")))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in `{s}`")))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let sign = if int_part.trim_start().starts_with('-') {
            -1
        } else {
            1
        };
        let int_part = int_part.trim();
        let whole: BigInt = if int_part.is_empty() || int_part == "-" || int_part == "+" {
            BigInt::zero()
        } else {
            int_part
                .parse()
                .map_err(|_| Error::Parse(format!("bad decimal `{s}`")))?
        };
        if !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::Parse(format!("bad decimal `{s}`")));
        }
        let digits: BigInt = if frac_part.is_empty() {
            BigInt::zero()
        } else {
            frac_part
                .parse()
                .map_err(|_| Error::Parse(format!("bad decimal `{s}`")))?
        };
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let frac = Q::new(digits, scale.clone());
        let whole = Q::from_integer(whole);
        return Ok(if sign < 0 { whole - frac } else { whole + frac });
    }
    let n: BigInt = s
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    Ok(Q::from_integer(n))
}

pub fn format_rational(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// via the continued-fraction convergent/semiconvergent construction.
pub fn rationalize_f64(x: f64, max_den: u64) -> Q {
    assert!(x.is_finite(), "cannot rationalize a non-finite value");
    assert!(max_den >= 1);
    let negative = x < 0.0;
    let mut x = x.abs();
    // (p0/q0, p1/q1) are consecutive convergents.
    let (mut p0, mut q0, mut p1, mut q1) =
        (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let bound = BigInt::from(max_den);
    for _ in 0..64 {
        let a = x.floor();
        if !a.is_finite() || a > 1e18 {
            break;
        }
        let ai = BigInt::from(a as i64);
        let p2 = &ai * &p1 + &p0;
        let q2 = &ai * &q1 + &q0;
        if q2 > bound {
            // Take the best semiconvergent that still fits the bound.
            let k = (&bound - &q0) / &q1;
            let sp = &k * &p1 + &p0;
            let sq = &k * &q1 + &q0;
            let semi = Q::new(sp, sq);
            let conv = Q::new(p1.clone(), q1.clone());
            let xq = Q::new(
                BigInt::from((x.fract() * 1e15) as i64)
                    + BigInt::from(a as i64) * BigInt::from(1_000_000_000_000_000i64),
                BigInt::from(1_000_000_000_000_000i64),
            );
            let best = if q1.is_zero() || (semi.clone() - &xq).abs() < (conv.clone() - &xq).abs() {
                semi
            } else {
                conv
            };
            return finish(best, negative);
        }
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let frac = x - a;
        if frac < 1e-15 {
            break;
        }
        x = 1.0 / frac;
    }
    finish(Q::new(p1, q1.max(BigInt::one())), negative)
}

fn finish(v: Q, negative: bool) -> Q {
    if negative {
        -v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_integer_decimal() {
        assert_eq!(parse_rational("3/4").unwrap(), q(3, 4));
        assert_eq!(parse_rational("-7").unwrap(), qi(-7));
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), q(-3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn rationalize_recovers_simple_fractions() {
        assert_eq!(rationalize_f64(0.5, 1_000_000_000), q(1, 2));
        assert_eq!(rationalize_f64(-0.25, 1_000_000_000), q(-1, 4));
        assert_eq!(rationalize_f64(1.0 / 3.0, 1_000_000_000), q(1, 3));
    }

    #[test]
    fn rationalize_irrational_within_radius() {
        let r = rationalize_f64(std::f64::consts::SQRT_2 / 2.0, 1_000_000_000);
        let back = to_f64(&r);
        assert!((back - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-9);
        assert!(*r.denom() <= BigInt::from(1_000_000_000u64));
    }

    #[test]
    fn format_round_trips() {
        for s in ["1/2", "-3/7", "5"] {
            let v = parse_rational(s).unwrap();
            assert_eq!(format_rational(&v), *s);
        }
    }
}
