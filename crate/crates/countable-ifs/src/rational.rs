//! Exact rational scalars used for map coefficients.
//!
//! All coefficients produced by the expression language are rationals, so
//! compositions and fixed points stay exact; geometry on point clouds
//! projects to f64 on demand.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Shorthand constructor, mostly for tests and builtin families.
pub fn q(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn q_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact rational value of a finite f64 (every finite f64 is rational).
pub fn from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or(Error::NonFinitePoint)
}

/// Nearest f64; magnitudes here are far from overflow in practice.
pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn pow_u32(x: &BigRational, k: u32) -> BigRational {
    BigRational::new(x.numer().pow(k), x.denom().pow(k))
}

/// Parses "3", "-1/2" or a plain decimal like "0.25" into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidFamily(format!("cannot parse '{s}' as a rational number"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let numer: BigInt = frac.parse().map_err(|_| bad())?;
        let denom = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = BigRational::new(numer, denom);
        let int_part = BigRational::from_integer(int);
        return Ok(if neg { int_part - frac_part } else { int_part + frac_part });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Squared euclidean distance of two exact points.
pub fn dist_sq_exact(a: &[BigRational], b: &[BigRational]) -> BigRational {
    let mut acc = BigRational::zero();
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += &d * &d;
    }
    acc
}

pub fn abs(x: &BigRational) -> BigRational {
    if x.is_negative() {
        -x.clone()
    } else {
        x.clone()
    }
}

pub fn one() -> BigRational {
    BigRational::one()
}

pub fn zero() -> BigRational {
    BigRational::zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_decimals_integers() {
        assert_eq!(parse_rational("1/2").unwrap(), q(1, 2));
        assert_eq!(parse_rational("-3/9").unwrap(), q(-1, 3));
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), q(-1, 2));
        assert_eq!(parse_rational("7").unwrap(), q_int(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn f64_roundtrip_is_exact_for_dyadics() {
        let r = from_f64(0.375).unwrap();
        assert_eq!(r, q(3, 8));
        assert_eq!(to_f64(&r), 0.375);
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        let x = q(2, 3);
        let mut acc = one();
        for _ in 0..5 {
            acc *= &x;
        }
        assert_eq!(pow_u32(&x, 5), acc);
        assert_eq!(pow_u32(&x, 0), one());
    }
}
