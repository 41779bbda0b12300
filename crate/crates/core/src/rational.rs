//! Exact rational parsing, formatting and sign certification.

use num_bigint::{BigInt, Sign as BigSign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p/q`, integers, decimals (`0.36`) and scientific notation
/// (`1.5e-3`) into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((p, q)) = s.rsplit_once('/') {
        let p = parse_rational(p)?;
        let q = parse_rational(q)?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(p / q);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty()
        || !whole.chars().all(|c| c.is_ascii_digit())
        || !frac.chars().all(|c| c.is_ascii_digit())
    {
        return Err(Error::Parse(format!("not a rational: {s:?}")));
    }
    let all: String = format!("{whole}{frac}");
    let numer: BigInt = if all.is_empty() {
        BigInt::zero()
    } else {
        all.parse().map_err(|_| Error::Parse(format!("not a rational: {s:?}")))?
    };
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        r = -r;
    }
    Ok(r)
}

/// Renders as `p/q` (always with a denominator).
pub fn fmt_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact square root when `r` is the square of a rational.
pub fn exact_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer();
    let d = r.denom();
    let sn = n.sqrt();
    let sd = d.sqrt();
    (&sn * &sn == *n && &sd * &sd == *d).then(|| Rational::new(sn, sd))
}

/// Certified sign of a real number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(r: &Rational) -> Sign {
        match r.numer().sign() {
            BigSign::Minus => Sign::Negative,
            BigSign::NoSign => Sign::Zero,
            BigSign::Plus => Sign::Positive,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Sign::Positive
    }
}

/// Exact sign of `a - b * sqrt(x)` for rationals `a`, `b` and `x >= 0`.
pub fn sign_a_minus_b_sqrt(a: &Rational, b: &Rational, x: &Rational) -> Sign {
    debug_assert!(!x.is_negative());
    if b.is_zero() || x.is_zero() {
        return Sign::of(a);
    }
    let sa = Sign::of(a);
    let rhs = b * b * x;
    let lhs = a * a;
    if b.is_positive() {
        // a - |b| sqrt(x), with |b| sqrt(x) > 0
        match sa {
            Sign::Negative | Sign::Zero => Sign::Negative,
            Sign::Positive => Sign::of(&(lhs - rhs)),
        }
    } else {
        // a + |b| sqrt(x)
        match sa {
            Sign::Positive | Sign::Zero => Sign::Positive,
            Sign::Negative => Sign::of(&(rhs - lhs)),
        }
    }
}

pub fn one() -> Rational {
    Rational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_and_fraction_forms() {
        assert_eq!(parse_rational("145/48").unwrap(), rat(145, 48));
        assert_eq!(parse_rational("0.36").unwrap(), rat(9, 25));
        assert_eq!(parse_rational("-1.5e-3").unwrap(), rat(-3, 2000));
        assert_eq!(parse_rational("4.014").unwrap(), rat(2007, 500));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational("1/2/2").unwrap(), rat(1, 4));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn formats_with_denominator() {
        assert_eq!(fmt_rational(&rat(10, 3)), "10/3");
        assert_eq!(fmt_rational(&int(2)), "2/1");
    }

    #[test]
    fn exact_square_roots() {
        assert_eq!(exact_sqrt(&rat(9, 25)), Some(rat(3, 5)));
        assert_eq!(exact_sqrt(&rat(2, 1)), None);
    }

    #[test]
    fn certified_signs() {
        // 1 - sqrt(2) < 0, 2 - sqrt(2) > 0, 3 - 1*sqrt(9) = 0
        assert_eq!(sign_a_minus_b_sqrt(&int(1), &int(1), &int(2)), Sign::Negative);
        assert_eq!(sign_a_minus_b_sqrt(&int(2), &int(1), &int(2)), Sign::Positive);
        assert_eq!(sign_a_minus_b_sqrt(&int(3), &int(1), &int(9)), Sign::Zero);
        // -1 + sqrt(2) > 0
        assert_eq!(sign_a_minus_b_sqrt(&int(-1), &int(-1), &int(2)), Sign::Positive);
        assert_eq!(sign_a_minus_b_sqrt(&int(-2), &int(-1), &int(2)), Sign::Negative);
    }
}
