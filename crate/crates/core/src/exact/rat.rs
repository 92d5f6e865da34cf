use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar, always in lowest terms with a positive denominator.
///
/// `Display` renders `p/q`, or `p` when `q = 1`.
pub type Rat = num_rational::BigRational;

pub fn rat(numer: i64, denom: i64) -> Rat {
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rat {
    Rat::from_integer(BigInt::from(value))
}

pub fn uint(value: u64) -> Rat {
    Rat::from_integer(BigInt::from(value))
}

/// `2^-k` as an exact rational.
pub fn pow2_inv(k: u32) -> Rat {
    Rat::new(BigInt::one(), BigInt::one() << k as usize)
}

pub fn parse_rat(text: &str) -> Result<Rat> {
    let t = text.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = num.parse().map_err(|_| Error::Parse(format!("bad rational `{t}`")))?;
    let d: BigInt = den.parse().map_err(|_| Error::Parse(format!("bad rational `{t}`")))?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in `{t}`")));
    }
    Ok(Rat::new(n, d))
}

/// Least common multiple of the denominators of `values`.
pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Integer part of log10 |x| for nonzero x: the `e` with `10^e <= |x| < 10^(e+1)`.
fn decimal_exponent(x: &Rat) -> i64 {
    let a = x.abs();
    let mut e = a.numer().to_string().len() as i64 - a.denom().to_string().len() as i64;
    loop {
        let p = pow10(e);
        if a < p {
            e -= 1;
        } else if a >= &p * int(10) {
            e += 1;
        } else {
            return e;
        }
    }
}

fn pow10(e: i64) -> Rat {
    let t = BigInt::from(10u32).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        Rat::from_integer(t)
    } else {
        Rat::new(BigInt::one(), t)
    }
}

/// Round to the nearest integer, ties to even.
fn round_half_even(x: &Rat) -> BigInt {
    let fl = x.floor();
    let frac = x - &fl;
    let base = fl.to_integer();
    let half = rat(1, 2);
    match frac.cmp(&half) {
        Ordering::Less => base,
        Ordering::Greater => base + 1,
        Ordering::Equal => {
            if base.is_even() {
                base
            } else {
                base + 1
            }
        }
    }
}

/// Decimal approximation with `sig` significant digits, rounded half-to-even.
///
/// Plain notation for moderate magnitudes, `d.ddde±x` otherwise.
pub fn to_decimal(x: &Rat, sig: u32) -> String {
    assert!(sig >= 1);
    if x.is_zero() {
        return "0".to_string();
    }
    let mut e = decimal_exponent(x);
    let scaled = x.abs() * pow10(sig as i64 - 1 - e);
    let mut digits = round_half_even(&scaled);
    if digits == BigInt::from(10u32).pow(sig) {
        digits /= 10;
        e += 1;
    }
    let ds = digits.to_string();
    debug_assert_eq!(ds.len(), sig as usize);
    let sign = if x.is_negative() { "-" } else { "" };
    if (-6..sig as i64).contains(&e) {
        if e >= 0 {
            let int_len = e as usize + 1;
            let (ip, fp) = ds.split_at(int_len);
            if fp.is_empty() {
                format!("{sign}{ip}")
            } else {
                format!("{sign}{ip}.{fp}")
            }
        } else {
            let zeros = "0".repeat((-e - 1) as usize);
            format!("{sign}0.{zeros}{ds}")
        }
    } else {
        let (h, t) = ds.split_at(1);
        if t.is_empty() {
            format!("{sign}{h}e{e}")
        } else {
            format!("{sign}{h}.{t}e{e}")
        }
    }
}

pub fn to_f64(x: &Rat) -> f64 {
    to_decimal(x, 17).parse().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["0", "3", "-7/2", "1/1600", "17/6"] {
            assert_eq!(parse_rat(s).unwrap().to_string(), s);
        }
        assert_eq!(parse_rat("4/8").unwrap().to_string(), "1/2");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn decimal_basic() {
        assert_eq!(to_decimal(&rat(1, 4), 12), "0.250000000000");
        assert_eq!(to_decimal(&rat(2, 3), 12), "0.666666666667");
        assert_eq!(to_decimal(&int(17), 3), "17.0");
        assert_eq!(to_decimal(&rat(-1, 3), 4), "-0.3333");
        assert_eq!(to_decimal(&int(0), 12), "0");
        assert_eq!(to_decimal(&rat(1, 16384), 12), "0.0000610351562500");
        assert_eq!(to_decimal(&pow2_inv(40), 3), "9.09e-13");
    }

    #[test]
    fn decimal_ties_to_even() {
        // 0.125 -> 2 sig digits: 0.12 ; 0.375 -> 0.38
        assert_eq!(to_decimal(&rat(1, 8), 2), "0.12");
        assert_eq!(to_decimal(&rat(3, 8), 2), "0.38");
        assert_eq!(to_decimal(&rat(9995, 10), 3), "1.00e3");
    }

    #[test]
    fn lcm_of_denominators() {
        let v = [rat(1, 4), rat(1, 6), int(3)];
        assert_eq!(lcm_denominators(&v), BigInt::from(12));
    }
}
