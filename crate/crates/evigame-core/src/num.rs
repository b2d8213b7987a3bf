//! Exact rational arithmetic helpers: parsing, canonical formatting,
//! float conversion, and continued-fraction rationalization.
//!
//! All equilibrium arithmetic in this crate is exact (`BigRational`).
//! Floats appear only on the Monte Carlo / shock-distribution side; the
//! bridge back to exact land is [`rationalize`].

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Shorthand used throughout the crate.
pub type Q = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Build a rational from small integers.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Integer-valued rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parse a rational from `"num/den"`, integer, or terminating decimal
/// notation. `"1/2"`, `"-3"`, and `"0.25"` are all accepted; the decimal
/// form is exact (base-10 expansion), not a float round trip.
pub fn parse_rational(s: &str) -> Result<Q, ParseRationalError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n
            .trim()
            .parse()
            .map_err(|_| ParseRationalError::Invalid(s.to_string()))?;
        let d: BigInt = d
            .trim()
            .parse()
            .map_err(|_| ParseRationalError::Invalid(s.to_string()))?;
        if d.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(s.to_string()));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" || int == "+" {
            BigInt::zero()
        } else {
            int.parse()
                .map_err(|_| ParseRationalError::Invalid(s.to_string()))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseRationalError::Invalid(s.to_string()));
        }
        let frac_num: BigInt = frac
            .parse()
            .map_err(|_| ParseRationalError::Invalid(s.to_string()))?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_q = Q::new(frac_num, den);
        let int_q = Q::from_integer(int_part);
        return Ok(if neg { int_q - frac_q } else { int_q + frac_q });
    }
    let n: BigInt = s
        .parse()
        .map_err(|_| ParseRationalError::Invalid(s.to_string()))?;
    Ok(Q::from_integer(n))
}

/// Canonical string form: reduced `num/den`, or bare integer when the
/// denominator is 1. This is the only form the serializers emit.
pub fn format_rational(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Lossy conversion for the float-side code (shock scales, Monte Carlo).
pub fn to_f64(x: &Q) -> f64 {
    x.numer()
        .to_f64()
        .map(|n| n / x.denom().to_f64().unwrap_or(f64::INFINITY))
        .unwrap_or_else(|| {
            // Fall back through a high-precision decimal split for big ints.
            let (digits, scale) = (x.numer().to_string(), x.denom().to_string());
            digits.parse::<f64>().unwrap_or(f64::NAN) / scale.parse::<f64>().unwrap_or(f64::NAN)
        })
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// via the continued-fraction convergent/semiconvergent construction.
///
/// Used to snap numeric limits (homotopy selections, Monte Carlo limits)
/// back onto the exact rationals the predicates require.
pub fn rationalize(x: f64, max_den: u64) -> Option<Q> {
    if !x.is_finite() || max_den == 0 {
        return None;
    }
    let neg = x < 0.0;
    let target = rational_from_f64(x.abs());
    let mut x = x.abs();
    // (p0/q0, p1/q1) are consecutive convergents.
    let (mut p0, mut q0, mut p1, mut q1) = (
        BigInt::zero(),
        BigInt::one(),
        BigInt::one(),
        BigInt::zero(),
    );
    let bound = BigInt::from(max_den);
    for _ in 0..64 {
        let a = x.floor();
        if a > 1e18 {
            break;
        }
        let ai = BigInt::from(a as i64);
        let p2 = &ai * &p1 + &p0;
        let q2 = &ai * &q1 + &q0;
        if q2 > bound {
            // Best semiconvergent still within the bound, against the
            // previous convergent.
            let k = (&bound - &q0) / &q1;
            let ps = &k * &p1 + &p0;
            let qs = &k * &q1 + &q0;
            let best = if q1.is_zero() {
                Q::new(ps, qs)
            } else {
                let cand_a = Q::new(p1.clone(), q1.clone());
                let cand_b = Q::new(ps, qs);
                if (&cand_a - &target).abs() <= (&cand_b - &target).abs() {
                    cand_a
                } else {
                    cand_b
                }
            };
            return Some(if neg { -best } else { best });
        }
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let frac = x - a;
        // Stop once the remainder is float noise at this magnitude.
        if frac < (a.abs() + 1.0) * 1e-15 {
            break;
        }
        x = 1.0 / frac;
    }
    let best = Q::new(p1, q1);
    Some(if neg { -best } else { best })
}

/// Exact rational value of a finite f64 (mantissa × 2^exp).
pub fn rational_from_f64(x: f64) -> Q {
    let (mantissa, exponent, sign) = {
        let bits = x.to_bits();
        let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
        let mut exponent = ((bits >> 52) & 0x7ff) as i64;
        let mantissa = if exponent == 0 {
            (bits & 0xf_ffff_ffff_ffff) << 1
        } else {
            (bits & 0xf_ffff_ffff_ffff) | 0x10_0000_0000_0000
        };
        exponent -= 1075;
        (mantissa, exponent, sign)
    };
    let m = Q::from_integer(BigInt::from(mantissa) * BigInt::from(sign));
    if exponent >= 0 {
        m * Q::from_integer(BigInt::from(2u32).pow(exponent as u32))
    } else {
        m / Q::from_integer(BigInt::from(2u32).pow((-exponent) as u32))
    }
}

/// Format a float with 12 significant digits (the crate-wide convention
/// for every real emitted to reports and CSV files): plain notation in a
/// readable exponent range, scientific otherwise, trailing zeros trimmed.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let s = format!("{:.11e}", x);
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().unwrap_or(0);
    if (-4..=11).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let plain = format!("{:.*}", decimals, x);
        let trimmed = plain.trim_end_matches('0').trim_end_matches('.');
        if trimmed.is_empty() || trimmed == "-" {
            "0".to_string()
        } else {
            trimmed.to_string()
        }
    } else {
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        format!("{}e{}", mant, exp)
    }
}
