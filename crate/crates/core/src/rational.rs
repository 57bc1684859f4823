//! Exact rational coefficients and their text forms.

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

pub type Rational = num_rational::Ratio<i64>;

/// Parses `"7"`, `"-3/4"` or a plain decimal such as `"0.125"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let bad = || format!("not a rational number: {s:?}");
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(Rational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: i64 = digits.parse().map_err(|_| bad())?;
    let denom = 10i64
        .checked_pow(frac_part.len() as u32)
        .ok_or_else(|| format!("too many decimal places in {s:?}"))?;
    let r = Rational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// Integers print without a decimal point; anything else as the shortest
/// decimal that round-trips through `f64`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        to_f64(r).to_string()
    }
}

/// Lossless text form: `n` or `n/d`.
pub fn exact_string(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Least common multiple of the denominators, or `None` on overflow.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Option<i64> {
    let mut l: i64 = 1;
    for v in values {
        if v.is_zero() {
            continue;
        }
        let d = *v.denom();
        let g = l.gcd(&d);
        l = (l / g).checked_mul(d)?;
    }
    Some(l)
}

/// `r * scale` as an integer, where `scale` is a multiple of `r`'s denominator.
pub fn scaled_integer(r: &Rational, scale: i64) -> Option<i64> {
    let factor = scale / r.denom();
    r.numer().checked_mul(factor)
}
