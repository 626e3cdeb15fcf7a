//! Exact rational arithmetic helpers.
//!
//! Every threshold comparison in this crate (densities against `(1 + eps/2) * E[A]`,
//! grid-norm powers against `((1 + eps) * E[A])^(k*l)`, sparsity cutoffs against
//! `2^(-eps*d/2)`, ...) is performed on exact rationals so that decisions are
//! reproducible and tie-stable across platforms. Floating point only ever appears
//! in display helpers.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Exact rational value; alias for the big-integer ratio type used throughout.
pub type Rat = BigRational;

/// Builds a rational from a signed numerator/denominator pair.
pub fn ratio(num: i64, den: i64) -> Rat {
    assert!(den != 0, "zero denominator");
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Builds a rational from unsigned counts, e.g. `ones / (rows * cols)`.
pub fn ratio_u(num: u64, den: u64) -> Rat {
    assert!(den != 0, "zero denominator");
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Raises a nonnegative rational to an integer power.
pub fn pow(x: &Rat, e: u64) -> Rat {
    if e == 0 {
        return Rat::one();
    }
    let mut acc = Rat::one();
    let mut base = x.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// `2^e` for a signed integer exponent.
pub fn two_pow(e: i64) -> Rat {
    let mag = BigInt::from(BigUint::one() << e.unsigned_abs() as usize);
    if e >= 0 {
        Rat::from_integer(mag)
    } else {
        Rat::new(BigInt::one(), mag)
    }
}

/// Tests `x <= 2^(num/den)` for `x >= 0`, exactly, by comparing in the power
/// domain: `x^den <= 2^num`.
pub fn le_two_pow(x: &Rat, num: i64, den: u64) -> bool {
    assert!(den > 0);
    assert!(!x.is_negative());
    pow(x, den) <= two_pow(num)
}

/// Tests `x >= 2^(num/den)` for `x >= 0`, exactly.
pub fn ge_two_pow(x: &Rat, num: i64, den: u64) -> bool {
    assert!(den > 0);
    assert!(!x.is_negative());
    pow(x, den) >= two_pow(num)
}

/// Approximates the `n`-th root of a nonnegative rational by binary search,
/// to within `2^-precision_bits`. Display-only: algorithmic decisions always
/// compare in the power domain instead of taking roots.
pub fn nth_root_approx(x: &Rat, n: u64, precision_bits: u32) -> Rat {
    assert!(n >= 1);
    assert!(!x.is_negative());
    if x.is_zero() || n == 1 {
        return x.clone();
    }
    let one = Rat::one();
    let mut lo = Rat::zero();
    let mut hi = if *x >= one { x.clone() } else { one };
    let eps = two_pow(-(precision_bits as i64));
    while &hi - &lo > eps {
        let mid = (&lo + &hi) / ratio(2, 1);
        if pow(&mid, n) <= *x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Float view of a rational, for display and reports.
pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `(numerator, denominator)` as `u128`s when the value is nonnegative and
/// fits; lets hot loops compare by integer cross-multiplication.
pub fn to_u128_parts(x: &Rat) -> Option<(u128, u128)> {
    if x.is_negative() {
        return None;
    }
    Some((x.numer().to_u128()?, x.denom().to_u128()?))
}

/// Exact test of `lhs >= (coeff / coeff_div) * base^exp * scale` for
/// nonnegative `coeff` and `base`, evaluated by unreduced big-integer cross
/// multiplication — no gcd reductions, unlike chained `Rat` arithmetic.
pub fn ge_scaled_power(
    lhs: u128,
    coeff_div: u128,
    coeff: &Rat,
    base: &Rat,
    exp: u32,
    scale: u128,
) -> bool {
    debug_assert!(!coeff.is_negative() && !base.is_negative());
    let base_num = base.numer().magnitude().pow(exp);
    let base_den = base.denom().magnitude().pow(exp);
    let left = BigUint::from(lhs) * BigUint::from(coeff_div) * coeff.denom().magnitude() * base_den;
    let right = BigUint::from(scale) * coeff.numer().magnitude() * base_num;
    left >= right
}

/// Parses `num/den` or a plain integer into a rational.
pub fn parse_ratio(s: &str) -> Result<Rat> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt> {
        t.parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("invalid integer {t:?} in rational")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let num = parse_int(n)?;
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rat::new(num, den))
        }
        None => Ok(Rat::from_integer(parse_int(s)?)),
    }
}

/// Renders a rational as `num/den` (or `num` when integral), the CLI format.
pub fn format_ratio(x: &Rat) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_matches_repeated_multiplication() {
        let x = ratio(3, 7);
        let mut acc = Rat::one();
        for e in 0..10u64 {
            assert_eq!(pow(&x, e), acc);
            acc *= &x;
        }
    }

    #[test]
    fn two_pow_signs() {
        assert_eq!(two_pow(3), ratio(8, 1));
        assert_eq!(two_pow(-3), ratio(1, 8));
        assert_eq!(two_pow(0), ratio(1, 1));
    }

    #[test]
    fn dyadic_comparisons() {
        // 1/4 <= 2^(-3/2) <= 1/2 since 2^(-3/2) ~ 0.3536
        assert!(le_two_pow(&ratio(1, 4), -3, 2));
        assert!(!le_two_pow(&ratio(1, 2), -3, 2));
        assert!(ge_two_pow(&ratio(1, 2), -3, 2));
        assert!(!ge_two_pow(&ratio(1, 4), -3, 2));
        // boundary: x = 2^-2 exactly
        assert!(le_two_pow(&ratio(1, 4), -2, 1));
        assert!(ge_two_pow(&ratio(1, 4), -2, 1));
    }

    #[test]
    fn nth_root_brackets_value() {
        let x = ratio(1, 8);
        let r = nth_root_approx(&x, 4, 40);
        // true value ~ 0.594603...
        let v = to_f64(&r);
        assert!((v - 0.125f64.powf(0.25)).abs() < 1e-9);
    }

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["1/160", "3", "-5/7", "0"] {
            let r = parse_ratio(s).unwrap();
            assert_eq!(parse_ratio(&format_ratio(&r)).unwrap(), r);
        }
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("abc").is_err());
    }
}
