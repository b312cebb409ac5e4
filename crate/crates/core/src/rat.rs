//! Exact rational scalars used throughout the engine.
//!
//! Every coefficient in the engine is a [`Rat`] (an arbitrary-precision
//! rational). Floating point never appears: identity checks compare
//! coefficients with `==`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Arbitrary-precision rational number.
pub type Rat = BigRational;

/// `n` as a rational.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `n/d` as a reduced rational.
pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// `base^exp` for a signed integer exponent. Panics on `0^negative`.
pub fn rat_pow(base: &Rat, exp: i64) -> Rat {
    if exp == 0 {
        return Rat::one();
    }
    let p = base.pow(exp.unsigned_abs() as i32);
    if exp > 0 {
        p
    } else {
        assert!(!p.is_zero(), "rat_pow: zero base with negative exponent");
        p.recip()
    }
}

/// Generalized binomial coefficient `C(e, k) = e(e-1)...(e-k+1)/k!` for a
/// rational upper argument. This is what the binomial-unit series
/// `(1+s q)^e = sum_k C(e,k) s^k q^k` expands with.
pub fn binom_rat(e: &Rat, k: u64) -> Rat {
    let mut num = Rat::one();
    for i in 0..k {
        num *= e - rat(i as i64);
        num /= rat((i + 1) as i64);
    }
    num
}

/// Render as `p/q` (or just `p` when the denominator is one).
pub fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse `p`, `p/q`, or `-p/q`.
pub fn rat_from_string(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        None => s.parse::<BigInt>().ok().map(Rat::from_integer),
        Some((n, d)) => {
            let n = n.trim().parse::<BigInt>().ok()?;
            let d = d.trim().parse::<BigInt>().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rat::new(n, d))
            }
        }
    }
}

/// True when `r` is an integer of absolute value at most `bound`.
pub fn is_small_integer(r: &Rat, bound: i64) -> bool {
    r.denom().is_one() && r.numer().abs() <= BigInt::from(bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binom_rat_integer_cases() {
        assert_eq!(binom_rat(&rat(4), 2), rat(6));
        assert_eq!(binom_rat(&rat(-1), 3), rat(-1));
        assert_eq!(binom_rat(&rat(0), 0), rat(1));
    }

    #[test]
    fn binom_rat_fractional_upper() {
        // C(1/2, 2) = (1/2)(-1/2)/2 = -1/8
        assert_eq!(binom_rat(&rat_frac(1, 2), 2), rat_frac(-1, 8));
    }

    #[test]
    fn string_round_trip() {
        for s in ["3", "-7/2", "0", "22/7"] {
            let r = rat_from_string(s).unwrap();
            assert_eq!(rat_to_string(&r), s);
        }
        assert!(rat_from_string("1/0").is_none());
    }

    #[test]
    fn pow_negative() {
        assert_eq!(rat_pow(&rat(2), -2), rat_frac(1, 4));
    }
}
