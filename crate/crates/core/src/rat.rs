//! Exact rational arithmetic helpers.
//!
//! All quantities of time in this crate are arbitrary-precision rationals
//! ([`Rat`]); these helpers cover the handful of operations the rest of the
//! engine needs beyond plain field arithmetic: text round-tripping in the
//! `p/q` format, least common multiples of positive rationals (for aligning
//! periods), and Euclidean remainders (for reducing instants into a period).

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Arbitrary-precision rational number. Displays as `p/q`, or `p` when the
/// denominator is 1, which is also the accepted input syntax.
pub type Rat = num_rational::BigRational;

/// Shorthand for `n/d` from machine integers. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// The rational `n/1`.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Error produced when a string is not a valid `p/q` rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseRatError {
    input: String,
}

impl fmt::Display for ParseRatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational literal `{}` (expected `p` or `p/q`)", self.input)
    }
}

/// Parses `p/q` or `p` (optionally negative) into a reduced rational.
///
/// Rejects empty input, a zero denominator, embedded whitespace and any
/// trailing garbage.
pub fn parse_rat(s: &str) -> Result<Rat, ParseRatError> {
    let err = || ParseRatError { input: s.to_string() };
    // BigRational's FromStr accepts `p/q` and `p`, but tolerates forms we'd
    // rather not round-trip (like `+3`); keep the gate narrow.
    if s.is_empty()
        || s.contains(char::is_whitespace)
        || !s.chars().all(|c| c.is_ascii_digit() || c == '/' || c == '-')
    {
        return Err(err());
    }
    Rat::from_str(s).map_err(|_| err())
}

/// Renders a rational in the same `p/q` / `p` shape that [`parse_rat`] reads.
pub fn render_rat(r: &Rat) -> String {
    r.to_string()
}

/// Least common multiple of two strictly positive rationals: the smallest
/// positive `m` such that `m/a` and `m/b` are both integers.
///
/// For reduced `a = n1/d1` and `b = n2/d2` this is `lcm(n1,n2)/gcd(d1,d2)`.
pub fn rat_lcm(a: &Rat, b: &Rat) -> Rat {
    assert!(a.is_positive() && b.is_positive(), "rat_lcm needs positive arguments");
    Rat::new(a.numer().lcm(b.numer()), a.denom().gcd(b.denom()))
}

/// Euclidean remainder `a mod m` for `m > 0`: the unique `r` in `[0, m)`
/// with `a = k*m + r` for an integer `k`.
pub fn rem_euclid(a: &Rat, m: &Rat) -> Rat {
    assert!(m.is_positive(), "rem_euclid needs a positive modulus");
    let r = a - (a / m).floor() * m;
    debug_assert!(!r.is_negative() && r < *m);
    r
}

/// Floor of `a / m` as an integer, for `m > 0`.
pub fn floor_div(a: &Rat, m: &Rat) -> BigInt {
    assert!(m.is_positive(), "floor_div needs a positive divisor");
    (a / m).floor().to_integer()
}

/// Ceiling of `a / m` as an integer, for `m > 0`.
pub fn ceil_div(a: &Rat, m: &Rat) -> BigInt {
    assert!(m.is_positive(), "ceil_div needs a positive divisor");
    (a / m).ceil().to_integer()
}

/// The constant 0.
pub fn zero() -> Rat {
    Rat::zero()
}

/// The constant 1.
pub fn one() -> Rat {
    Rat::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_render_basics() {
        assert_eq!(parse_rat("3/2").unwrap(), rat(3, 2));
        assert_eq!(parse_rat("7").unwrap(), rat_int(7));
        assert_eq!(parse_rat("-5/10").unwrap(), rat(-1, 2));
        assert_eq!(render_rat(&rat(4, 8)), "1/2");
        assert_eq!(render_rat(&rat(6, 3)), "2");
        assert_eq!(render_rat(&rat_int(0)), "0");

        for bad in ["", " 1", "1 ", "1/ 2", "1/0", "a", "1/2/3", "+3", "1.5", "--2"] {
            assert!(parse_rat(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn lcm_examples() {
        assert_eq!(rat_lcm(&rat(1, 2), &rat(1, 3)), rat_int(1));
        assert_eq!(rat_lcm(&rat(3, 4), &rat(1, 2)), rat(3, 2));
        assert_eq!(rat_lcm(&rat_int(2), &rat_int(3)), rat_int(6));
        assert_eq!(rat_lcm(&rat(2, 3), &rat(2, 3)), rat(2, 3));
    }

    #[test]
    fn rem_euclid_examples() {
        assert_eq!(rem_euclid(&rat(5, 2), &rat_int(1)), rat(1, 2));
        assert_eq!(rem_euclid(&rat(-1, 2), &rat_int(2)), rat(3, 2));
        assert_eq!(rem_euclid(&rat_int(6), &rat_int(3)), rat_int(0));
    }

    fn small_rat() -> impl Strategy<Value = Rat> {
        (-40i64..=40, 1i64..=12).prop_map(|(n, d)| rat(n, d))
    }

    fn small_pos_rat() -> impl Strategy<Value = Rat> {
        (1i64..=40, 1i64..=12).prop_map(|(n, d)| rat(n, d))
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(a in small_rat()) {
            prop_assert_eq!(parse_rat(&render_rat(&a)).unwrap(), a);
        }

        #[test]
        fn lcm_is_common_multiple_and_least(a in small_pos_rat(), b in small_pos_rat()) {
            let m = rat_lcm(&a, &b);
            prop_assert!((&m / &a).is_integer());
            prop_assert!((&m / &b).is_integer());
            // Any common multiple is a multiple of m: check the first few.
            for k in 1..=4i64 {
                let half = &m * rat(1, k);
                if (&half / &a).is_integer() && (&half / &b).is_integer() {
                    prop_assert_eq!(k, 1);
                }
            }
        }

        #[test]
        fn rem_euclid_in_range(a in small_rat(), m in small_pos_rat()) {
            let r = rem_euclid(&a, &m);
            prop_assert!(!r.is_negative() && r < m);
            let k = (&a - &r) / &m;
            prop_assert!(k.is_integer());
        }
    }
}
