//! Exact rational time values.
//!
//! All analysis in this crate is exact: time points, execution demands, and bounds are
//! rationals with 128-bit numerator and denominator. Values serialize as strings
//! (`"7/2"`, `"3"`); floating-point literals are rejected on input so no binary
//! rounding can leak into results.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::de::{Error as DeError, Unexpected};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational instant or duration.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(Ratio<i128>);

impl Time {
    pub const fn raw(r: Ratio<i128>) -> Self {
        Time(r)
    }

    pub fn zero() -> Self {
        Time(Ratio::zero())
    }

    pub fn one() -> Self {
        Time(Ratio::from_integer(1))
    }

    /// Integer value `n`.
    pub fn int(n: i128) -> Self {
        Time(Ratio::from_integer(n))
    }

    /// Exact fraction `p/q`. Panics if `q == 0` (programmer error, not input error).
    pub fn ratio(p: i128, q: i128) -> Self {
        Time(Ratio::new(p, q))
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Time(self.0.abs())
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Largest integer `<= self`, as a rational.
    pub fn floor(&self) -> Self {
        Time(self.0.floor())
    }

    /// Smallest integer `>= self`, as a rational.
    pub fn ceil(&self) -> Self {
        Time(self.0.ceil())
    }

    pub fn floor_int(&self) -> i128 {
        self.0.floor().to_integer()
    }

    pub fn ceil_int(&self) -> i128 {
        self.0.ceil().to_integer()
    }

    /// `ceil(self / d)` as an integer. Panics if `d == 0`.
    pub fn ceil_div_int(&self, d: Time) -> i128 {
        (self.0 / d.0).ceil().to_integer()
    }

    /// `floor(self / d)` as an integer. Panics if `d == 0`.
    pub fn floor_div_int(&self, d: Time) -> i128 {
        (self.0 / d.0).floor().to_integer()
    }

    /// True iff `self` is an integer multiple of `step` (`step > 0`).
    pub fn is_multiple_of(&self, step: Time) -> bool {
        !step.is_zero() && (self.0 / step.0).is_integer()
    }

    /// Least common multiple of two positive rationals: the smallest positive
    /// rational that is an integer multiple of both.
    pub fn lcm(a: Time, b: Time) -> Time {
        assert!(a > Time::zero() && b > Time::zero());
        a * b / Time::gcd(a, b)
    }

    /// Greatest common divisor of two non-negative rationals: the largest rational
    /// dividing both to integers. `gcd(a, 0) = a`.
    pub fn gcd(a: Time, b: Time) -> Time {
        assert!(!a.is_negative() && !b.is_negative());
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        // gcd(p1/q1, p2/q2) = gcd(p1*q2, p2*q1) / (q1*q2)
        let num = i128::gcd(&(a.numer() * b.denom()), &(b.numer() * a.denom()));
        Time(Ratio::new(num, a.denom() * b.denom()))
    }
}

impl From<i128> for Time {
    fn from(n: i128) -> Self {
        Time::int(n)
    }
}

impl From<u32> for Time {
    fn from(n: u32) -> Self {
        Time::int(n as i128)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Time {
            type Output = Time;
            fn $method(self, rhs: Time) -> Time {
                Time(self.0.$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Time {
    type Output = Time;
    fn neg(self) -> Time {
        Time(-self.0)
    }
}

impl AddAssign for Time {
    fn add_assign(&mut self, rhs: Time) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Time {
    fn sub_assign(&mut self, rhs: Time) {
        self.0 -= rhs.0;
    }
}

impl Mul<i128> for Time {
    type Output = Time;
    fn mul(self, rhs: i128) -> Time {
        Time(self.0 * Ratio::from_integer(rhs))
    }
}

impl Sum for Time {
    fn sum<I: Iterator<Item = Time>>(iter: I) -> Time {
        iter.fold(Time::zero(), |a, b| a + b)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Error parsing a time literal.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid time literal {input:?}: {reason}")]
pub struct ParseTimeError {
    pub input: String,
    pub reason: &'static str,
}

impl FromStr for Time {
    type Err = ParseTimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| ParseTimeError { input: s.to_owned(), reason };
        let t = s.trim();
        if t.is_empty() {
            return Err(err("empty"));
        }
        if t.contains(['.', 'e', 'E']) {
            return Err(err("floating-point literals are not accepted; use p/q"));
        }
        match t.split_once('/') {
            None => {
                let n: i128 = t.parse().map_err(|_| err("not an integer"))?;
                Ok(Time::int(n))
            }
            Some((p, q)) => {
                let p: i128 = p.trim().parse().map_err(|_| err("numerator not an integer"))?;
                let q: i128 = q.trim().parse().map_err(|_| err("denominator not an integer"))?;
                if q <= 0 {
                    return Err(err("denominator must be positive"));
                }
                Ok(Time::ratio(p, q))
            }
        }
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Time;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational as \"p/q\" or \"p\", or an integer")
            }

            fn visit_str<E: DeError>(self, v: &str) -> Result<Time, E> {
                v.parse().map_err(|e: ParseTimeError| E::custom(e))
            }

            fn visit_i64<E: DeError>(self, v: i64) -> Result<Time, E> {
                Ok(Time::int(v as i128))
            }

            fn visit_u64<E: DeError>(self, v: u64) -> Result<Time, E> {
                Ok(Time::int(v as i128))
            }

            fn visit_f64<E: DeError>(self, v: f64) -> Result<Time, E> {
                Err(E::invalid_type(
                    Unexpected::Float(v),
                    &"a rational string \"p/q\" (floats are rejected)",
                ))
            }
        }
        deserializer.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["0", "5", "-3", "7/2", "-7/2", "1/3"] {
            let t: Time = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
        }
        let t: Time = "6/4".parse().unwrap();
        assert_eq!(t, Time::ratio(3, 2));
        assert_eq!(t.to_string(), "3/2");
    }

    #[test]
    fn parse_rejects_floats_and_garbage() {
        for s in ["1.5", "1e3", "2E1", "", "a", "1/0", "1/-2", "3.0"] {
            assert!(s.parse::<Time>().is_err(), "accepted {s:?}");
        }
    }

    #[test]
    fn serde_accepts_strings_and_integers_rejects_floats() {
        let t: Time = serde_json::from_str("\"7/2\"").unwrap();
        assert_eq!(t, Time::ratio(7, 2));
        let t: Time = serde_json::from_str("42").unwrap();
        assert_eq!(t, Time::int(42));
        assert!(serde_json::from_str::<Time>("1.5").is_err());
        assert_eq!(serde_json::to_string(&Time::ratio(7, 2)).unwrap(), "\"7/2\"");
        assert_eq!(serde_json::to_string(&Time::int(3)).unwrap(), "\"3\"");
    }

    #[test]
    fn ceil_floor_div() {
        let t = Time::ratio(7, 2);
        assert_eq!(t.ceil_int(), 4);
        assert_eq!(t.floor_int(), 3);
        assert_eq!(Time::int(9).ceil_div_int(Time::int(4)), 3);
        assert_eq!(Time::int(8).ceil_div_int(Time::int(4)), 2);
        assert_eq!(Time::ratio(-1, 2).ceil_int(), 0);
        assert_eq!(Time::int(-1).ceil_div_int(Time::int(4)), 0);
        assert_eq!(Time::int(-4).ceil_div_int(Time::int(4)), -1);
    }

    #[test]
    fn gcd_of_rationals() {
        assert_eq!(Time::gcd(Time::int(6), Time::int(4)), Time::int(2));
        assert_eq!(Time::gcd(Time::ratio(1, 2), Time::ratio(1, 3)), Time::ratio(1, 6));
        assert_eq!(Time::gcd(Time::ratio(3, 4), Time::ratio(1, 2)), Time::ratio(1, 4));
        assert_eq!(Time::gcd(Time::zero(), Time::int(5)), Time::int(5));
        assert_eq!(Time::lcm(Time::int(6), Time::int(4)), Time::int(12));
        assert_eq!(Time::lcm(Time::ratio(1, 2), Time::ratio(1, 3)), Time::int(1));
        assert!(Time::int(6).is_multiple_of(Time::int(2)));
        assert!(!Time::int(7).is_multiple_of(Time::int(2)));
        assert!(Time::ratio(3, 2).is_multiple_of(Time::ratio(1, 2)));
    }
}
