use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Failure modes of exact arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic overflow")]
    Overflow,
}

/// Exact rational number kept in canonical form: `gcd(num, den) == 1`, `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    num: i128,
    den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    pub fn new(num: i128, den: i128) -> Result<Self, ArithError> {
        if den == 0 {
            return Err(ArithError::DivisionByZero);
        }
        if num == i128::MIN || den == i128::MIN {
            return Err(ArithError::Overflow);
        }
        let g = gcd(num, den);
        let (mut num, mut den) = (num / g, den / g);
        if den < 0 {
            num = -num;
            den = -den;
        }
        Ok(Rational { num, den })
    }

    pub const fn from_int(value: i64) -> Self {
        Rational { num: value as i128, den: 1 }
    }

    pub fn numerator(&self) -> i128 {
        self.num
    }

    pub fn denominator(&self) -> i128 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self, ArithError> {
        let g = gcd(self.den, rhs.den);
        let l = self.den / g;
        let r = rhs.den / g;
        let num = self
            .num
            .checked_mul(r)
            .and_then(|a| rhs.num.checked_mul(l).and_then(|b| a.checked_add(b)))
            .ok_or(ArithError::Overflow)?;
        let den = l.checked_mul(rhs.den).ok_or(ArithError::Overflow)?;
        Rational::new(num, den)
    }

    pub fn checked_neg(self) -> Result<Self, ArithError> {
        Ok(Rational { num: self.num.checked_neg().ok_or(ArithError::Overflow)?, den: self.den })
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self, ArithError> {
        self.checked_add(rhs.checked_neg()?)
    }

    pub fn checked_mul(self, rhs: Self) -> Result<Self, ArithError> {
        // cross-reduce first so intermediate products stay small
        let g1 = gcd(self.num, rhs.den).max(1);
        let g2 = gcd(rhs.num, self.den).max(1);
        let num = (self.num / g1).checked_mul(rhs.num / g2).ok_or(ArithError::Overflow)?;
        let den = (self.den / g2).checked_mul(rhs.den / g1).ok_or(ArithError::Overflow)?;
        Rational::new(num, den)
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self, ArithError> {
        if rhs.num == 0 {
            return Err(ArithError::DivisionByZero);
        }
        self.checked_mul(Rational { num: rhs.den, den: rhs.num }.normalized()?)
    }

    fn normalized(self) -> Result<Self, ArithError> {
        Rational::new(self.num, self.den)
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        // denominators are positive; compare a/b with c/d through exact widening
        let lhs = (self.num as f64) * (other.den as f64);
        let rhs = (other.num as f64) * (self.den as f64);
        match (self.num.checked_mul(other.den), other.num.checked_mul(self.den)) {
            (Some(l), Some(r)) => l.cmp(&r),
            _ => lhs.partial_cmp(&rhs).unwrap_or(Ordering::Equal),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<i64> for Rational {
    fn from(value: i64) -> Self {
        Rational::from_int(value)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}
