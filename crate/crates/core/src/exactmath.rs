//! Exact rational arithmetic and Euclidean continued fractions.
//!
//! Rationals are always kept in lowest terms with a positive denominator.
//! Arithmetic goes through 128-bit intermediates and reports overflow of
//! the 64-bit result as a hard error instead of wrapping: mediant chains
//! grow denominators quickly and a silent wrap would corrupt every
//! downstream computation.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// Errors from exact arithmetic and parsing.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExactError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("integer overflow in exact arithmetic")]
    Overflow,
    #[error("malformed rational `{0}`: expected `num/den` or an integer")]
    ParseRational(String),
    #[error("continued fraction terms violate the terminal convention: {0:?}")]
    BadTerms(Vec<i64>),
    #[error("empty continued fraction")]
    EmptyTerms,
}

/// Non-negative gcd of two signed integers; `gcd(0, 0) = 0`.
pub fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a as i64
}

/// Gcd of two unsigned integers; `gcd(a, 0) = a` by convention.
pub fn gcd_u64(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a
}

/// Checked lcm; errors on 64-bit overflow.
pub fn lcm_u64(a: u64, b: u64) -> Result<u64, ExactError> {
    if a == 0 || b == 0 {
        return Ok(0);
    }
    (a / gcd_u64(a, b)).checked_mul(b).ok_or(ExactError::Overflow)
}

/// Extended Euclid: returns `(g, x, y)` with `a*x + b*y = g = gcd(a, b)`.
pub fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        return (a.abs(), a.signum(), 0);
    }
    let (g, x, y) = extended_gcd(b, a % b);
    (g, y, x - (a / b) * y)
}

/// Trial-division primality check, adequate for characteristic exponents.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// A reduced fraction `num/den` with `den >= 1`; zero is `0/1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i64,
    den: i64,
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    /// Builds the reduced fraction `num/den`; the sign lives in the numerator.
    pub fn new(num: i64, den: i64) -> Result<Self, ExactError> {
        if den == 0 {
            return Err(ExactError::ZeroDenominator);
        }
        Self::from_i128(num as i128, den as i128)
    }

    pub fn from_int(n: i64) -> Self {
        Rational { num: n, den: 1 }
    }

    /// Reduces a 128-bit fraction and checks the result fits in 64 bits.
    fn from_i128(num: i128, den: i128) -> Result<Self, ExactError> {
        debug_assert!(den != 0);
        let sign = if (num < 0) == (den < 0) { 1i128 } else { -1i128 };
        let (mut n, mut d) = (num.unsigned_abs(), den.unsigned_abs());
        let g = {
            let (mut a, mut b) = (n, d);
            while b != 0 {
                let t = b;
                b = a % b;
                a = t;
            }
            a.max(1)
        };
        n /= g;
        d /= g;
        let num = i64::try_from(sign * n as i128).map_err(|_| ExactError::Overflow)?;
        let den = i64::try_from(d).map_err(|_| ExactError::Overflow)?;
        Ok(Rational { num, den: den.max(1) })
    }

    pub fn numer(&self) -> i64 {
        self.num
    }

    pub fn denom(&self) -> i64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_negative(&self) -> bool {
        self.num < 0
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn checked_add(&self, other: &Rational) -> Result<Rational, ExactError> {
        Self::from_i128(
            self.num as i128 * other.den as i128 + other.num as i128 * self.den as i128,
            self.den as i128 * other.den as i128,
        )
    }

    pub fn checked_sub(&self, other: &Rational) -> Result<Rational, ExactError> {
        Self::from_i128(
            self.num as i128 * other.den as i128 - other.num as i128 * self.den as i128,
            self.den as i128 * other.den as i128,
        )
    }

    pub fn checked_mul(&self, other: &Rational) -> Result<Rational, ExactError> {
        Self::from_i128(
            self.num as i128 * other.num as i128,
            self.den as i128 * other.den as i128,
        )
    }

    pub fn recip(&self) -> Result<Rational, ExactError> {
        if self.num == 0 {
            return Err(ExactError::ZeroDenominator);
        }
        Self::from_i128(self.den as i128, self.num as i128)
    }

    pub fn neg(&self) -> Rational {
        Rational { num: -self.num, den: self.den }
    }

    /// Floor of the rational as an integer (Euclidean: `floor(-1/2) = -1`).
    pub fn floor(&self) -> i64 {
        self.num.div_euclid(self.den)
    }

    /// Canonical representative in `[0, 1)` of the class mod Z.
    pub fn mod_one(&self) -> Rational {
        let n = self.num.rem_euclid(self.den);
        Rational { num: n, den: self.den }
    }

    /// Renders `num/den` with the denominator always present.
    pub fn to_fraction_string(&self) -> String {
        format!("{}/{}", self.num, self.den)
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.num as i128 * other.den as i128;
        let rhs = other.num as i128 * self.den as i128;
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
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

impl FromStr for Rational {
    type Err = ExactError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ExactError::ParseRational(s.to_string());
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let num: i64 = n.trim().parse().map_err(|_| bad())?;
                let den: i64 = d.trim().parse().map_err(|_| bad())?;
                if den == 0 {
                    return Err(ExactError::ZeroDenominator);
                }
                Rational::new(num, den)
            }
            None => {
                let num: i64 = s.parse().map_err(|_| bad())?;
                Ok(Rational::from_int(num))
            }
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Rational", 2)?;
        st.serialize_field("num", &self.num)?;
        st.serialize_field("den", &self.den)?;
        st.end()
    }
}

/// The mediant `(n1 + n2) / (d1 + d2)` of two reduced fractions.
///
/// When the arguments are unimodular neighbors the raw sums are already
/// in lowest terms; in general the result is reduced on construction.
pub fn mediant(q1: &Rational, q2: &Rational) -> Result<Rational, ExactError> {
    Rational::from_i128(
        q1.num as i128 + q2.num as i128,
        q1.den as i128 + q2.den as i128,
    )
}

/// The determinant `n1*d2 - n2*d1` of the column matrix of two fractions.
///
/// `|det| = 1` is the unimodularity test used throughout the crate.
pub fn unimodular_det(q1: &Rational, q2: &Rational) -> i128 {
    q1.num as i128 * q2.den as i128 - q2.num as i128 * q1.den as i128
}

/// Euclidean continued fraction `[a0; a1, ..., an]`.
///
/// Uniqueness convention: the middle terms satisfy `a_i >= 1` and the
/// terminal term satisfies `a_n > 1` whenever `n >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContinuedFraction {
    terms: Vec<i64>,
}

impl ContinuedFraction {
    /// Wraps a term sequence, enforcing the uniqueness convention.
    pub fn from_terms(terms: Vec<i64>) -> Result<Self, ExactError> {
        if terms.is_empty() {
            return Err(ExactError::EmptyTerms);
        }
        let n = terms.len() - 1;
        for (i, &t) in terms.iter().enumerate().skip(1) {
            if i < n && t < 1 {
                return Err(ExactError::BadTerms(terms.clone()));
            }
            if i == n && t <= 1 {
                return Err(ExactError::BadTerms(terms.clone()));
            }
        }
        Ok(ContinuedFraction { terms })
    }

    pub fn terms(&self) -> &[i64] {
        &self.terms
    }

    /// Exact value of the expansion.
    pub fn value(&self) -> Result<Rational, ExactError> {
        cf_value(self)
    }
}

impl fmt::Display for ContinuedFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.terms[0])?;
        for (i, t) in self.terms.iter().enumerate().skip(1) {
            write!(f, "{}{}", if i == 1 { ";" } else { "," }, t)?;
        }
        write!(f, "]")
    }
}

/// Euclidean continued fraction expansion of a rational.
///
/// The floor-based algorithm produces the unique expansion with the
/// terminal term greater than 1, for every rational including integers
/// and negatives.
pub fn cf_expand(q: &Rational) -> ContinuedFraction {
    let mut terms = Vec::new();
    let mut num = q.num;
    let mut den = q.den;
    loop {
        let a = num.div_euclid(den);
        terms.push(a);
        let r = num.rem_euclid(den);
        if r == 0 {
            break;
        }
        num = den;
        den = r;
    }
    debug_assert!(terms.len() == 1 || *terms.last().unwrap() > 1);
    ContinuedFraction { terms }
}

/// Exact value of a continued fraction, evaluated back to front.
pub fn cf_value(cf: &ContinuedFraction) -> Result<Rational, ExactError> {
    let mut it = cf.terms.iter().rev();
    let last = *it.next().ok_or(ExactError::EmptyTerms)?;
    let mut v = Rational::from_int(last);
    for &a in it {
        v = Rational::from_int(a).checked_add(&v.recip()?)?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn reduction_and_sign() {
        assert_eq!(q(2, 4), q(1, 2));
        assert_eq!(q(-2, -4), q(1, 2));
        assert_eq!(q(2, -4), q(-1, 2));
        assert_eq!(q(0, 7), Rational::ZERO);
        assert!(q(0, 7).denom() == 1);
    }

    #[test]
    fn expand_integer() {
        assert_eq!(cf_expand(&q(5, 1)).terms(), &[5]);
    }

    #[test]
    fn expand_two_thirds() {
        // 2/3 = 0 + 1/(1 + 1/2)
        assert_eq!(cf_expand(&q(2, 3)).terms(), &[0, 1, 2]);
    }

    #[test]
    fn expand_seven_fifths() {
        assert_eq!(cf_expand(&q(7, 5)).terms(), &[1, 2, 2]);
    }

    #[test]
    fn expand_negative_uses_floor() {
        let cf = cf_expand(&q(-2, 3));
        assert_eq!(cf.terms(), &[-1, 3]);
        assert_eq!(cf_value(&cf).unwrap(), q(-2, 3));
    }

    #[test]
    fn value_examples() {
        let cf = ContinuedFraction::from_terms(vec![3]).unwrap();
        assert_eq!(cf_value(&cf).unwrap(), q(3, 1));
        let cf = ContinuedFraction::from_terms(vec![0, 1, 2]).unwrap();
        assert_eq!(cf_value(&cf).unwrap(), q(2, 3));
        let cf = ContinuedFraction::from_terms(vec![1, 2, 2]).unwrap();
        assert_eq!(cf_value(&cf).unwrap(), q(7, 5));
    }

    #[test]
    fn terminal_convention_rejected() {
        assert!(ContinuedFraction::from_terms(vec![0, 1, 1]).is_err());
        assert!(ContinuedFraction::from_terms(vec![1, 0, 2]).is_err());
        assert!(ContinuedFraction::from_terms(vec![]).is_err());
    }

    #[test]
    fn mediant_examples() {
        assert_eq!(mediant(&q(0, 1), &q(1, 1)).unwrap(), q(1, 2));
        assert_eq!(mediant(&q(1, 2), &q(1, 1)).unwrap(), q(2, 3));
        // non-unimodular pair reduces
        assert_eq!(mediant(&q(1, 1), &q(1, 1)).unwrap(), q(1, 1));
    }

    #[test]
    fn det_examples() {
        assert_eq!(unimodular_det(&q(1, 2), &q(0, 1)), 1);
        assert_eq!(unimodular_det(&q(2, 3), &q(0, 1)), 2);
        assert_eq!(unimodular_det(&q(5, 7), &q(5, 7)), 0);
        assert_eq!(
            unimodular_det(&q(1, 2), &q(2, 3)),
            -unimodular_det(&q(2, 3), &q(1, 2))
        );
    }

    #[test]
    fn parse_display_round_trip() {
        for s in ["2/3", "-7/5", "0", "12", "-3"] {
            let r: Rational = s.parse().unwrap();
            let back: Rational = r.to_string().parse().unwrap();
            assert_eq!(r, back);
        }
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x/2".parse::<Rational>().is_err());
    }

    #[test]
    fn cf_display_format() {
        assert_eq!(cf_expand(&q(5, 1)).to_string(), "[5]");
        assert_eq!(cf_expand(&q(2, 3)).to_string(), "[0;1,2]");
        assert_eq!(cf_expand(&q(7, 5)).to_string(), "[1;2,2]");
    }

    #[test]
    fn overflow_is_detected() {
        let big = q(i64::MAX, 1);
        assert_eq!(big.checked_add(&Rational::ONE), Err(ExactError::Overflow));
        // (2*MAX - 1)/2 does not reduce and does not fit
        assert_eq!(mediant(&big, &q(i64::MAX - 1, 1)), Err(ExactError::Overflow));
    }

    #[test]
    fn extended_gcd_bezout() {
        for (a, b) in [(5, 7), (12, 18), (1, 1), (240, 46)] {
            let (g, x, y) = extended_gcd(a, b);
            assert_eq!(g, gcd_i64(a, b));
            assert_eq!(a * x + b * y, g);
        }
    }

    #[test]
    fn mod_one_representative() {
        assert_eq!(q(5, 6).mod_one(), q(5, 6));
        assert_eq!(q(-1, 6).mod_one(), q(5, 6));
        assert_eq!(q(7, 6).mod_one(), q(1, 6));
        assert_eq!(q(1, 1).mod_one(), Rational::ZERO);
        assert_eq!(q(-1, 1).mod_one(), Rational::ZERO);
    }
}
