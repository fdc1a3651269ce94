//! Certified real intervals backed by MPFR.
//!
//! A [`HighPrecReal`] is a closed interval `[lo, hi]` whose endpoints are
//! binary floating point numbers. Every operation rounds the lower endpoint
//! toward `-inf` and the upper endpoint toward `+inf`, so the true value is
//! always enclosed.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::float::Round;
use rug::ops::AssignRound;
use rug::{Float, Integer, Rational};

use crate::decimal::Decimal;
use crate::error::{Error, Result};

fn down<T>(prec: u32, val: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, val, Round::Down).0
}

fn up<T>(prec: u32, val: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, val, Round::Up).0
}

fn min_f(a: Float, b: Float) -> Float {
    if b < a {
        b
    } else {
        a
    }
}

fn max_f(a: Float, b: Float) -> Float {
    if b > a {
        b
    } else {
        a
    }
}

#[derive(Clone, Debug)]
pub struct HighPrecReal {
    lo: Float,
    hi: Float,
    prec: u32,
}

impl HighPrecReal {
    fn from_bounds(lo: Float, hi: Float, prec: u32) -> Self {
        debug_assert!(lo <= hi, "inverted interval");
        Self { lo, hi, prec }
    }

    pub fn from_integer(n: &Integer, prec: u32) -> Self {
        Self::from_bounds(down(prec, n), up(prec, n), prec)
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Self::from_integer(&Integer::from(n), prec)
    }

    pub fn from_rational(r: &Rational, prec: u32) -> Self {
        Self::from_bounds(down(prec, r), up(prec, r), prec)
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        Self::from_bounds(down(prec, x), up(prec, x), prec)
    }

    /// Interval spanning `[lo, hi]`; both endpoints are taken as exact rationals.
    pub fn spanning(lo: &Rational, hi: &Rational, prec: u32) -> Self {
        assert!(lo <= hi, "spanning: lo > hi");
        Self::from_bounds(down(prec, lo), up(prec, hi), prec)
    }

    pub fn zero(prec: u32) -> Self {
        Self::from_i64(0, prec)
    }

    pub fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn ln2(prec: u32) -> Self {
        Self::from_i64(2, prec).ln().expect("ln 2")
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn precision_bits(&self) -> u32 {
        self.prec
    }

    /// Midpoint, rounded to nearest at one bit above the working precision.
    pub fn value(&self) -> Float {
        let sum = Float::with_val(self.prec + 1, &self.lo + &self.hi);
        sum / 2u32
    }

    /// An upper bound on the distance from [`value`](Self::value) to either endpoint.
    pub fn error_radius(&self) -> Float {
        let mid = self.value();
        let r1 = up(self.prec, &self.hi - &mid);
        let r2 = up(self.prec, &mid - &self.lo);
        max_f(r1, r2)
    }

    pub fn width(&self) -> Float {
        up(self.prec, &self.hi - &self.lo)
    }

    pub fn to_f64(&self) -> f64 {
        self.value().to_f64()
    }

    /// Re-encloses the interval at a different working precision.
    pub fn with_precision(&self, prec: u32) -> Self {
        Self::from_bounds(down(prec, &self.lo), up(prec, &self.hi), prec)
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0
    }

    pub fn is_negative(&self) -> bool {
        self.hi < 0
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    pub fn contains_rational(&self, r: &Rational) -> bool {
        self.lo <= *r && self.hi >= *r
    }

    /// True when every point of `self` is strictly below every point of `other`.
    pub fn certainly_lt(&self, other: &Self) -> bool {
        self.hi < other.lo
    }

    pub fn certainly_le(&self, other: &Self) -> bool {
        self.hi <= other.lo
    }

    pub fn certainly_gt(&self, other: &Self) -> bool {
        other.certainly_lt(self)
    }

    fn result_prec(&self, other: &Self) -> u32 {
        self.prec.max(other.prec)
    }

    pub fn abs(&self) -> Self {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            -self
        } else {
            let neg_lo = Float::with_val(self.prec, -&self.lo);
            let hi = max_f(neg_lo, self.hi.clone());
            Self::from_bounds(Float::with_val(self.prec, 0), hi, self.prec)
        }
    }

    pub fn max(&self, other: &Self) -> Self {
        let prec = self.result_prec(other);
        Self::from_bounds(
            max_f(down(prec, &self.lo), down(prec, &other.lo)),
            max_f(up(prec, &self.hi), up(prec, &other.hi)),
            prec,
        )
    }

    pub fn min(&self, other: &Self) -> Self {
        let prec = self.result_prec(other);
        Self::from_bounds(
            min_f(down(prec, &self.lo), down(prec, &other.lo)),
            min_f(up(prec, &self.hi), up(prec, &other.hi)),
            prec,
        )
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.contains_zero() {
            return Err(Error::Domain("division by an interval containing zero".into()));
        }
        let prec = self.result_prec(other);
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for a in [&self.lo, &self.hi] {
            for b in [&other.lo, &other.hi] {
                let l = down(prec, a / b);
                let h = up(prec, a / b);
                lo = Some(match lo {
                    Some(x) => min_f(x, l),
                    None => l,
                });
                hi = Some(match hi {
                    Some(x) => max_f(x, h),
                    None => h,
                });
            }
        }
        Ok(Self::from_bounds(lo.unwrap(), hi.unwrap(), prec))
    }

    pub fn recip(&self) -> Result<Self> {
        Self::one(self.prec).div(self)
    }

    pub fn div_u32(&self, d: u32) -> Self {
        assert!(d > 0);
        Self::from_bounds(down(self.prec, &self.lo / d), up(self.prec, &self.hi / d), self.prec)
    }

    pub fn mul_integer(&self, n: &Integer) -> Self {
        self * &Self::from_integer(n, self.prec)
    }

    pub fn sqrt(&self) -> Result<Self> {
        if self.lo < 0 {
            return Err(Error::Domain("square root of a possibly negative interval".into()));
        }
        let mut lo = down(self.prec, &self.lo);
        lo.sqrt_round(Round::Down);
        let mut hi = up(self.prec, &self.hi);
        hi.sqrt_round(Round::Up);
        Ok(Self::from_bounds(lo, hi, self.prec))
    }

    /// Natural logarithm; the interval must be strictly positive.
    pub fn ln(&self) -> Result<Self> {
        if !self.is_positive() {
            return Err(Error::Domain("logarithm of a non-positive interval".into()));
        }
        let mut lo = down(self.prec, &self.lo);
        lo.ln_round(Round::Down);
        let mut hi = up(self.prec, &self.hi);
        hi.ln_round(Round::Up);
        Ok(Self::from_bounds(lo, hi, self.prec))
    }

    /// `max(0, ln x)` for `x > 0`.
    pub fn log_plus(&self) -> Result<Self> {
        let l = self.ln()?;
        Ok(l.max(&Self::zero(self.prec)))
    }

    pub fn exp(&self) -> Self {
        let mut lo = down(self.prec, &self.lo);
        lo.exp_round(Round::Down);
        let mut hi = up(self.prec, &self.hi);
        hi.exp_round(Round::Up);
        Self::from_bounds(lo, hi, self.prec)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one(self.prec);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// `x^(1/n)` for `x >= 0`.
    pub fn root(&self, n: u32) -> Result<Self> {
        assert!(n > 0);
        if self.lo < 0 {
            return Err(Error::Domain("root of a possibly negative interval".into()));
        }
        if n == 1 {
            return Ok(self.clone());
        }
        if self.hi == 0 {
            return Ok(Self::zero(self.prec));
        }
        let upper = Self::from_bounds(self.hi.clone(), self.hi.clone(), self.prec)
            .ln()?
            .div_u32(n)
            .exp();
        let lower = if self.lo > 0 {
            Self::from_bounds(self.lo.clone(), self.lo.clone(), self.prec)
                .ln()?
                .div_u32(n)
                .exp()
                .lo
        } else {
            Float::with_val(self.prec, 0)
        };
        Ok(Self::from_bounds(lower, upper.hi, self.prec))
    }

    /// Floor of every point of the interval, when that floor is unique.
    pub fn floor_certified(&self) -> Option<Integer> {
        let l = self.lo.to_integer_round(Round::Down)?.0;
        let h = self.hi.to_integer_round(Round::Down)?.0;
        (l == h).then_some(l)
    }

    pub fn floor_hi(&self) -> Integer {
        self.hi.to_integer_round(Round::Down).expect("finite interval").0
    }

    pub fn ceil_hi(&self) -> Integer {
        self.hi.to_integer_round(Round::Up).expect("finite interval").0
    }

    pub fn floor_lo(&self) -> Integer {
        self.lo.to_integer_round(Round::Down).expect("finite interval").0
    }

    /// Exact rational endpoints.
    pub fn rational_bounds(&self) -> (Rational, Rational) {
        (
            self.lo.to_rational().expect("finite interval"),
            self.hi.to_rational().expect("finite interval"),
        )
    }

    /// Upper endpoint rounded up to `sig` significant decimal digits.
    pub fn upper_decimal(&self, sig: u32) -> Decimal {
        Decimal::round_up(&self.hi.to_rational().expect("finite interval"), sig)
    }

    /// Distance from the interval to the nearest integer, `||x||`.
    ///
    /// Returns `None` when the interval straddles a half-integer, because the
    /// nearest integer is then not determined.
    pub fn dist_to_nearest_integer(&self) -> Option<Self> {
        let half = Rational::from((1, 2));
        let (lo, hi) = self.rational_bounds();
        let n_lo = Rational::from(&lo + &half).floor();
        let n_hi = Rational::from(&hi + &half).floor();
        if n_lo != n_hi {
            return None;
        }
        let n = n_lo.numer().clone();
        let shifted = self - &Self::from_integer(&n, self.prec);
        // A point exactly at a half-integer is ambiguous too.
        if shifted.hi >= half || shifted.lo <= Rational::from(-&half) {
            return None;
        }
        Some(shifted.abs())
    }
}

impl<'a> Add<&'a HighPrecReal> for &'a HighPrecReal {
    type Output = HighPrecReal;

    fn add(self, rhs: &'a HighPrecReal) -> HighPrecReal {
        let prec = self.result_prec(rhs);
        HighPrecReal::from_bounds(
            down(prec, &self.lo + &rhs.lo),
            up(prec, &self.hi + &rhs.hi),
            prec,
        )
    }
}

impl<'a> Sub<&'a HighPrecReal> for &'a HighPrecReal {
    type Output = HighPrecReal;

    fn sub(self, rhs: &'a HighPrecReal) -> HighPrecReal {
        let prec = self.result_prec(rhs);
        HighPrecReal::from_bounds(
            down(prec, &self.lo - &rhs.hi),
            up(prec, &self.hi - &rhs.lo),
            prec,
        )
    }
}

impl<'a> Mul<&'a HighPrecReal> for &'a HighPrecReal {
    type Output = HighPrecReal;

    fn mul(self, rhs: &'a HighPrecReal) -> HighPrecReal {
        let prec = self.result_prec(rhs);
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for a in [&self.lo, &self.hi] {
            for b in [&rhs.lo, &rhs.hi] {
                let l = down(prec, a * b);
                let h = up(prec, a * b);
                lo = Some(match lo {
                    Some(x) => min_f(x, l),
                    None => l,
                });
                hi = Some(match hi {
                    Some(x) => max_f(x, h),
                    None => h,
                });
            }
        }
        HighPrecReal::from_bounds(lo.unwrap(), hi.unwrap(), prec)
    }
}

impl Neg for &HighPrecReal {
    type Output = HighPrecReal;

    fn neg(self) -> HighPrecReal {
        HighPrecReal::from_bounds(
            Float::with_val(self.prec, -&self.hi),
            Float::with_val(self.prec, -&self.lo),
            self.prec,
        )
    }
}

impl Neg for HighPrecReal {
    type Output = HighPrecReal;

    fn neg(self) -> HighPrecReal {
        -&self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<HighPrecReal> for HighPrecReal {
            type Output = HighPrecReal;
            fn $m(self, rhs: HighPrecReal) -> HighPrecReal {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a HighPrecReal> for HighPrecReal {
            type Output = HighPrecReal;
            fn $m(self, rhs: &'a HighPrecReal) -> HighPrecReal {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for HighPrecReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        write!(
            f,
            "{} ± {}",
            self.value().to_string_radix(10, Some(digits)),
            self.error_radius().to_string_radix(10, Some(3))
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_three_encloses_known_value() {
        let l = HighPrecReal::from_i64(3, 128).ln().unwrap();
        // ln 3 = 1.09861228866810969139...
        let below = Rational::from((109861228866810969i64, 100000000000000000i64));
        let above = Rational::from((109861228866810970i64, 100000000000000000i64));
        assert!(*l.lo() > below && *l.hi() < above);
        assert!(l.width() < 1e-35);
    }

    #[test]
    fn interval_mul_handles_mixed_signs() {
        let a = HighPrecReal::spanning(&Rational::from(-2), &Rational::from(3), 64);
        let b = HighPrecReal::spanning(&Rational::from(-5), &Rational::from(1), 64);
        let c = &a * &b;
        assert_eq!(*c.lo(), -15);
        assert_eq!(*c.hi(), 10);
    }

    #[test]
    fn division_by_zero_interval_is_an_error() {
        let a = HighPrecReal::one(64);
        let z = HighPrecReal::spanning(&Rational::from(-1), &Rational::from(1), 64);
        assert!(a.div(&z).is_err());
        assert!(z.ln().is_err());
    }

    #[test]
    fn nearest_integer_distance() {
        let x = HighPrecReal::from_rational(&Rational::from((27, 10)), 128);
        let d = x.dist_to_nearest_integer().unwrap();
        assert!((d.to_f64() - 0.3).abs() < 1e-15);
        let half = HighPrecReal::from_rational(&Rational::from((5, 2)), 128);
        assert!(half.dist_to_nearest_integer().is_none());
    }

    #[test]
    fn root_and_powi_are_inverse() {
        let x = HighPrecReal::from_i64(1000, 192);
        let r = x.root(3).unwrap();
        assert!((r.to_f64() - 10.0).abs() < 1e-12);
        let back = r.powi(3);
        assert!(back.contains_rational(&Rational::from(1000)));
    }
}
