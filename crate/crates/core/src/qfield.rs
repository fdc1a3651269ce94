//! Exact arithmetic in real quadratic fields `Q(sqrt d)` and absolute
//! logarithmic heights.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::{Integer, Rational};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::real::HighPrecReal;

/// Splits `n > 0` as `k^2 * m` with `m` squarefree.
///
/// Trial division removes every prime up to the cube root of what is left;
/// the remaining cofactor then has at most two prime factors, so it is
/// squarefree unless it is a perfect square.
pub fn squarefree_decompose(n: &Integer) -> (Integer, Integer) {
    assert!(*n > 0, "squarefree_decompose needs a positive integer");
    let mut rest = n.clone();
    let mut k = Integer::from(1);
    let mut m = Integer::from(1);
    let mut p = Integer::from(2);
    while Integer::from(&p * &p) * &p <= rest {
        let mut e = 0u32;
        while rest.is_divisible(&p) {
            rest /= &p;
            e += 1;
        }
        for _ in 0..e / 2 {
            k *= &p;
        }
        if e % 2 == 1 {
            m *= &p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest.is_perfect_square() {
        k *= rest.sqrt();
    } else {
        m *= rest;
    }
    (k, m)
}

/// `x + y*sqrt(d)` with rational `x`, `y` and squarefree `d >= 1`.
///
/// When `y = 0` the radicand is normalised to 1, so structural equality is
/// numeric equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadElem {
    x: Rational,
    y: Rational,
    d: Integer,
}

impl QuadElem {
    /// Builds `x + y*sqrt(d)` for any `d >= 0`, extracting square factors.
    pub fn new(x: impl Into<Rational>, y: impl Into<Rational>, d: impl Into<Integer>) -> Self {
        let x = x.into();
        let y = y.into();
        let d = d.into();
        assert!(d >= 0, "negative radicand");
        if d == 0 {
            return Self::from_rational(x);
        }
        let (k, m) = squarefree_decompose(&d);
        let y = y * k;
        if m == 1 {
            Self::from_rational(x + y)
        } else {
            Self::raw(x, y, m)
        }
    }

    /// `x + y*sqrt(d)` where `d` is already known to be squarefree.
    fn raw(x: Rational, y: Rational, d: Integer) -> Self {
        if y == 0 {
            Self::from_rational(x)
        } else {
            Self { x, y, d }
        }
    }

    pub fn from_rational(x: impl Into<Rational>) -> Self {
        Self {
            x: x.into(),
            y: Rational::new(),
            d: Integer::from(1),
        }
    }

    pub fn from_i64(n: i64) -> Self {
        Self::from_rational(n)
    }

    /// `sqrt(n)` for `n >= 0`.
    pub fn sqrt_of(n: impl Into<Integer>) -> Self {
        Self::new(0, 1, n)
    }

    pub fn zero() -> Self {
        Self::from_i64(0)
    }

    pub fn one() -> Self {
        Self::from_i64(1)
    }

    pub fn x(&self) -> &Rational {
        &self.x
    }

    pub fn y(&self) -> &Rational {
        &self.y
    }

    pub fn radicand(&self) -> &Integer {
        &self.d
    }

    pub fn is_rational(&self) -> bool {
        self.y == 0
    }

    pub fn is_zero(&self) -> bool {
        self.x == 0 && self.y == 0
    }

    /// The rational value, if the element is rational.
    pub fn as_rational(&self) -> Option<&Rational> {
        self.is_rational().then_some(&self.x)
    }

    pub fn conjugate(&self) -> Self {
        Self::raw(self.x.clone(), Rational::from(-&self.y), self.d.clone())
    }

    /// `x^2 - d y^2`.
    pub fn norm(&self) -> Rational {
        Rational::from(&self.x * &self.x) - Rational::from(&self.y * &self.y) * &self.d
    }

    /// `2x`.
    pub fn trace(&self) -> Rational {
        Rational::from(&self.x * 2u32)
    }

    fn common_radicand(&self, other: &Self) -> Integer {
        match (self.is_rational(), other.is_rational()) {
            (true, _) => other.d.clone(),
            (_, true) => self.d.clone(),
            _ => {
                assert_eq!(self.d, other.d, "elements of different quadratic fields");
                self.d.clone()
            }
        }
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Domain("inverse of zero".into()));
        }
        let n = self.norm();
        let c = self.conjugate();
        Ok(Self::raw(
            Rational::from(&c.x / &n),
            Rational::from(&c.y / &n),
            c.d,
        ))
    }

    /// Exact integer power; negative exponents need a nonzero element.
    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = Self::one();
        let mut b = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &b;
            }
            n >>= 1;
            if n > 0 {
                b = &b * &b;
            }
        }
        Ok(acc)
    }

    /// Exact sign.
    pub fn signum(&self) -> Ordering {
        let sx = self.x.cmp0();
        let sy = self.y.cmp0();
        if sy == Ordering::Equal {
            return sx;
        }
        if sx == Ordering::Equal || sx == sy {
            return sy;
        }
        // opposite signs: compare x^2 with d y^2
        let x2 = Rational::from(&self.x * &self.x);
        let dy2 = Rational::from(&self.y * &self.y) * &self.d;
        match x2.cmp(&dy2) {
            Ordering::Greater => sx,
            Ordering::Less => sy,
            Ordering::Equal => Ordering::Equal,
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            -self
        } else {
            self.clone()
        }
    }

    /// Compares absolute values exactly.
    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        (self.abs() - other.abs()).signum()
    }

    /// Evaluates `x + y*sqrt(d)` at `bits` bits of working precision.
    ///
    /// The error radius is at most `2^(2-bits) * (1 + |x| + |y| sqrt d)`.
    /// Use [`to_real_relative`](Self::to_real_relative) when the two terms
    /// nearly cancel.
    pub fn to_real(&self, bits: u32) -> HighPrecReal {
        let bits = bits.max(16);
        let x = HighPrecReal::from_rational(&self.x, bits);
        if self.is_rational() {
            return x;
        }
        let root = HighPrecReal::from_integer(&self.d, bits)
            .sqrt()
            .expect("radicand is positive");
        let y = HighPrecReal::from_rational(&self.y, bits);
        &x + &(&y * &root)
    }

    /// Evaluates with relative error below `2^-bits`, raising the working
    /// precision as far as cancellation requires. Fails on zero.
    pub fn to_real_relative(&self, bits: u32) -> Result<HighPrecReal> {
        if self.is_zero() {
            return Err(Error::Domain("relative evaluation of zero".into()));
        }
        let size = self.x.numer().significant_bits()
            + self.x.denom().significant_bits()
            + self.y.numer().significant_bits()
            + self.y.denom().significant_bits();
        let mut prec = bits + 16;
        loop {
            let v = self.to_real(prec);
            if !v.contains_zero() {
                let mut tol = v.abs().lo().clone();
                tol >>= bits;
                if v.width() <= tol {
                    return Ok(v);
                }
            }
            if prec > 4 * (size + bits) + 4096 {
                return Err(Error::Internal("relative evaluation did not converge".into()));
            }
            prec *= 2;
        }
    }

    /// Primitive integer minimal polynomial, leading coefficient first and positive.
    pub fn minimal_polynomial(&self) -> Vec<Integer> {
        let coeffs: Vec<Rational> = if self.is_rational() {
            vec![Rational::from(1), Rational::from(-&self.x)]
        } else {
            vec![Rational::from(1), -self.trace(), self.norm()]
        };
        let mut lcm = Integer::from(1);
        for c in &coeffs {
            lcm.lcm_mut(c.denom());
        }
        let mut ints: Vec<Integer> = coeffs
            .iter()
            .map(|c| (Rational::from(c * &lcm)).numer().clone())
            .collect();
        let mut g = Integer::new();
        for c in &ints {
            g.gcd_mut(c);
        }
        for c in ints.iter_mut() {
            *c /= &g;
        }
        if ints[0] < 0 {
            for c in ints.iter_mut() {
                *c = Integer::from(-&*c);
            }
        }
        ints
    }
}

/// Absolute logarithmic height, certified.
pub fn log_height(e: &QuadElem, bits: u32) -> Result<HighPrecReal> {
    if e.is_zero() {
        return Err(Error::Domain("height of zero is undefined".into()));
    }
    let bits = bits.max(64);
    if let Some(r) = e.as_rational() {
        let m = Integer::from(r.numer().abs_ref()).max(r.denom().clone());
        return HighPrecReal::from_integer(&m, bits).ln();
    }
    let poly = e.minimal_polynomial();
    let lead = HighPrecReal::from_integer(&poly[0], bits).ln()?;
    let v1 = e.to_real_relative(bits)?.abs().log_plus()?;
    let v2 = e.conjugate().to_real_relative(bits)?.abs().log_plus()?;
    Ok((lead + v1 + v2).div_u32(2))
}

impl fmt::Display for QuadElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            return write!(f, "{}", self.x);
        }
        if self.x == 0 {
            write!(f, "{}*sqrt({})", self.y, self.d)
        } else if self.y < 0 {
            write!(f, "{} - {}*sqrt({})", self.x, Rational::from(-&self.y), self.d)
        } else {
            write!(f, "{} + {}*sqrt({})", self.x, self.y, self.d)
        }
    }
}

impl Serialize for QuadElem {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'a> Add<&'a QuadElem> for &'a QuadElem {
    type Output = QuadElem;
    fn add(self, rhs: &'a QuadElem) -> QuadElem {
        let d = self.common_radicand(rhs);
        QuadElem::raw(
            Rational::from(&self.x + &rhs.x),
            Rational::from(&self.y + &rhs.y),
            d,
        )
    }
}

impl<'a> Sub<&'a QuadElem> for &'a QuadElem {
    type Output = QuadElem;
    fn sub(self, rhs: &'a QuadElem) -> QuadElem {
        let d = self.common_radicand(rhs);
        QuadElem::raw(
            Rational::from(&self.x - &rhs.x),
            Rational::from(&self.y - &rhs.y),
            d,
        )
    }
}

impl<'a> Mul<&'a QuadElem> for &'a QuadElem {
    type Output = QuadElem;
    fn mul(self, rhs: &'a QuadElem) -> QuadElem {
        let d = self.common_radicand(rhs);
        let x = Rational::from(&self.x * &rhs.x) + Rational::from(&self.y * &rhs.y) * &d;
        let y = Rational::from(&self.x * &rhs.y) + Rational::from(&self.y * &rhs.x);
        QuadElem::raw(x, y, d)
    }
}

/// Exact division; panics on a zero divisor like integer division does.
#[allow(clippy::suspicious_arithmetic_impl)]
impl<'a> Div<&'a QuadElem> for &'a QuadElem {
    type Output = QuadElem;
    fn div(self, rhs: &'a QuadElem) -> QuadElem {
        self * &rhs.inv().expect("division by zero QuadElem")
    }
}

impl Neg for &QuadElem {
    type Output = QuadElem;
    fn neg(self) -> QuadElem {
        QuadElem::raw(
            Rational::from(-&self.x),
            Rational::from(-&self.y),
            self.d.clone(),
        )
    }
}

impl Neg for QuadElem {
    type Output = QuadElem;
    fn neg(self) -> QuadElem {
        -&self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<QuadElem> for QuadElem {
            type Output = QuadElem;
            fn $m(self, rhs: QuadElem) -> QuadElem {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a QuadElem> for QuadElem {
            type Output = QuadElem;
            fn $m(self, rhs: &'a QuadElem) -> QuadElem {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);
