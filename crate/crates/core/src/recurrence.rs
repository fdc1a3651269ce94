//! Binary recurrences `u_n = P u_{n-1} + Q u_{n-2}`: terms, the Binet
//! decomposition and the growth constants used by the bounds.

use std::cmp::Ordering;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::qfield::QuadElem;
use crate::real::HighPrecReal;

/// The defining integers of a recurrence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecurrenceParams {
    #[serde(rename = "P")]
    pub p: i64,
    #[serde(rename = "Q")]
    pub q: i64,
    pub u0: i64,
    pub u1: i64,
}

impl RecurrenceParams {
    pub const BALANCING: Self = Self {
        p: 6,
        q: -1,
        u0: 0,
        u1: 1,
    };

    pub const FIBONACCI: Self = Self {
        p: 1,
        q: 1,
        u0: 0,
        u1: 1,
    };

    pub fn new(p: i64, q: i64, u0: i64, u1: i64) -> Self {
        Self { p, q, u0, u1 }
    }

    pub fn discriminant(&self) -> Integer {
        Integer::from(self.p) * self.p + Integer::from(self.q) * 4
    }
}

/// A failed non-degeneracy condition.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("|u0| + |u1| = 0: the sequence is identically zero")]
    ZeroSequence,
    #[error("Q = 0: the recurrence has order one")]
    ZeroQ,
    #[error("discriminant P^2 + 4Q = {0} is not positive")]
    NonPositiveDiscriminant(Integer),
    #[error("degenerate: alpha/beta = -1 is a root of unity (P = 0)")]
    RootOfUnity,
    #[error("a = u1 - u0*beta = 0")]
    AZero,
    #[error("b = u1 - u0*alpha = 0")]
    BZero,
}

/// The conditions that were checked, in order, with the reasoning used.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NondegeneracyCertificate {
    pub checks: Vec<String>,
}

/// Verifies `PQ != 0`, `|u0|+|u1| > 0`, `Delta > 0`, `a b != 0` and that
/// `alpha/beta` is not a root of unity.
pub fn check_nondegenerate(params: &RecurrenceParams) -> std::result::Result<NondegeneracyCertificate, Violation> {
    let mut checks = Vec::new();
    if params.u0 == 0 && params.u1 == 0 {
        return Err(Violation::ZeroSequence);
    }
    checks.push("|u0| + |u1| > 0".to_string());
    if params.q == 0 {
        return Err(Violation::ZeroQ);
    }
    checks.push("Q != 0, so alpha*beta = -Q != 0".to_string());
    let delta = params.discriminant();
    if delta <= 0 {
        return Err(Violation::NonPositiveDiscriminant(delta));
    }
    checks.push(format!("Delta = {delta} > 0, so alpha != beta are real"));
    if params.p == 0 {
        return Err(Violation::RootOfUnity);
    }
    checks.push(
        "P != 0: for real alpha != beta the only possible roots of unity alpha/beta are +1 and -1, \
         and alpha + beta = P != 0 rules out -1"
            .to_string(),
    );
    let (alpha, beta) = roots(params, &delta);
    let a = QuadElem::from_i64(params.u1) - QuadElem::from_i64(params.u0) * &beta;
    let b = QuadElem::from_i64(params.u1) - QuadElem::from_i64(params.u0) * &alpha;
    if a.is_zero() {
        return Err(Violation::AZero);
    }
    if b.is_zero() {
        return Err(Violation::BZero);
    }
    checks.push("a != 0 and b != 0 (exact quadratic arithmetic)".to_string());
    Ok(NondegeneracyCertificate { checks })
}

/// `(alpha, beta)` with `|alpha| > |beta|`.
fn roots(params: &RecurrenceParams, delta: &Integer) -> (QuadElem, QuadElem) {
    let half = Rational::from((1, 2));
    let plus = QuadElem::new(
        Rational::from(params.p) * &half,
        half.clone(),
        delta.clone(),
    );
    let minus = QuadElem::new(Rational::from(params.p) * &half, -half, delta.clone());
    if params.p >= 0 {
        (plus, minus)
    } else {
        (minus, plus)
    }
}

/// A validated non-degenerate recurrence with its Binet data
/// `u_n = (a alpha^n - b beta^n) / (alpha - beta)`.
#[derive(Clone, Debug, Serialize)]
pub struct RecurrenceSpec {
    pub params: RecurrenceParams,
    #[serde(serialize_with = "crate::decimal::serialize_integer")]
    pub delta: Integer,
    pub alpha: QuadElem,
    pub beta: QuadElem,
    pub a: QuadElem,
    pub b: QuadElem,
    /// `alpha - beta`; its absolute value is `sqrt(Delta)`.
    pub root_gap: QuadElem,
    pub certificate: NondegeneracyCertificate,
}

impl RecurrenceSpec {
    pub fn new(params: RecurrenceParams) -> std::result::Result<Self, Violation> {
        let certificate = check_nondegenerate(&params)?;
        let delta = params.discriminant();
        let (alpha, beta) = roots(&params, &delta);
        let a = QuadElem::from_i64(params.u1) - QuadElem::from_i64(params.u0) * &beta;
        let b = QuadElem::from_i64(params.u1) - QuadElem::from_i64(params.u0) * &alpha;
        let root_gap = &alpha - &beta;
        Ok(Self {
            params,
            delta,
            alpha,
            beta,
            a,
            b,
            root_gap,
            certificate,
        })
    }

    pub fn balancing() -> Self {
        Self::new(RecurrenceParams::BALANCING).expect("balancing numbers are non-degenerate")
    }

    /// True when `Delta` is a perfect square, i.e. the roots are integers.
    pub fn has_rational_roots(&self) -> bool {
        self.alpha.is_rational()
    }

    /// `sqrt(Delta)` as an exact element.
    pub fn sqrt_delta(&self) -> QuadElem {
        self.root_gap.abs()
    }

    /// `u_n` by iterating the recurrence.
    pub fn term(&self, n: u64) -> Integer {
        let (mut prev, mut cur) = (Integer::from(self.params.u0), Integer::from(self.params.u1));
        if n == 0 {
            return prev;
        }
        for _ in 1..n {
            let next = Integer::from(&cur * self.params.p) + Integer::from(&prev * self.params.q);
            prev = std::mem::replace(&mut cur, next);
        }
        cur
    }

    /// `u_0, ..., u_{n_max}`.
    pub fn terms(&self, n_max: u64) -> Vec<Integer> {
        let mut out = Vec::with_capacity(n_max as usize + 1);
        out.push(Integer::from(self.params.u0));
        if n_max >= 1 {
            out.push(Integer::from(self.params.u1));
        }
        for n in 2..=n_max as usize {
            let next = Integer::from(&out[n - 1] * self.params.p)
                + Integer::from(&out[n - 2] * self.params.q);
            out.push(next);
        }
        out
    }

    /// `u_n` from the Binet form in exact arithmetic.
    pub fn binet_term(&self, n: u64) -> Result<Integer> {
        let n = i64::try_from(n).map_err(|_| Error::InvalidInput("index too large".into()))?;
        let num = &self.a * &self.alpha.pow(n)? - &self.b * &self.beta.pow(n)?;
        let v = &num / &self.root_gap;
        match v.as_rational() {
            Some(r) if r.denom() == &1 => Ok(r.numer().clone()),
            _ => Err(Error::Internal(format!(
                "Binet form at n = {n} did not reduce to an integer: {v}"
            ))),
        }
    }

    pub fn abs_alpha(&self, bits: u32) -> HighPrecReal {
        self.alpha.to_real(bits).abs()
    }

    pub fn abs_beta(&self, bits: u32) -> HighPrecReal {
        self.beta
            .to_real_relative(bits)
            .expect("beta != 0 since Q != 0")
            .abs()
    }

    /// Exact test of `|beta| <= 1`.
    pub fn beta_in_unit_disc(&self) -> bool {
        self.beta.abs().cmp_abs(&QuadElem::one()) != Ordering::Greater
    }

    /// True if `u_n >= 1` for every `n >= n_min`.
    ///
    /// Sufficient condition checked: `u_{n_min} >= 1`, `u_{n_min+1} >= u_{n_min}`,
    /// `P >= 1` and `P + Q >= 1`; then `u_{n+1} - u_n = (P-1) u_n + Q u_{n-1}
    /// >= (P+Q-1) u_{n-1} + (P-1)(u_n - u_{n-1}) >= 0` by induction.
    pub fn eventually_positive_from(&self, n_min: u64) -> bool {
        let u = self.terms(n_min + 1);
        let (x, y) = (&u[n_min as usize], &u[n_min as usize + 1]);
        *x >= 1 && y >= x && self.params.p >= 1 && self.params.p + self.params.q >= 1
    }
}

/// Constants with `|u_n| <= d0 |alpha|^n` and `d0_int |alpha|^n < p^(d1 n)` for `n >= 1`.
#[derive(Clone, Debug, Serialize)]
pub struct DominanceConstants {
    #[serde(serialize_with = "crate::decimal::serialize_real_upper")]
    pub d0: HighPrecReal,
    #[serde(serialize_with = "crate::decimal::serialize_integer")]
    pub d0_int: Integer,
    pub d1: u32,
}

/// `d0 = (|a|+|b|)/sqrt(Delta)`, `d0_int = max(1, ceil d0)` and the smallest
/// `d1 >= 1` with `d0_int |alpha| < p^d1`.
pub fn dominance_constants(spec: &RecurrenceSpec, p: u64) -> Result<DominanceConstants> {
    if p < 2 {
        return Err(Error::InvalidInput(format!("p = {p} is not a prime")));
    }
    let bits = 192;
    let num = (spec.a.abs() + spec.b.abs()).to_real(bits);
    let d0 = num.div(&spec.sqrt_delta().to_real(bits))?;
    let d0_int = d0.ceil_hi().max(Integer::from(1));
    let scaled = spec.alpha.abs() * QuadElem::from_rational(d0_int.clone());
    let mut d1 = 1u32;
    // exact comparison; |alpha| is irrational or an integer, never a tie that matters
    while (&scaled - &QuadElem::from_rational(Integer::from(p).pow(d1))).signum() != Ordering::Less {
        d1 += 1;
    }
    Ok(DominanceConstants { d0, d0_int, d1 })
}

/// Smallest `e >= 0` with `t d0 |alpha| <= p^(d1 + e)`, so that any solution has
/// `z <= d1 n1 + e` (the `t` terms are bounded by `t d0 |alpha|^n1`).
pub fn z_slack(spec: &RecurrenceSpec, dom: &DominanceConstants, p: u64, t: u32) -> u32 {
    let bits = 192;
    let lhs = &dom.d0.mul_integer(&Integer::from(t)) * &spec.abs_alpha(bits);
    let mut e = 0u32;
    loop {
        let rhs = HighPrecReal::from_integer(&Integer::from(p).pow(dom.d1 + e), bits);
        if lhs.certainly_le(&rhs) {
            return e;
        }
        e += 1;
    }
}

/// `max_i log((|a|(t-i) + (t-1)|b|)/|b|) / log(|beta|/|alpha|)` over `i = 1..=t`.
///
/// With `|beta| < |alpha|` the denominator is negative and every numerator is
/// non-negative, so the value is never positive.
pub fn ell_bound(spec: &RecurrenceSpec, t: u32) -> Result<HighPrecReal> {
    let bits = 192;
    let abs_a = spec.a.abs().to_real(bits);
    let abs_b = spec.b.abs().to_real(bits);
    if abs_b.contains_zero() {
        return Err(Error::Domain("ell bound needs b != 0".into()));
    }
    let denom = spec.abs_beta(bits).div(&spec.abs_alpha(bits))?.ln()?;
    let mut best: Option<HighPrecReal> = None;
    for i in 1..=t {
        let arg = &abs_a.mul_integer(&Integer::from(t - i))
            + &abs_b.mul_integer(&Integer::from(t - 1));
        let li = arg.div(&abs_b)?.ln()?.div(&denom)?;
        best = Some(match best {
            Some(b) => b.max(&li),
            None => li,
        });
    }
    best.ok_or_else(|| Error::InvalidInput("t must be at least 1".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balancing_terms() {
        let s = RecurrenceSpec::balancing();
        assert_eq!(s.term(1), 1);
        assert_eq!(s.term(3), 35);
        assert_eq!(s.term(10), 7_997_214);
        assert_eq!(s.binet_term(0).unwrap(), 0);
        assert_eq!(s.binet_term(2).unwrap(), 6);
        assert_eq!(s.binet_term(10).unwrap(), 7_997_214);
        assert_eq!(s.terms(10)[10], 7_997_214);
        assert_eq!(s.a, QuadElem::one());
        assert_eq!(s.b, QuadElem::one());
        assert_eq!(s.alpha, QuadElem::new(3, 2, 2));
    }

    #[test]
    fn negative_p_puts_the_dominant_root_first() {
        let s = RecurrenceSpec::new(RecurrenceParams::new(-3, 1, 0, 1)).unwrap();
        assert_eq!(s.alpha.signum(), Ordering::Less);
        for n in 0..30 {
            assert_eq!(s.term(n), s.binet_term(n).unwrap());
        }
    }

    #[test]
    fn degeneracy_violations() {
        let v = check_nondegenerate(&RecurrenceParams::new(0, 1, 0, 1)).unwrap_err();
        assert_eq!(v, Violation::RootOfUnity);
        assert!(v.to_string().contains("root of unity"));
        let v = check_nondegenerate(&RecurrenceParams::new(3, -2, 1, 2)).unwrap_err();
        assert_eq!(v, Violation::BZero);
        assert_eq!(v.to_string(), "b = u1 - u0*alpha = 0");
        assert_eq!(
            check_nondegenerate(&RecurrenceParams::new(1, 0, 1, 1)).unwrap_err(),
            Violation::ZeroQ
        );
        assert!(matches!(
            check_nondegenerate(&RecurrenceParams::new(1, -1, 0, 1)).unwrap_err(),
            Violation::NonPositiveDiscriminant(_)
        ));
        assert_eq!(
            check_nondegenerate(&RecurrenceParams::new(1, 1, 0, 0)).unwrap_err(),
            Violation::ZeroSequence
        );
    }

    #[test]
    fn balancing_dominance() {
        let s = RecurrenceSpec::balancing();
        let d = dominance_constants(&s, 3).unwrap();
        assert_eq!(d.d0_int, 1);
        assert_eq!(d.d1, 2);
        assert!((d.d0.to_f64() - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        assert_eq!(z_slack(&s, &d, 3, 3), 0);
    }

    #[test]
    fn d1_is_one_for_a_large_prime() {
        let s = RecurrenceSpec::balancing();
        assert_eq!(dominance_constants(&s, 7).unwrap().d1, 1);
    }

    #[test]
    fn d1_for_alpha_ten() {
        // x^2 - 10x + ... has no integer params with alpha exactly 10 and
        // irrational beta, so use P = 10, Q = -1 where alpha ~ 9.9 and d0 < 1.
        let s = RecurrenceSpec::new(RecurrenceParams::new(10, -1, 0, 1)).unwrap();
        let d = dominance_constants(&s, 2).unwrap();
        assert_eq!(d.d0_int, 1);
        assert_eq!(d.d1, 4);
    }

    #[test]
    fn ell_values() {
        let s = RecurrenceSpec::balancing();
        let l = ell_bound(&s, 3).unwrap();
        assert!(l.is_negative());
        let l2 = ell_bound(&s, 2).unwrap();
        assert!(l2.contains_zero());
        assert!(l2.width() < 1e-40);
    }

    #[test]
    fn positivity_check() {
        let s = RecurrenceSpec::balancing();
        assert!(s.eventually_positive_from(1));
        assert!(!s.eventually_positive_from(0));
        let f = RecurrenceSpec::new(RecurrenceParams::FIBONACCI).unwrap();
        assert!(f.eventually_positive_from(1));
        assert!(s.beta_in_unit_disc());
    }
}
