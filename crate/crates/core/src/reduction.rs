//! Baker–Davenport reduction in the form of Dujella and Pethő: certified
//! continued fractions, the `epsilon = ||mu q|| - M ||gamma q||` criterion and
//! the stage-by-stage shrinking of the index gaps.

use std::cmp::Ordering;
use std::sync::OnceLock;

use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::bounds::BoundCertificate;
use crate::decimal::Decimal;
use crate::error::{Error, Result};
use crate::qfield::QuadElem;
use crate::real::HighPrecReal;
use crate::recurrence::RecurrenceSpec;

pub const DEFAULT_START_BITS: u32 = 256;
pub const DEFAULT_CAP_BITS: u32 = 16384;
pub const DEFAULT_ATTEMPTS: usize = 25;

/// Partial quotients and convergents of a real known only to an interval.
#[derive(Clone, Debug, Serialize)]
pub struct CfExpansion {
    pub precision_bits: u32,
    #[serde(serialize_with = "crate::decimal::serialize_integers")]
    pub partial_quotients: Vec<Integer>,
    /// `(p_k, q_k)` for every certified `k`.
    #[serde(serialize_with = "crate::decimal::serialize_integer_pairs")]
    pub convergents: Vec<(Integer, Integer)>,
    /// Number of certified quotients.
    pub certified_upto: usize,
    /// True when the expansion stopped because the interval was too wide.
    pub needs_more_precision: bool,
}

impl CfExpansion {
    pub fn quotients_u64(&self) -> Vec<u64> {
        self.partial_quotients
            .iter()
            .map(|a| a.to_u64().unwrap_or(u64::MAX))
            .collect()
    }
}

/// Expands `gamma` while every quotient is the same for both endpoints of
/// its interval, up to `k_max` quotients.
///
/// Errors with [`Error::RationalGamma`] if the interval pins down a rational
/// number: either it is a single rational point or it contains one of the
/// convergents whose denominator is below `2^(prec/4)`.
pub fn cf_expand(gamma: &HighPrecReal, k_max: usize) -> Result<CfExpansion> {
    let (mut lo, mut hi) = gamma.rational_bounds();
    let prec = gamma.precision_bits();
    let mut quotients = Vec::new();
    let mut convergents: Vec<(Integer, Integer)> = Vec::new();
    let (mut p1, mut p2) = (Integer::from(1), Integer::from(0));
    let (mut q1, mut q2) = (Integer::from(0), Integer::from(1));
    let mut needs_more = false;
    // a rational inside the interval whose expansion ends here
    let mut candidate: Option<(Integer, Integer)> = None;
    while quotients.len() < k_max {
        let a_lo = lo.clone().floor();
        let a_hi = hi.clone().floor();
        if a_lo != a_hi {
            let a = a_hi.numer();
            candidate = Some((Integer::from(a * &p1) + &p2, Integer::from(a * &q1) + &q2));
            needs_more = true;
            break;
        }
        let a = a_lo.numer().clone();
        let p = Integer::from(&a * &p1) + &p2;
        let q = Integer::from(&a * &q1) + &q2;
        p2 = std::mem::replace(&mut p1, p.clone());
        q2 = std::mem::replace(&mut q1, q.clone());
        quotients.push(a.clone());
        convergents.push((p, q));
        let f_lo = lo - &a_lo;
        let f_hi = hi - &a_lo;
        match (f_lo == 0, f_hi == 0) {
            (true, true) => return Err(Error::RationalGamma),
            (true, _) | (_, true) => {
                candidate = convergents.last().cloned();
                needs_more = true;
                break;
            }
            _ => {}
        }
        lo = f_hi.recip();
        hi = f_lo.recip();
    }
    if let Some((p, q)) = candidate {
        let small = q.significant_bits() < prec / 4;
        if small && gamma.contains_rational(&Rational::from((p, q))) {
            return Err(Error::RationalGamma);
        }
    }
    Ok(CfExpansion {
        precision_bits: prec,
        certified_upto: quotients.len(),
        partial_quotients: quotients,
        convergents,
        needs_more_precision: needs_more,
    })
}

/// Smallest certified `k` with `q_k > 6M`.
pub fn find_denominator(cfe: &CfExpansion, m: &Integer) -> Option<(usize, Integer)> {
    let six_m = Integer::from(m * 6u32);
    cfe.convergents
        .iter()
        .position(|(_, q)| *q > six_m)
        .map(|k| (k, cfe.convergents[k].1.clone()))
}

/// A successful reduction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DpOutcome {
    /// Index of the convergent used.
    pub k: usize,
    #[serde(serialize_with = "crate::decimal::serialize_integer")]
    pub q: Integer,
    /// Lower bound for `epsilon`.
    pub epsilon: Decimal,
    /// Largest `m` the criterion does not exclude.
    pub m_bound: u64,
    pub precision_bits: u32,
    /// Convergents tried, including the successful one.
    pub attempts: usize,
    /// Set when `mu = j + k gamma`; then `epsilon` is `||q_{k-1} gamma||`.
    pub relation: Option<MuRelation>,
}

/// `|gamma_3| = |alpha|^alpha_power p^p_power`, i.e. `mu = alpha_power + p_power gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MuRelation {
    pub alpha_power: i64,
    pub p_power: i64,
}

enum Attempt {
    Done(DpOutcome),
    /// Certified `epsilon <= 0` at every convergent up to the limit.
    Exhausted,
    /// Ran out of certified quotients or could not decide a sign; resume at `k`.
    NeedPrecision { k: usize, tried: usize },
}

#[allow(clippy::too_many_arguments)]
fn attempt(
    cf: &CfExpansion,
    gamma: &HighPrecReal,
    mu: &HighPrecReal,
    a: &HighPrecReal,
    log_b: &HighPrecReal,
    m: &Integer,
    start_k: usize,
    tried: usize,
    max_attempts: usize,
) -> Result<Attempt> {
    let mut k = start_k;
    let mut tried = tried;
    while tried < max_attempts {
        let Some((_, q)) = cf.convergents.get(k) else {
            return Ok(Attempt::NeedPrecision { k, tried });
        };
        let gq = gamma.mul_integer(q);
        let mq = mu.mul_integer(q);
        let (Some(dg), Some(dm)) = (gq.dist_to_nearest_integer(), mq.dist_to_nearest_integer()) else {
            return Ok(Attempt::NeedPrecision { k, tried });
        };
        let eps = &dm - &dg.mul_integer(m);
        tried += 1;
        if eps.is_positive() {
            // m >= log(A q / eps) / log B is excluded
            let t = a.mul_integer(q).div(&eps)?.ln()?.div(log_b)?;
            let m_bound = t.floor_hi().max(Integer::new());
            let m_bound = m_bound
                .to_u64()
                .ok_or_else(|| Error::Internal("reduced bound overflow".into()))?;
            return Ok(Attempt::Done(DpOutcome {
                k,
                q: q.clone(),
                epsilon: Decimal::round_down(&eps.rational_bounds().0, 4),
                m_bound,
                precision_bits: gamma.precision_bits(),
                attempts: tried,
                relation: None,
            }));
        }
        if *eps.hi() > 0 {
            return Ok(Attempt::NeedPrecision { k, tried: tried - 1 });
        }
        k += 1;
    }
    Ok(Attempt::Exhausted)
}

/// Single-precision reduction: the convergent search of
/// [`Reducer::reduce`] without the precision ladder.
pub fn dp_reduce(
    gamma: &HighPrecReal,
    mu: &HighPrecReal,
    a: &HighPrecReal,
    log_b: &HighPrecReal,
    m: &Integer,
) -> Result<DpOutcome> {
    let cf = cf_expand(gamma, usize::MAX)?;
    let (k, _) = find_denominator(&cf, m).ok_or_else(|| {
        Error::Resource(format!(
            "no certified convergent denominator above 6M at {} bits",
            gamma.precision_bits()
        ))
    })?;
    match attempt(&cf, gamma, mu, a, log_b, m, k, 0, DEFAULT_ATTEMPTS)? {
        Attempt::Done(o) => Ok(o),
        Attempt::Exhausted => Err(Error::ReductionInconclusive(format!(
            "epsilon <= 0 for {DEFAULT_ATTEMPTS} convergents"
        ))),
        Attempt::NeedPrecision { .. } => Err(Error::Resource(format!(
            "precision of {} bits is not enough to decide epsilon",
            gamma.precision_bits()
        ))),
    }
}

type RealAt<'a> = dyn Fn(u32) -> Result<HighPrecReal> + Send + Sync + 'a;

/// Reduction against one fixed `gamma` with a lazily built continued
/// fraction per precision level.
pub struct Reducer<'a> {
    gamma_at: Box<RealAt<'a>>,
    levels: Vec<u32>,
    cache: Vec<OnceLock<Result<(HighPrecReal, CfExpansion)>>>,
    pub max_attempts: usize,
}

impl<'a> Reducer<'a> {
    /// Precision doubles from `start_bits` up to `cap_bits`.
    pub fn new(gamma_at: Box<RealAt<'a>>, start_bits: u32, cap_bits: u32) -> Self {
        let mut levels = vec![start_bits.max(64)];
        while *levels.last().unwrap() < cap_bits {
            let next = (levels.last().unwrap() * 2).min(cap_bits);
            levels.push(next);
        }
        let cache = levels.iter().map(|_| OnceLock::new()).collect();
        Self {
            gamma_at,
            levels,
            cache,
            max_attempts: DEFAULT_ATTEMPTS,
        }
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    /// `gamma` and its expansion at ladder level `idx`.
    pub fn level(&self, idx: usize) -> Result<&(HighPrecReal, CfExpansion)> {
        self.cache[idx]
            .get_or_init(|| {
                let g = (self.gamma_at)(self.levels[idx])?;
                let cf = cf_expand(&g, usize::MAX)?;
                Ok((g, cf))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Expansion at the lowest level that certifies at least `k` quotients.
    pub fn expansion_with(&self, k: usize) -> Result<&CfExpansion> {
        for idx in 0..self.levels.len() {
            let (_, cf) = self.level(idx)?;
            if cf.certified_upto >= k {
                return Ok(cf);
            }
        }
        Err(Error::Resource(format!(
            "cannot certify {k} partial quotients within {} bits",
            self.levels.last().unwrap()
        )))
    }

    /// Finds a convergent with `q > 6M` and `epsilon > 0` and returns the
    /// largest `m` not excluded for `|u gamma - n + mu| < A B^-m`, `u <= M`.
    pub fn reduce(&self, mu_at: &RealAt<'_>, a: &HighPrecReal, log_b: &HighPrecReal, m: &Integer) -> Result<DpOutcome> {
        let mut resume: Option<(usize, usize)> = None;
        for idx in 0..self.levels.len() {
            let (gamma, cf) = self.level(idx)?;
            let start = match resume {
                Some(r) => r,
                None => match find_denominator(cf, m) {
                    Some((k, _)) => (k, 0),
                    None => continue,
                },
            };
            let mu = mu_at(self.levels[idx])?;
            match attempt(cf, gamma, &mu, a, log_b, m, start.0, start.1, self.max_attempts)? {
                Attempt::Done(o) => return Ok(o),
                Attempt::Exhausted => {
                    return Err(Error::ReductionInconclusive(format!(
                        "epsilon <= 0 for {} successive convergents",
                        self.max_attempts
                    )))
                }
                Attempt::NeedPrecision { k, tried } => resume = Some((k, tried)),
            }
        }
        Err(Error::Resource(format!(
            "precision cap of {} bits reached before the reduction was decided",
            self.levels.last().unwrap()
        )))
    }
}

/// Detects `|g| = |alpha|^j p^k` exactly.
///
/// If `g = r alpha^j` with `r` rational then `g / g' = (alpha/beta)^j`, which
/// fixes the candidate `j` numerically; the relation is then checked in exact
/// arithmetic.
pub fn mu_relation(spec: &RecurrenceSpec, p: u64, g: &QuadElem) -> Result<Option<MuRelation>> {
    let bits = 128;
    let ratio = (g / &g.conjugate()).to_real_relative(bits)?.abs().ln()?;
    let log_ab = (&spec.alpha / &spec.beta).to_real_relative(bits)?.abs().ln()?;
    if log_ab.contains_zero() {
        return Ok(None);
    }
    let est = ratio.div(&log_ab)?;
    let j = est.value().to_f64().round();
    if !j.is_finite() || j.abs() > 1e4 {
        return Ok(None);
    }
    let j = j as i64;
    let rest = g * &spec.alpha.pow(-j)?;
    let Some(r) = rest.as_rational() else {
        return Ok(None);
    };
    let r = Rational::from(r.abs_ref());
    let k = if let Some(e) = crate::pipeline::power_exponent(r.numer(), p).filter(|_| *r.denom() == 1) {
        e as i64
    } else if let Some(e) = crate::pipeline::power_exponent(r.denom(), p).filter(|_| *r.numer() == 1) {
        -(e as i64)
    } else {
        return Ok(None);
    };
    Ok(Some(MuRelation {
        alpha_power: j,
        p_power: k,
    }))
}

impl Reducer<'_> {
    /// The case `mu = j + k gamma`: the form is `|u' gamma - n'|` with
    /// `u' = u + k`, `|u'| <= M + |k|`. With `q_K` the first denominator above
    /// that range, every `u' != 0` has `|u' gamma - n'| >= ||q_{K-1} gamma|| = delta`,
    /// and `u' = 0` needs `n' != 0` (the form does not vanish), so
    /// `A B^-m > delta` and `m <= log(A/delta)/log B`.
    pub fn reduce_homogeneous(
        &self,
        rel: MuRelation,
        a: &HighPrecReal,
        log_b: &HighPrecReal,
        m: &Integer,
    ) -> Result<DpOutcome> {
        let range = Integer::from(m + rel.p_power.unsigned_abs());
        for idx in 0..self.levels.len() {
            let (gamma, cf) = self.level(idx)?;
            let Some(k) = cf.convergents.iter().position(|(_, q)| *q > range) else {
                continue;
            };
            if k == 0 {
                return Err(Error::Internal("empty homogeneous range".into()));
            }
            let q_prev = &cf.convergents[k - 1].1;
            let Some(delta) = gamma.mul_integer(q_prev).dist_to_nearest_integer() else {
                continue;
            };
            if !delta.is_positive() {
                return Err(Error::RationalGamma);
            }
            let t = a.div(&delta)?.ln()?.div(log_b)?;
            let m_bound = t
                .floor_hi()
                .max(Integer::new())
                .to_u64()
                .ok_or_else(|| Error::Internal("reduced bound overflow".into()))?;
            return Ok(DpOutcome {
                k,
                q: cf.convergents[k].1.clone(),
                epsilon: Decimal::round_down(&delta.rational_bounds().0, 4),
                m_bound,
                precision_bits: gamma.precision_bits(),
                attempts: 1,
                relation: Some(rel),
            });
        }
        Err(Error::Resource(format!(
            "precision cap of {} bits reached in the homogeneous reduction",
            self.levels.last().unwrap()
        )))
    }
}

/// `gamma_3 = (alpha - beta) / (a (1 + alpha^-x_2 + ... + alpha^-x_i))` for
/// concrete gaps, in exact arithmetic.
pub struct StageFunctions<'s> {
    spec: &'s RecurrenceSpec,
    inv_powers: Vec<QuadElem>,
}

impl<'s> StageFunctions<'s> {
    /// Precomputes `alpha^-x` for `x <= max_gap`.
    pub fn new(spec: &'s RecurrenceSpec, max_gap: u64) -> Result<Self> {
        let inv = spec.alpha.inv()?;
        let mut inv_powers = Vec::with_capacity(max_gap as usize + 1);
        let mut cur = QuadElem::one();
        for _ in 0..=max_gap {
            inv_powers.push(cur.clone());
            cur = &cur * &inv;
        }
        Ok(Self { spec, inv_powers })
    }

    fn inv_power(&self, x: u64) -> Result<QuadElem> {
        match self.inv_powers.get(x as usize) {
            Some(v) => Ok(v.clone()),
            None => self.spec.alpha.pow(-(x as i64)),
        }
    }

    pub fn gamma3(&self, gaps: &[u64]) -> Result<QuadElem> {
        let mut s = QuadElem::one();
        for &x in gaps {
            s = s + self.inv_power(x)?;
        }
        if s.is_zero() {
            return Err(Error::Domain(format!(
                "the dominant part vanishes for gaps {gaps:?}"
            )));
        }
        Ok(&self.spec.root_gap / &(&self.spec.a * &s))
    }

    /// `phi(x) = gamma_3` for one gap.
    pub fn phi(&self, x: u64) -> Result<QuadElem> {
        self.gamma3(&[x])
    }

    /// `psi(x1, x2) = gamma_3` for two gaps.
    pub fn psi(&self, x1: u64, x2: u64) -> Result<QuadElem> {
        self.gamma3(&[x1, x2])
    }
}

/// `log p / log |alpha|`.
pub fn gamma_real(spec: &RecurrenceSpec, p: u64, bits: u32) -> Result<HighPrecReal> {
    let lp = HighPrecReal::from_integer(&Integer::from(p), bits).ln()?;
    lp.div(&spec.abs_alpha(bits).ln()?)
}

/// `log |g| / log |alpha|`.
pub fn mu_real(spec: &RecurrenceSpec, g: &QuadElem, bits: u32) -> Result<HighPrecReal> {
    let lg = g.to_real_relative(bits)?.abs().ln()?;
    lg.div(&spec.abs_alpha(bits).ln()?)
}

/// How the sign of a stage's linear form is controlled.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignCertificate {
    pub stage: u32,
    pub one_sided: bool,
    pub reason: String,
}

/// Decides whether `Lambda_i > 0` can be proved for stage `i` of `t`.
///
/// One-sided when `alpha > 0`, `a/(alpha - beta) > 0`, `|beta| <= 1`, `i < t`,
/// `u_n >= 1` for `n >= n_min` and `i|b|/sqrt(Delta) < t - i`: then
/// `p^z - (a/s) sum_{j<=i} alpha^{n_j} = -(b/s) sum_{j<=i} beta^{n_j} + sum_{j>i} u_{n_j}
/// >= t - i - i|b|/sqrt(Delta) > 0`. Otherwise `|Lambda| < 2 |e^Lambda - 1|`
/// once the right side is below 1/2, which doubles `A`.
pub fn sign_analysis(spec: &RecurrenceSpec, t: u32, i: u32, n_min: u64) -> SignCertificate {
    let two_sided = |reason: &str| SignCertificate {
        stage: i,
        one_sided: false,
        reason: format!("{reason}; two-sided with A doubled"),
    };
    if i >= t {
        return two_sided("final stage: no dominated terms left");
    }
    if spec.alpha.signum() != Ordering::Greater {
        return two_sided("alpha < 0");
    }
    if (&spec.a * &spec.root_gap).signum() != Ordering::Greater {
        return two_sided("a/(alpha - beta) < 0");
    }
    if !spec.beta_in_unit_disc() {
        return two_sided("|beta| > 1");
    }
    if !spec.eventually_positive_from(n_min) {
        return two_sided("u_n >= 1 not certified for n >= n_min");
    }
    let bits = 128;
    let lhs = spec
        .b
        .abs()
        .to_real(bits)
        .mul_integer(&Integer::from(i))
        .div(&spec.sqrt_delta().to_real(bits))
        .expect("Delta > 0");
    let rhs = HighPrecReal::from_integer(&Integer::from(t - i), bits);
    if !lhs.certainly_lt(&rhs) {
        return two_sided("i|b|/sqrt(Delta) >= t - i");
    }
    SignCertificate {
        stage: i,
        one_sided: true,
        reason: format!(
            "Lambda_{i} > 0: the {} dominated terms are at least 1 each and outweigh i|b|/sqrt(Delta)",
            t - i
        ),
    }
}

/// Reduction of one gap tuple.
#[derive(Clone, Debug, Serialize)]
pub struct GapRecord {
    pub gaps: Vec<u64>,
    pub outcome: DpOutcome,
    /// `m_bound`, raised to the two-sided validity threshold when needed.
    pub bound: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReduction {
    pub stage: u32,
    pub sign: SignCertificate,
    /// `A = c_i / log|alpha|`, doubled when two-sided.
    pub a: Decimal,
    /// The two-sided argument needs `c_i B^-m < 1/2`; smaller `m` stay unexcluded.
    pub two_sided_floor: u64,
    pub records: Vec<GapRecord>,
    /// Upper bound on `n1 - n_{i+1}` (or on `n1` for the final stage).
    pub bound: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionPass {
    #[serde(serialize_with = "crate::decimal::serialize_integer")]
    pub m: Integer,
    pub stages: Vec<StageReduction>,
}

impl ReductionPass {
    /// Bounds on `n1 - n2, ..., n1 - nt`, then on `n1`.
    pub fn bounds(&self) -> Vec<u64> {
        self.stages.iter().map(|s| s.bound).collect()
    }

    pub fn n1_bound(&self) -> u64 {
        self.stages.last().map(|s| s.bound).unwrap_or(0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionTrace {
    pub t: u32,
    pub n_min: u64,
    pub gamma_quotients: Vec<u64>,
    pub passes: Vec<ReductionPass>,
}

impl ReductionTrace {
    pub fn final_pass(&self) -> &ReductionPass {
        self.passes.last().expect("at least one pass")
    }
}

#[derive(Clone, Debug)]
pub struct ReductionOptions {
    pub start_bits: u32,
    pub cap_bits: u32,
    pub max_attempts: usize,
    /// Further passes with `M` rebuilt from the previous `n1` bound.
    pub max_passes: usize,
    /// Overrides the first pass's `M` (defaults to the certificate's `z_max`).
    pub initial_m: Option<Integer>,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            start_bits: DEFAULT_START_BITS,
            cap_bits: DEFAULT_CAP_BITS,
            max_attempts: DEFAULT_ATTEMPTS,
            max_passes: 3,
            initial_m: None,
        }
    }
}

/// All tuples `x_2 <= ... <= x_i` with `x_j <= limits[j-2]`.
pub fn gap_tuples(limits: &[u64]) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for &lim in limits {
        let mut next = Vec::new();
        for prefix in &out {
            let from = prefix.last().copied().unwrap_or(0);
            for x in from..=lim {
                let mut v = prefix.clone();
                v.push(x);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

struct PassContext<'a> {
    spec: &'a RecurrenceSpec,
    cert: &'a BoundCertificate,
    n_min: u64,
    reducer: &'a Reducer<'a>,
    log_alpha: HighPrecReal,
    log_b: HighPrecReal,
}

impl PassContext<'_> {
    fn stage(&self, i: u32, prior: &[u64], m: &Integer) -> Result<StageReduction> {
        let t = self.cert.t;
        let sign = sign_analysis(self.spec, t, i, self.n_min);
        let c = HighPrecReal::from_rational(&self.cert.c_value(i).to_rational(), 192);
        let factor = if sign.one_sided { 1 } else { 2 };
        let c_eff = c.mul_integer(&Integer::from(factor));
        let a = c_eff.div(&self.log_alpha)?;
        let a_dec = a.upper_decimal(6);
        let a_real = HighPrecReal::from_rational(&a_dec.to_rational(), 192);
        let two_sided_floor = if sign.one_sided {
            0
        } else {
            let th = c_eff.log_plus()?.div(&self.log_b)?;
            th.floor_hi().to_u64().unwrap_or(u64::MAX)
        };
        let tuples = gap_tuples(prior);
        let max_gap = prior.iter().copied().max().unwrap_or(0);
        let sf = StageFunctions::new(self.spec, max_gap)?;
        let records: Vec<Result<GapRecord>> = tuples
            .par_iter()
            .map(|gaps| {
                let g3 = sf.gamma3(gaps)?;
                let spec = self.spec;
                let outcome = match mu_relation(spec, self.cert.p, &g3)? {
                    Some(rel) => self.reducer.reduce_homogeneous(rel, &a_real, &self.log_b, m)?,
                    None => {
                        let mu_at = move |bits: u32| mu_real(spec, &g3, bits);
                        self.reducer.reduce(&mu_at, &a_real, &self.log_b, m)?
                    }
                };
                let bound = outcome.m_bound.max(two_sided_floor);
                Ok(GapRecord {
                    gaps: gaps.clone(),
                    outcome,
                    bound,
                })
            })
            .collect();
        let records = records.into_iter().collect::<Result<Vec<_>>>()?;
        let bound = records.iter().map(|r| r.bound).max().unwrap_or(0);
        Ok(StageReduction {
            stage: i,
            sign,
            a: a_dec,
            two_sided_floor,
            records,
            bound,
        })
    }

    fn pass(&self, m: &Integer) -> Result<ReductionPass> {
        let mut stages: Vec<StageReduction> = Vec::new();
        for i in 1..=self.cert.t {
            let prior: Vec<u64> = stages.iter().map(|s| s.bound).collect();
            stages.push(self.stage(i, &prior, m)?);
        }
        Ok(ReductionPass { m: m.clone(), stages })
    }
}

/// Shrinks the certificate's bounds stage by stage. Gap stages run over
/// every tuple of earlier gaps allowed by the previous stages; passes repeat
/// with `M = d1 max(n1 bound, N0) + z_slack` while the `n1` bound improves.
pub fn reduce_cascade(
    spec: &RecurrenceSpec,
    cert: &BoundCertificate,
    n_min: u64,
    opts: &ReductionOptions,
) -> Result<ReductionTrace> {
    let p = cert.p;
    let reducer = Reducer {
        max_attempts: opts.max_attempts,
        ..Reducer::new(
            Box::new(move |bits| gamma_real(spec, p, bits)),
            opts.start_bits,
            opts.cap_bits,
        )
    };
    let bits = 192;
    let ctx = PassContext {
        spec,
        cert,
        n_min,
        reducer: &reducer,
        log_alpha: spec.abs_alpha(bits).ln()?,
        log_b: crate::bounds::reduction_base(spec, bits)?.ln()?,
    };
    let mut m = opts.initial_m.clone().unwrap_or_else(|| cert.z_max.clone());
    let mut passes = Vec::new();
    loop {
        let pass = ctx.pass(&m)?;
        let n1 = pass.n1_bound().max(cert.n0);
        let improved = passes
            .last()
            .is_none_or(|prev: &ReductionPass| pass.n1_bound() < prev.n1_bound());
        let next_m = Integer::from(n1) * cert.d1 + cert.z_slack;
        passes.push(pass);
        if !improved || passes.len() >= opts.max_passes.max(1) || next_m >= m {
            break;
        }
        m = next_m;
    }
    let quotients = reducer.level(0)?.1.quotients_u64().into_iter().take(20).collect();
    Ok(ReductionTrace {
        t: cert.t,
        n_min,
        gamma_quotients: quotients,
        passes,
    })
}
