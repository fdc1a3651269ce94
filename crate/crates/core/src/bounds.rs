//! The analytic bound chain: Matveev's lower bound, heights of the linear
//! form coefficients, the stage-by-stage cascade on the index gaps and the
//! Pethő–de Weger closure that turns `n1 < C (log n1)^t` into a number.
//!
//! Every constant is computed on certified intervals and published rounded
//! up to four significant digits; later stages consume the published values
//! as exact rationals, so a certificate can be re-checked from its ledger.

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::decimal::Decimal;
use crate::error::{Error, Result};
use crate::qfield::{log_height, QuadElem};
use crate::real::HighPrecReal;
use crate::recurrence::{dominance_constants, ell_bound, z_slack, RecurrenceSpec};

/// Working precision for every bound constant.
pub const BOUND_BITS: u32 = 192;

/// Significant digits kept when a constant is published.
pub const SIG_DIGITS: u32 = 4;

fn real(d: &Decimal) -> HighPrecReal {
    HighPrecReal::from_rational(&d.to_rational(), BOUND_BITS)
}

fn int_real(n: u64) -> HighPrecReal {
    HighPrecReal::from_integer(&Integer::from(n), BOUND_BITS)
}

/// Parameters of one application of Matveev's theorem.
#[derive(Clone, Debug, Serialize)]
pub struct LinearFormParams {
    /// Number of logarithms in the form.
    pub num_logs: u32,
    /// Degree of the number field containing the `gamma_j`.
    pub degree: u32,
    pub a_values: Vec<Decimal>,
}

impl LinearFormParams {
    pub fn new(num_logs: u32, degree: u32, a_values: Vec<Decimal>) -> Result<Self> {
        if num_logs == 0 || a_values.len() != num_logs as usize {
            return Err(Error::InvalidInput(format!(
                "expected {num_logs} A-values, got {}",
                a_values.len()
            )));
        }
        if degree == 0 {
            return Err(Error::InvalidInput("field degree must be positive".into()));
        }
        if a_values.iter().any(|a| a.to_rational() <= 0) {
            return Err(Error::InvalidInput("A-values must be positive".into()));
        }
        Ok(Self {
            num_logs,
            degree,
            a_values,
        })
    }

    /// Builds the parameters after checking `A_j >= max(D h_j, |log gamma_j|, 0.16)`.
    pub fn checked(
        degree: u32,
        a_values: Vec<Decimal>,
        heights: &[HighPrecReal],
        abs_logs: &[HighPrecReal],
    ) -> Result<Self> {
        let params = Self::new(a_values.len() as u32, degree, a_values)?;
        for (j, a) in params.a_values.iter().enumerate() {
            let need = a_value_floor(degree, &heights[j], &abs_logs[j]);
            if !accepts(&need, a) {
                return Err(Error::InvalidInput(format!(
                    "A_{} = {a} is below max(D h, |log gamma|, 0.16) = {}",
                    j + 1,
                    need.upper_decimal(SIG_DIGITS)
                )));
            }
        }
        Ok(params)
    }
}

/// `max(D h, |log gamma|, 0.16)`.
pub fn a_value_floor(degree: u32, height: &HighPrecReal, abs_log: &HighPrecReal) -> HighPrecReal {
    let dh = height.mul_integer(&Integer::from(degree));
    let floor = HighPrecReal::from_rational(&Rational::from((16, 100)), BOUND_BITS);
    dh.max(abs_log).max(&floor)
}

/// True if `a` is certainly at least `need`.
pub fn accepts(need: &HighPrecReal, a: &Decimal) -> bool {
    *need.hi() <= a.to_rational()
}

/// `1.4 * 30^(t+3) * t^4.5 * D^2 * (1 + log D) * A_1 ... A_t`, so that a
/// nonzero form satisfies `|Lambda| > exp(-C0 (1 + log B))`.
pub fn matveev_exponent_real(params: &LinearFormParams) -> HighPrecReal {
    let t = params.num_logs;
    let d = params.degree;
    let mut c = HighPrecReal::from_rational(&Rational::from((14, 10)), BOUND_BITS);
    c = c.mul_integer(&Integer::from(Integer::u_pow_u(30, t + 3)));
    let t_real = int_real(t as u64);
    let t45 = &t_real.powi(4) * &t_real.sqrt().expect("t > 0");
    c = &c * &t45;
    c = c.mul_integer(&Integer::from(d * d));
    let one_log_d = &HighPrecReal::one(BOUND_BITS) + &int_real(d as u64).ln().expect("D >= 1");
    c = &c * &one_log_d;
    for a in &params.a_values {
        c = &c * &real(a);
    }
    c
}

/// [`matveev_exponent_real`] rounded up.
pub fn matveev_exponent(params: &LinearFormParams) -> Decimal {
    matveev_exponent_real(params).upper_decimal(SIG_DIGITS)
}

/// Upper bound on the largest solution of `x = u + v (log x)^h`:
/// `max(2^h (u^(1/h) + v^(1/h) log(h^h v))^h, 2^h (u^(1/h) + 2 e^2)^h)`.
///
/// The inner sum of the first branch is clamped at zero when `h^h v < 1`;
/// for `v = 0` the first branch is replaced by `u`.
pub fn petho_deweger_solve(u: &Decimal, v: &Decimal, h: u32) -> Result<Decimal> {
    if h == 0 {
        return Err(Error::InvalidInput("h must be at least 1".into()));
    }
    if u.to_rational() < 0 || v.to_rational() < 0 {
        return Err(Error::InvalidInput("u and v must be non-negative".into()));
    }
    let ur = real(u);
    let vr = real(v);
    let two_h = HighPrecReal::from_integer(&Integer::from(Integer::u_pow_u(2, h)), BOUND_BITS);
    let u_root = ur.root(h)?;
    let e2 = HighPrecReal::from_i64(2, BOUND_BITS).exp();
    let second = &two_h * &(&u_root + &(&e2 * &HighPrecReal::from_i64(2, BOUND_BITS))).powi(h);
    let first = if v.to_rational() == 0 {
        ur.clone()
    } else {
        let hh = HighPrecReal::from_integer(&Integer::from(Integer::u_pow_u(h, h)), BOUND_BITS);
        let log_term = (&hh * &vr).ln()?;
        let inner = &u_root + &(&vr.root(h)? * &log_term);
        let inner = inner.max(&HighPrecReal::zero(BOUND_BITS));
        &two_h * &inner.powi(h)
    };
    Ok(first.max(&second).upper_decimal(SIG_DIGITS))
}

/// The exponent `d2` of the `log max(sqrt Delta, 1/sqrt Delta)` term.
///
/// It only matters when `sqrt Delta = p/q` is rational with `q > 1`; for an
/// integer discriminant `q = 1`, so the term vanishes.
pub fn d2_exponent(_spec: &RecurrenceSpec) -> u32 {
    0
}

/// The heights and logarithms shared by every stage.
#[derive(Clone, Debug)]
pub struct FieldConstants {
    pub degree: u32,
    pub h_p: HighPrecReal,
    pub h_alpha: HighPrecReal,
    pub h_a: HighPrecReal,
    pub log_p: HighPrecReal,
    pub log_abs_alpha: HighPrecReal,
    pub log_sqrt_delta: HighPrecReal,
    /// `log min(|alpha|/|beta|, |alpha|)`.
    pub log_base: HighPrecReal,
}

impl FieldConstants {
    pub fn new(spec: &RecurrenceSpec, p: u64) -> Result<Self> {
        let bits = BOUND_BITS;
        let degree = if spec.has_rational_roots() { 1 } else { 2 };
        let pq = QuadElem::from_rational(Integer::from(p));
        Ok(Self {
            degree,
            h_p: log_height(&pq, bits)?,
            h_alpha: log_height(&spec.alpha, bits)?,
            h_a: log_height(&spec.a, bits)?,
            log_p: int_real(p).ln()?,
            log_abs_alpha: spec.abs_alpha(bits).ln()?,
            log_sqrt_delta: spec.sqrt_delta().to_real(bits).ln()?,
            log_base: reduction_base(spec, bits)?.ln()?,
        })
    }
}

/// `min(|alpha|/|beta|, |alpha|)`, the base in which the gaps decay.
pub fn reduction_base(spec: &RecurrenceSpec, bits: u32) -> Result<HighPrecReal> {
    let abs_alpha = spec.abs_alpha(bits);
    if spec.beta_in_unit_disc() {
        Ok(abs_alpha)
    } else {
        abs_alpha.div(&spec.abs_beta(bits))
    }
}

/// Lower bound for `|1 + alpha^-x_2 + ... + alpha^-x_i|` over all gaps.
///
/// For `alpha > 0` every term is positive and the sum is at least 1; for
/// `alpha < 0` the terms with `x_j >= 1` can subtract at most `(i-1)/|alpha|`.
pub fn dominant_sum_floor(spec: &RecurrenceSpec, i: u32) -> Result<HighPrecReal> {
    let one = HighPrecReal::one(BOUND_BITS);
    if spec.alpha.signum() == std::cmp::Ordering::Greater {
        return Ok(one);
    }
    let s = &one - &int_real((i - 1) as u64).div(&spec.abs_alpha(BOUND_BITS))?;
    if !s.is_positive() {
        return Err(Error::Domain(format!(
            "negative dominant root with |alpha| <= {}: the dominant part may cancel",
            i - 1
        )));
    }
    Ok(s)
}

/// `c_i` with `|Lambda_i| < c_i * base^-(gap)`, where `i` is the number of
/// leading terms moved to the dominant side.
///
/// For `i < t`: `(i|b| + (t-i) d0 sqrt Delta) / (|a| sigma_i)`, bounding the
/// gap `n1 - n_{i+1}`; for `i = t`: `t|b| / (|a| sigma_t)`, bounding `n1`.
/// Here `sigma_i` is [`dominant_sum_floor`].
pub fn c_constant(spec: &RecurrenceSpec, d0_int: &Integer, t: u32, i: u32) -> Result<HighPrecReal> {
    let bits = BOUND_BITS;
    let abs_a = spec.a.abs().to_real(bits);
    let abs_b = spec.b.abs().to_real(bits);
    let sigma = dominant_sum_floor(spec, i)?;
    let mut num = abs_b.mul_integer(&Integer::from(i));
    if i < t {
        let tail = spec
            .sqrt_delta()
            .to_real(bits)
            .mul_integer(&Integer::from(d0_int * (t - i)));
        num = &num + &tail;
    }
    num.div(&(&abs_a * &sigma))
}

/// `A_3(i) = 2(h(a) + d2 log max(sqrt Delta, 1/sqrt Delta) + |log sqrt Delta|
/// + (x_2 + ... + x_i) h(alpha)) + (i+1) log 4`, with `gaps = [x_2, ..., x_i]`.
///
/// `h(a)` stands in for `log|a|`; the two agree for integer `a`.
pub fn a3_height(spec: &RecurrenceSpec, fc: &FieldConstants, i: u32, gaps: &[Rational]) -> Result<HighPrecReal> {
    if gaps.len() + 1 != i as usize {
        return Err(Error::InvalidInput(format!(
            "stage {i} needs {} gap values, got {}",
            i - 1,
            gaps.len()
        )));
    }
    if gaps.iter().any(|g| *g < 0) {
        return Err(Error::InvalidInput("gaps must be non-negative".into()));
    }
    let mut inner = &fc.h_a + &fc.log_sqrt_delta.abs();
    let d2 = d2_exponent(spec);
    if d2 > 0 {
        let lm = fc.log_sqrt_delta.abs();
        inner = &inner + &lm.mul_integer(&Integer::from(d2));
    }
    let gap_sum: Rational = gaps.iter().sum();
    inner = &inner + &(&fc.h_alpha * &HighPrecReal::from_rational(&gap_sum, BOUND_BITS));
    let log4 = int_real(4).ln()?;
    Ok(&inner.mul_integer(&Integer::from(2)) + &log4.mul_integer(&Integer::from(i + 1)))
}

/// One named constant of a certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub name: String,
    pub value: String,
    pub note: String,
    /// The result the constant comes from, in words.
    pub anchor: String,
}

fn entry(name: &str, value: impl ToString, note: &str, anchor: &str) -> LedgerEntry {
    LedgerEntry {
        name: name.to_string(),
        value: value.to_string(),
        note: note.to_string(),
        anchor: anchor.to_string(),
    }
}

/// The bound of one cascade stage: `x log base < constant * (log n1)^power`,
/// where `x` is `n1 - n_{i+1}` for `i < t` and `n1` itself for `i = t`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: u32,
    pub c: Decimal,
    /// `A_3(i)` with every gap set to zero.
    pub a3_constant: Decimal,
    pub constant: Decimal,
    pub power: u32,
}

/// Everything that stays fixed along the cascade.
#[derive(Clone, Debug)]
pub struct CascadeContext {
    pub t: u32,
    pub fc: FieldConstants,
    pub d0_int: Integer,
    pub a1: Decimal,
    pub a2: Decimal,
    /// Matveev's constant with `A_3 = 1`.
    pub matveev_base: Decimal,
    pub kappa: u32,
    /// `log N0`, the analytic argument assumes `n1 > N0`.
    pub log_n0: HighPrecReal,
}

impl CascadeContext {
    /// `x_{i+1} log base < log+ c_i + M kappa L (A_3 const + 2 h(alpha) sum g_j L^(j-1))`,
    /// folded into a single power of `L = log n1` using `L >= log N0`.
    pub fn stage(&self, spec: &RecurrenceSpec, i: u32, prior: &[Decimal]) -> Result<StageRecord> {
        if prior.len() + 1 != i as usize {
            return Err(Error::InvalidInput(format!(
                "stage {i} needs {} prior stage constants",
                i - 1
            )));
        }
        let c = c_constant(spec, &self.d0_int, self.t, i)?.upper_decimal(SIG_DIGITS);
        let zeros = vec![Rational::new(); prior.len()];
        let k = a3_height(spec, &self.fc, i, &zeros)?.upper_decimal(SIG_DIGITS);
        let mk = &real(&self.matveev_base) * &int_real(self.kappa as u64);
        let l0 = &self.log_n0;
        let log_c = real(&c).log_plus()?;
        let mut total = log_c.div(&l0.powi(i))?;
        total = &total + &(&mk * &real(&k)).div(&l0.powi(i - 1))?;
        let two_h = self.fc.h_alpha.mul_integer(&Integer::from(2));
        for (idx, cj) in prior.iter().enumerate() {
            let j = idx as u32 + 2;
            let g = real(cj).div(&self.fc.log_base)?;
            let term = &(&mk * &two_h) * &g;
            total = &total + &term.div(&l0.powi(i - j))?;
        }
        Ok(StageRecord {
            stage: i,
            c,
            a3_constant: k,
            constant: total.upper_decimal(SIG_DIGITS),
            power: i,
        })
    }
}

/// The full ledger of derived constants and the resulting bound on `n1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub p: u64,
    pub t: u32,
    pub n0: u64,
    pub degree: u32,
    pub d0: Decimal,
    pub d0_int: String,
    pub d1: u32,
    pub z_slack: u32,
    pub d2: u32,
    pub ell: Decimal,
    pub nonvanishing_limit: Decimal,
    pub h_p: Decimal,
    pub h_alpha: Decimal,
    pub a1: Decimal,
    pub a2: Decimal,
    pub matveev_base: Decimal,
    pub kappa: u32,
    pub log_base: Decimal,
    pub stages: Vec<StageRecord>,
    pub pdw_v: Decimal,
    pub n1_bound_real: Decimal,
    #[serde(with = "crate::decimal::integer_string")]
    pub n1_max: Integer,
    #[serde(with = "crate::decimal::integer_string")]
    pub z_max: Integer,
    pub ledger: Vec<LedgerEntry>,
}

impl BoundCertificate {
    /// Stage constants `C_2, ..., C_t` of the gap bounds, then the final one.
    pub fn stage_constants(&self) -> Vec<Decimal> {
        self.stages.iter().map(|s| s.constant.clone()).collect()
    }

    /// The `c_i` of the stage with `i` dominant terms.
    pub fn c_value(&self, i: u32) -> &Decimal {
        &self.stages[i as usize - 1].c
    }
}

/// Largest `n1` for which some `Lambda_i` can vanish.
///
/// If `Lambda_i = 0`, conjugating `p^z = (a/s) alpha^n1 S_i` gives
/// `|a| |alpha|^n1 sigma_i <= i |b| max(1, |beta|)^n1`, so
/// `n1 <= log(i|b| / (|a| sigma_i)) / log base`. Needs an irrational `alpha`.
pub fn nonvanishing_limit(spec: &RecurrenceSpec, fc: &FieldConstants, t: u32) -> Result<HighPrecReal> {
    let bits = BOUND_BITS;
    let abs_a = spec.a.abs().to_real(bits);
    let abs_b = spec.b.abs().to_real(bits);
    let mut best = HighPrecReal::zero(bits);
    for i in 1..=t {
        let sigma = dominant_sum_floor(spec, i)?;
        let arg = abs_b.mul_integer(&Integer::from(i)).div(&(&abs_a * &sigma))?;
        best = best.max(&arg.log_plus()?.div(&fc.log_base)?);
    }
    Ok(best)
}

/// Runs the cascade for `sum_{j<=t} u_{n_j} = p^z` with `n1 > n0` and
/// returns the certificate. `t = 1` is accepted for the reduced equation
/// `u_n = p^z`.
pub fn n1_bound(spec: &RecurrenceSpec, p: u64, t: u32, n0: u64) -> Result<BoundCertificate> {
    if t == 0 {
        return Err(Error::InvalidInput("t must be positive".into()));
    }
    if n0 < 3 {
        return Err(Error::InvalidInput("the analytic threshold must be at least 3".into()));
    }
    if spec.has_rational_roots() {
        return Err(Error::Domain(
            "perfect-square discriminant: the linear forms can vanish identically, \
             so no bound is certified"
                .into(),
        ));
    }
    let fc = FieldConstants::new(spec, p)?;
    let dom = dominance_constants(spec, p)?;
    let e = z_slack(spec, &dom, p, t);
    let ell = ell_bound(spec, t.max(2))?;
    let nv = nonvanishing_limit(spec, &fc, t)?;

    let a1 = a_value_floor(fc.degree, &fc.h_p, &fc.log_p).upper_decimal(SIG_DIGITS);
    let a2 = a_value_floor(fc.degree, &fc.h_alpha, &fc.log_abs_alpha.abs()).upper_decimal(SIG_DIGITS);
    let lf = LinearFormParams::new(3, fc.degree, vec![a1.clone(), a2.clone(), Decimal::new(1, 0)])?;
    let matveev_base = matveev_exponent(&lf);

    let log_n0 = int_real(n0).ln()?;
    // 1 + log(B) <= 1 + log(d1 + e) + log n1 <= kappa log n1 once n1 > n0
    let slack = &HighPrecReal::one(BOUND_BITS) + &int_real((dom.d1 + e) as u64).ln()?;
    let kappa_real = &HighPrecReal::one(BOUND_BITS) + &slack.div(&log_n0)?;
    let kappa = u32::try_from(kappa_real.ceil_hi()).map_err(|_| Error::Internal("kappa overflow".into()))?;

    let ctx = CascadeContext {
        t,
        fc: fc.clone(),
        d0_int: dom.d0_int.clone(),
        a1: a1.clone(),
        a2: a2.clone(),
        matveev_base: matveev_base.clone(),
        kappa,
        log_n0,
    };
    let mut stages: Vec<StageRecord> = Vec::new();
    for i in 1..=t {
        let prior: Vec<Decimal> = stages.iter().map(|s| s.constant.clone()).collect();
        stages.push(ctx.stage(spec, i, &prior)?);
    }
    let final_c = &stages.last().expect("t >= 1").constant;
    let log_base_lo = Decimal::round_down(&fc.log_base.rational_bounds().0, SIG_DIGITS + 2);
    let v = real(final_c).div(&real(&log_base_lo))?.upper_decimal(SIG_DIGITS);
    let n1_real = petho_deweger_solve(&Decimal::zero(), &v, t)?;
    let n1_max = n1_real.ceil_integer();
    let z_max = Integer::from(&n1_max * dom.d1) + e;

    let mut ledger = vec![
        entry("h(p)", fc.h_p.upper_decimal(SIG_DIGITS), "log p", "height of a rational number"),
        entry("h(alpha)", fc.h_alpha.upper_decimal(SIG_DIGITS), "from the minimal polynomial of alpha", "logarithmic height"),
        entry("h(a)", fc.h_a.upper_decimal(SIG_DIGITS), "from the minimal polynomial of a", "logarithmic height"),
        entry("d0", dom.d0.upper_decimal(SIG_DIGITS), "(|a|+|b|)/sqrt(Delta)", "|u_n| <= d0 |alpha|^n"),
        entry("d0_int", &dom.d0_int, "max(1, ceil d0)", "|u_n| <= d0 |alpha|^n"),
        entry("d1", dom.d1, "smallest d1 with d0_int |alpha| < p^d1", "z <= d1 n1"),
        entry("z_slack", e, "smallest e with t d0 |alpha| <= p^(d1+e); z <= d1 n1 + e", "z <= d1 n1"),
        entry("d2", d2_exponent(spec), "zero for an integer discriminant", "height bound for gamma_3"),
        entry("ell", ell.upper_decimal(SIG_DIGITS), "max_i log((|a|(t-i)+(t-1)|b|)/|b|)/log(|beta|/|alpha|)", "nonvanishing of the linear forms"),
        entry("nonvanishing_limit", nv.upper_decimal(SIG_DIGITS), "max_i log+(i|b|/(|a| sigma_i))/log base, via conjugation", "nonvanishing of the linear forms"),
        entry("A1", &a1, "max(D h(p), log p, 0.16)", "Matveev lower bound"),
        entry("A2", &a2, "max(D h(alpha), log|alpha|, 0.16)", "Matveev lower bound"),
        entry("matveev_base", &matveev_base, "1.4 30^6 3^4.5 D^2 (1+log D) A1 A2", "Matveev lower bound"),
        entry("kappa", kappa, "ceil(1 + (1 + log(d1+e))/log N0), so 1 + log B <= kappa log n1", "Matveev lower bound"),
        entry("log_base", &log_base_lo, "log min(|alpha|/|beta|, |alpha|), rounded down", "gap extraction"),
    ];
    for s in &stages {
        let what = if s.stage < t {
            format!("(n1 - n{}) log base < C (log n1)^{}", s.stage + 1, s.power)
        } else {
            format!("n1 log base < C (log n1)^{}", s.power)
        };
        ledger.push(entry(&format!("c_{}", s.stage), &s.c, "upper estimate of the linear form", "linear form upper bound"));
        ledger.push(entry(&format!("A3_const_{}", s.stage), &s.a3_constant, "A3 with all gaps zero", "height bound for gamma_3"));
        ledger.push(entry(&format!("C_stage{}", s.stage), &s.constant, &what, "stage cascade"));
    }
    ledger.push(entry("pdw_v", &v, "C_final / log base", "largest solution of x = u + v (log x)^h"));
    ledger.push(entry("n1_max", &n1_max, "ceiling of the Pethő–de Weger bound", "largest solution of x = u + v (log x)^h"));
    ledger.push(entry("z_max", &z_max, "d1 n1_max + z_slack", "z <= d1 n1"));

    Ok(BoundCertificate {
        p,
        t,
        n0,
        degree: fc.degree,
        d0: dom.d0.upper_decimal(SIG_DIGITS),
        d0_int: dom.d0_int.to_string(),
        d1: dom.d1,
        z_slack: e,
        d2: d2_exponent(spec),
        ell: ell.upper_decimal(SIG_DIGITS),
        nonvanishing_limit: nv.upper_decimal(SIG_DIGITS),
        h_p: fc.h_p.upper_decimal(SIG_DIGITS),
        h_alpha: fc.h_alpha.upper_decimal(SIG_DIGITS),
        a1,
        a2,
        matveev_base,
        kappa,
        log_base: log_base_lo,
        stages,
        pdw_v: v,
        n1_bound_real: n1_real,
        n1_max,
        z_max,
        ledger,
    })
}
