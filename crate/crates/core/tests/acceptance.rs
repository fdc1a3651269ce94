//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use recpow::bounds::{
    a_value_floor, accepts, matveev_exponent_real, n1_bound, petho_deweger_solve, LinearFormParams,
};
use recpow::cli::{run, RunConfig};
use recpow::decimal::Decimal;
use recpow::pipeline::{brute_force, solve, ProblemInstance, Solution};
use recpow::qfield::{log_height, QuadElem};
use recpow::real::HighPrecReal;
use recpow::recurrence::{RecurrenceParams, RecurrenceSpec};
use recpow::reduction::{cf_expand, gamma_real, reduce_cascade, ReductionOptions, ReductionPass};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn dec(s: &str) -> Decimal {
    s.parse().unwrap()
}

fn binet_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB1_9E7);
    let mut specs = vec![RecurrenceSpec::balancing()];
    while specs.len() < 21 {
        let params = RecurrenceParams::new(
            rng.gen_range(-12..=12),
            rng.gen_range(-12..=12),
            rng.gen_range(-20..=20),
            rng.gen_range(-20..=20),
        );
        if let Ok(s) = RecurrenceSpec::new(params) {
            specs.push(s);
        }
    }
    for s in &specs {
        let terms = s.terms(200);
        for (n, u) in terms.iter().enumerate() {
            let b = s.binet_term(n as u64).map_err(|e| e.to_string())?;
            ensure(&b == u, format!("{:?}: u_{n} = {u} but Binet gives {b}", s.params))?;
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), format!("took {took:?}"))?;
    Ok(format!("21 specs, n <= 200, {took:.2?}"))
}

/// True if `x` truncated to four decimals is `target` (0.88137... quotes as 0.8813).
fn truncates_to(x: &HighPrecReal, target: &str) -> bool {
    let t: Rational = dec(target).to_rational();
    let ulp = Rational::from((1, 10000));
    let (lo, hi) = x.rational_bounds();
    lo >= t && hi < Rational::from(&t + &ulp)
}

fn reference_constants() -> Outcome {
    let s = RecurrenceSpec::balancing();
    let bits = 192;
    let h3 = log_height(&QuadElem::from_i64(3), bits).map_err(|e| e.to_string())?;
    let ha = log_height(&s.alpha, bits).map_err(|e| e.to_string())?;
    ensure(truncates_to(&h3, "1.0986"), format!("h(3) = {}", h3))?;
    ensure(truncates_to(&ha, "0.8813"), format!("h(alpha) = {}", ha))?;
    let ln3 = h3.clone();
    let ln_alpha = s.abs_alpha(bits).ln().unwrap();
    ensure(accepts(&a_value_floor(2, &h3, &ln3), &dec("2.4")), "A1 = 2.4 rejected")?;
    ensure(accepts(&a_value_floor(2, &ha, &ln_alpha), &dec("1.9")), "A2 = 1.9 rejected")?;
    let lf = LinearFormParams::new(3, 2, vec![dec("2.4"), dec("1.9"), dec("1.8")]).unwrap();
    let c = matveev_exponent_real(&lf);
    let (lo, hi) = c.rational_bounds();
    ensure(
        lo >= 78 * 10i64.pow(11) && hi <= 80 * 10i64.pow(11),
        format!("Matveev product {}", c),
    )?;
    Ok(format!("h(3) = {:.6}, h(alpha) = {:.6}, product = {}", h3.to_f64(), ha.to_f64(), c.upper_decimal(4)))
}

fn continued_fraction() -> Outcome {
    let start = Instant::now();
    let s = RecurrenceSpec::balancing();
    let g = gamma_real(&s, 3, 512).map_err(|e| e.to_string())?;
    let cf = cf_expand(&g, 9).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let q = cf.quotients_u64();
    ensure(q == [0, 1, 1, 1, 1, 1, 8, 4, 17], format!("quotients {q:?}"))?;
    ensure(took < Duration::from_secs(1), format!("took {took:?}"))?;
    Ok(format!("{q:?} at 512 bits, {took:.2?}"))
}

fn bound_certificate() -> Outcome {
    let s = RecurrenceSpec::balancing();
    let cert = n1_bound(&s, 3, 3, 100).map_err(|e| e.to_string())?;
    let lo = Integer::from(15) * Integer::from(10).pow(44);
    let hi = Integer::from(10).pow(48);
    ensure(cert.n1_max >= lo && cert.n1_max <= hi, format!("n1_max = {}", cert.n1_max))?;
    ensure(cert.z_max == Integer::from(&cert.n1_max * 2), format!("z_max = {}", cert.z_max))?;
    Ok(format!("n1_max = {:.4e}, z_max = 2 n1_max", cert.n1_max.to_f64()))
}

fn single_pass(m: Option<Integer>) -> Result<ReductionPass, String> {
    let s = RecurrenceSpec::balancing();
    let cert = n1_bound(&s, 3, 3, 100).map_err(|e| e.to_string())?;
    let opts = ReductionOptions {
        max_passes: 1,
        initial_m: m,
        ..ReductionOptions::default()
    };
    let trace = reduce_cascade(&s, &cert, 1, &opts).map_err(|e| e.to_string())?;
    Ok(trace.passes.into_iter().next().unwrap())
}

fn reduction_windows() -> Outcome {
    let start = Instant::now();
    let ours = single_pass(None)?.bounds();
    ensure(
        ours.len() == 3 && ours[0] <= 100 && ours[1] <= 110 && ours[2] <= 120,
        format!("with our M: {ours:?}"),
    )?;
    let m_3e45 = Integer::from(3) * Integer::from(10).pow(45);
    let theirs = single_pass(Some(m_3e45))?.bounds();
    ensure(
        theirs.len() == 3 && theirs[0] <= 70 && theirs[1] <= 72 && theirs[2] <= 75,
        format!("with M = 3e45: {theirs:?}"),
    )?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(600), format!("took {took:?}"))?;
    Ok(format!("our M: {ours:?}; M = 3e45: {theirs:?}; {took:.2?}"))
}

fn sol(v: &[u64]) -> Solution {
    let (z, idx) = v.split_last().unwrap();
    Solution { indices: idx.to_vec(), z: *z }
}

fn flagship() -> Outcome {
    let inst = ProblemInstance::balancing(3);
    let r = solve(&inst, &ReductionOptions::default()).map_err(|e| e.to_string())?;
    let expected = vec![sol(&[1, 0, 0, 0]), sol(&[1, 1, 1, 1])];
    ensure(r.solutions == expected, format!("pipeline found {:?}", r.solutions))?;
    let wide = brute_force(&inst, 500).map_err(|e| e.to_string())?;
    ensure(wide == expected, format!("search to 500 found {wide:?}"))?;
    Ok(format!(
        "pipeline (search to {}) and search to 500 both give {{(1,1,1,1), (1,0,0,0)}}",
        r.search_limit
    ))
}

/// Iterates `x -> u + v (log x)^h` downward from far above the largest fixed
/// point; the iterates stay above it, so the result never undershoots.
fn fixed_point_oracle(u: f64, v: f64, h: u32) -> f64 {
    if v == 0.0 {
        return u;
    }
    let mut x = 1e300_f64;
    for _ in 0..1_000_000 {
        let next = u + v * x.ln().powi(h as i32);
        if next >= x * (1.0 - 1e-15) {
            return x;
        }
        if next <= 1.0 {
            // no fixed point above 1
            return 1.0;
        }
        x = next;
    }
    x
}

fn petho_de_weger() -> Outcome {
    let grid = ["0", "1", "10", "1e6", "1e39"];
    let mut cases = 0;
    for u in grid {
        for v in grid {
            for h in 1..=3u32 {
                let bound = petho_deweger_solve(&dec(u), &dec(v), h).map_err(|e| e.to_string())?;
                let b = bound.to_f64();
                let (uf, vf) = (dec(u).to_f64(), dec(v).to_f64());
                let oracle = fixed_point_oracle(uf, vf, h);
                ensure(b >= oracle, format!("u={u} v={v} h={h}: {b} < oracle {oracle}"))?;
                if vf == 0.0 {
                    let second = 2f64.powi(h as i32) * (uf.powf(1.0 / h as f64) + 2.0 * 2f64.exp()).powi(h as i32);
                    let want = uf.max(second);
                    ensure(
                        b >= want && b <= want * (1.0 + 1e-3),
                        format!("v=0, u={u}, h={h}: {b} vs max(u, second branch) = {want}"),
                    )?;
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} grid points"))
}

const ORACLE_BITS: u32 = 1024;

fn alpha_f() -> Float {
    Float::with_val(ORACLE_BITS, 8).sqrt() + 3
}

/// `||x||` as a float.
fn dist_nearest(x: &Float) -> Float {
    let r = x.clone().round();
    Float::with_val(ORACLE_BITS, x - r).abs()
}

fn random_below(rng: &mut ChaCha8Rng, m: &Integer) -> Integer {
    let words = m.significant_bits() / 64 + 2;
    let mut x = Integer::new();
    for _ in 0..words {
        x <<= 64;
        x += rng.gen::<u64>();
    }
    x % Integer::from(m + 1)
}

/// Convergent denominators of `x`, in plain floating point.
fn float_denominators(x: &Float, limit: &Integer) -> Vec<Integer> {
    let mut out = Vec::new();
    let (mut q1, mut q2) = (Integer::from(0), Integer::from(1));
    let mut y = x.clone();
    for _ in 0..200 {
        let a = y.clone().floor().to_integer().unwrap();
        let q = Integer::from(&a * &q1) + &q2;
        if q > *limit {
            break;
        }
        out.push(q.clone());
        q2 = std::mem::replace(&mut q1, q);
        let frac = Float::with_val(ORACLE_BITS, &y - &a);
        y = frac.recip();
    }
    out
}

/// Checks one reduction pass of balancing numbers against an independent
/// float computation: no sampled `u <= M` and `m > bound` satisfies
/// `||u gamma + mu|| < A alpha^-m`.
fn spot_check(pass: &ReductionPass, rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let alpha = alpha_f();
    let log_alpha = alpha.clone().ln();
    let gamma = Float::with_val(ORACLE_BITS, 3).ln() / &log_alpha;
    let root_gap = Float::with_val(ORACLE_BITS, 32).sqrt();
    let specials = float_denominators(&gamma, &pass.m);
    let mut checked = 0;
    for stage in &pass.stages {
        let a_val = Float::with_val(ORACLE_BITS, stage.a.to_rational());
        for k in 0..10_000 + specials.len() {
            let rec = &stage.records[rng.gen_range(0..stage.records.len())];
            let mut s = Float::with_val(ORACLE_BITS, 1);
            for &x in &rec.gaps {
                s += Float::with_val(ORACLE_BITS, alpha.clone().pow(-(x as i64)));
            }
            let mu = Float::with_val(ORACLE_BITS, &root_gap / &s).ln() / &log_alpha;
            let u = if k < 10_000 {
                random_below(rng, &pass.m)
            } else {
                specials[k - 10_000].clone()
            };
            let val = Float::with_val(ORACLE_BITS, &gamma * &u) + &mu;
            let d = dist_nearest(&val);
            let m_first = rec.bound + 1 + rng.gen_range(0..50);
            let rhs = a_val.clone() * alpha.clone().pow(-(m_first as i64));
            if d < rhs {
                return Err(format!(
                    "stage {} gaps {:?}: u = {u} satisfies the inequality at m = {m_first} > {}",
                    stage.stage, rec.gaps, rec.bound
                ));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

fn dujella_petho_spot() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD0_9E7);
    let inst = ProblemInstance::balancing(3);
    let r = solve(&inst, &ReductionOptions::default()).map_err(|e| e.to_string())?;
    let mut passes: Vec<ReductionPass> =
        r.cases.iter().flat_map(|c| c.reduction.passes.iter().cloned()).collect();
    passes.push(single_pass(Some(Integer::from(3) * Integer::from(10).pow(45)))?);
    let mut stages = 0;
    let mut samples = 0;
    for p in &passes {
        samples += spot_check(p, &mut rng)?;
        stages += p.stages.len();
    }
    Ok(format!("{stages} stages, {samples} samples, no violations"))
}

fn determinism() -> Outcome {
    let cfg = RunConfig::default();
    let (c1, r1) = run(&cfg);
    let (c2, r2) = run(&cfg);
    ensure(c1 == 0 && c2 == 0, format!("exit codes {c1}, {c2}"))?;
    let (s1, s2) = (serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
    ensure(s1 == s2, "reports differ")?;
    Ok(format!("two solve reports identical ({} bytes)", s1.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("Binet equivalence", binet_equivalence),
        ("reference constants", reference_constants),
        ("continued fraction of log 3/log alpha", continued_fraction),
        ("bound certificate", bound_certificate),
        ("reduction windows", reduction_windows),
        ("balancing sums of three terms", flagship),
        ("Pethő–de Weger grid", petho_de_weger),
        ("Dujella–Pethő spot oracle", dujella_petho_spot),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        match f() {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{:.2?}]", i + 1, start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail} [{:.2?}]", i + 1, start.elapsed());
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
