//! End-to-end solution of `u_{n_1} + ... + u_{n_t} = p^z`: bounds, reduction
//! and the exhaustive search below the reduced bound.

use std::collections::HashSet;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::Integer;
use serde::Serialize;

use crate::bounds::{n1_bound, BoundCertificate};
use crate::error::{Error, Result};
use crate::recurrence::RecurrenceSpec;
use crate::reduction::{reduce_cascade, ReductionOptions, ReductionTrace};

pub const MAX_T: u32 = 5;
pub const DEFAULT_BRUTE_LIMIT: u64 = 100;
/// Largest number of weakly ordered tuples the search enumerates unless
/// raised explicitly. Covers `t = 3` up to `n_max = 500`.
pub const DEFAULT_SEARCH_TUPLES: u64 = 25_000_000;

/// Primality for `p < 2^64`. GMP runs Baillie–PSW first, which has no
/// pseudoprimes in this range, so the answer is exact.
pub fn is_prime(p: u64) -> bool {
    Integer::from(p).is_probably_prime(30) != rug::integer::IsPrime::No
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub spec: RecurrenceSpec,
    pub p: u64,
    pub t: u32,
    /// Below this `n1` the search settles everything; above it the bounds apply.
    pub brute_limit: u64,
    pub search_tuple_limit: u64,
}

impl ProblemInstance {
    pub fn new(spec: RecurrenceSpec, p: u64, t: u32, brute_limit: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidInput(format!("p = {p} is not prime")));
        }
        if !(2..=MAX_T).contains(&t) {
            return Err(Error::InvalidInput(format!("t = {t} must lie in 2..={MAX_T}")));
        }
        if brute_limit < 3 {
            return Err(Error::InvalidInput("brute_limit must be at least 3".into()));
        }
        Ok(Self {
            spec,
            p,
            t,
            brute_limit,
            search_tuple_limit: DEFAULT_SEARCH_TUPLES,
        })
    }

    pub fn balancing(t: u32) -> Self {
        Self::new(RecurrenceSpec::balancing(), 3, t, DEFAULT_BRUTE_LIMIT).expect("valid instance")
    }
}

/// `n_1 >= ... >= n_t >= 0` and `z` with `sum u_{n_i} = p^z`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Solution {
    pub indices: Vec<u64>,
    pub z: u64,
}

impl Solution {
    /// `(n_1, ..., n_t, z)`.
    pub fn as_tuple(&self) -> Vec<u64> {
        let mut v = self.indices.clone();
        v.push(self.z);
        v
    }

    /// Recomputes every term and the power from scratch.
    pub fn verify(&self, spec: &RecurrenceSpec, p: u64) -> bool {
        let ordered = self.indices.windows(2).all(|w| w[0] >= w[1]);
        let sum: Integer = self.indices.iter().map(|&n| spec.term(n)).sum();
        ordered && sum == Integer::from(p).pow(self.z as u32)
    }
}

impl Serialize for Solution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_tuple().serialize(serializer)
    }
}

/// `log_p(x)` if `x` is a positive power of `p`.
pub fn power_exponent(x: &Integer, p: u64) -> Option<u64> {
    if *x <= 0 {
        return None;
    }
    let p = Integer::from(p);
    let mut x = x.clone();
    let mut z = 0;
    while x.is_divisible(&p) {
        x.div_exact_mut(&p);
        z += 1;
    }
    (x == 1).then_some(z)
}

const MERSENNE_61: u64 = (1 << 61) - 1;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Residue(u64, u64);

impl Residue {
    fn of(x: &Integer) -> Self {
        let lo = x.to_u64_wrapping();
        let mut r = Integer::from(x % MERSENNE_61);
        if r < 0 {
            r += MERSENNE_61;
        }
        let r61 = r.to_u64().expect("reduced");
        Self(lo, r61)
    }

    fn add(self, o: Self) -> Self {
        let s = self.1 + o.1;
        Self(self.0.wrapping_add(o.0), if s >= MERSENNE_61 { s - MERSENNE_61 } else { s })
    }
}

fn tuple_count(n_max: u64, t: u32) -> u64 {
    // C(n_max + t, t) weakly ordered tuples
    let mut c = Integer::from(1);
    for i in 1..=t as u64 {
        c *= n_max + i;
        c /= i;
    }
    c.to_u64().unwrap_or(u64::MAX)
}

/// Every solution with `n_1 <= n_max`, sorted.
///
/// A residue test modulo `2^64` and `2^61 - 1` against the powers of `p`
/// screens tuples; survivors are checked exactly.
pub fn brute_force(instance: &ProblemInstance, n_max: u64) -> Result<Vec<Solution>> {
    let t = instance.t;
    let count = tuple_count(n_max, t);
    if count > instance.search_tuple_limit {
        return Err(Error::Resource(format!(
            "search over {count} tuples (t = {t}, n_max = {n_max}) exceeds the limit of {}",
            instance.search_tuple_limit
        )));
    }
    let terms = instance.spec.terms(n_max);
    let residues: Vec<Residue> = terms.iter().map(Residue::of).collect();
    let max_abs = terms.iter().map(|x| Integer::from(x.abs_ref())).max().unwrap_or_default();
    let ceiling = max_abs * t;
    let mut targets = HashSet::new();
    let mut pz = Integer::from(1);
    while pz <= ceiling {
        targets.insert(Residue::of(&pz));
        pz *= instance.p;
    }
    let ctx = SearchContext {
        terms: &terms,
        residues: &residues,
        targets: &targets,
        p: instance.p,
    };
    let mut out: Vec<Solution> = (0..=n_max)
        .into_par_iter()
        .flat_map_iter(|n1| {
            let mut found = Vec::new();
            let mut idx = vec![n1];
            ctx.extend(&mut idx, residues[n1 as usize], t, &mut found);
            found
        })
        .collect();
    out.sort();
    Ok(out)
}

struct SearchContext<'a> {
    terms: &'a [Integer],
    residues: &'a [Residue],
    targets: &'a HashSet<Residue>,
    p: u64,
}

impl SearchContext<'_> {
    fn extend(&self, idx: &mut Vec<u64>, acc: Residue, t: u32, found: &mut Vec<Solution>) {
        if idx.len() == t as usize {
            if self.targets.contains(&acc) {
                let sum: Integer = idx.iter().map(|&n| &self.terms[n as usize]).sum();
                if let Some(z) = power_exponent(&sum, self.p) {
                    found.push(Solution { indices: idx.clone(), z });
                }
            }
            return;
        }
        let last = *idx.last().expect("n1 present");
        for n in 0..=last {
            idx.push(n);
            self.extend(idx, acc.add(self.residues[n as usize]), t, found);
            idx.pop();
        }
    }
}

/// One family handled by its own certificate.
#[derive(Clone, Debug, Serialize)]
pub struct Subcase {
    /// Number of indices that are not forced to zero.
    pub terms: u32,
    pub zero_indices: u32,
    /// Smallest index allowed in the free part.
    pub n_min: u64,
    pub description: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DegenerateCases {
    pub subcases: Vec<Subcase>,
    /// Solutions of `t u_n = p^z` with `n <= brute_limit`.
    pub equal_index: Vec<Solution>,
    pub notes: Vec<String>,
}

/// Splits off the directly solvable families.
///
/// With `u_0 = 0` a zero index contributes nothing, so tuples with `k`
/// trailing zeros are solutions of the same equation with `t - k` positive
/// indices. Otherwise zeros stay ordinary indices.
pub fn handle_degenerate(instance: &ProblemInstance) -> DegenerateCases {
    let t = instance.t;
    let spec = &instance.spec;
    let mut notes = Vec::new();
    let subcases = if spec.params.u0 == 0 {
        (1..=t)
            .rev()
            .map(|s| Subcase {
                terms: s,
                zero_indices: t - s,
                n_min: 1,
                description: if s == t {
                    "all indices positive".to_string()
                } else {
                    format!("{} trailing zero indices dropped: {s} positive indices", t - s)
                },
            })
            .collect()
    } else {
        notes.push("u0 != 0: zero indices are kept as ordinary terms".to_string());
        vec![Subcase {
            terms: t,
            zero_indices: 0,
            n_min: 0,
            description: "all indices non-negative".to_string(),
        }]
    };
    let equal_index: Vec<Solution> = (0..=instance.brute_limit)
        .filter_map(|n| {
            let v = spec.term(n) * t;
            power_exponent(&v, instance.p).map(|z| Solution {
                indices: vec![n; t as usize],
                z,
            })
        })
        .collect();
    notes.push(format!(
        "equal indices n1 = ... = nt above {} are gap-zero tuples of the reduction",
        instance.brute_limit
    ));
    DegenerateCases {
        subcases,
        equal_index,
        notes,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    pub subcase: Subcase,
    pub certificate: BoundCertificate,
    pub reduction: ReductionTrace,
    /// Reduced bound on `n1` for this family.
    pub n1_bound: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveResult {
    pub degenerate: DegenerateCases,
    pub cases: Vec<CaseResult>,
    /// Every solution has `n1` at most this; the search covered `0..=search_limit`.
    pub search_limit: u64,
    pub solutions: Vec<Solution>,
    /// Highest working precision any reduction needed.
    pub precision_bits: u32,
}

/// Bounds and reduces every subcase, then searches below the largest
/// reduced bound (and never below `brute_limit` or the nonvanishing range).
pub fn solve(instance: &ProblemInstance, opts: &ReductionOptions) -> Result<SolveResult> {
    let degenerate = handle_degenerate(instance);
    let cases = degenerate
        .subcases
        .iter()
        .map(|sc| {
            let cert = n1_bound(&instance.spec, instance.p, sc.terms, instance.brute_limit)?;
            let trace = reduce_cascade(&instance.spec, &cert, sc.n_min, opts)?;
            let n1_bound = trace.final_pass().n1_bound();
            Ok(CaseResult {
                subcase: sc.clone(),
                certificate: cert,
                reduction: trace,
                n1_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut search_limit = instance.brute_limit;
    for c in &cases {
        let nv = c.certificate.nonvanishing_limit.ceil_integer().to_u64().unwrap_or(0);
        search_limit = search_limit.max(c.n1_bound).max(nv);
    }
    let solutions = brute_force(instance, search_limit)?;
    if let Some(bad) = solutions.iter().find(|s| !s.verify(&instance.spec, instance.p)) {
        return Err(Error::Internal(format!("search returned a non-solution {:?}", bad.as_tuple())));
    }
    let precision_bits = cases
        .iter()
        .flat_map(|c| c.reduction.passes.iter())
        .flat_map(|p| p.stages.iter())
        .flat_map(|s| s.records.iter())
        .map(|r| r.outcome.precision_bits)
        .max()
        .unwrap_or(0);
    Ok(SolveResult {
        degenerate,
        cases,
        search_limit,
        solutions,
        precision_bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recurrence::RecurrenceParams;

    fn sol(v: &[u64]) -> Solution {
        let (z, idx) = v.split_last().unwrap();
        Solution { indices: idx.to_vec(), z: *z }
    }

    #[test]
    fn primes() {
        assert!(is_prime(2) && is_prime(3) && is_prime(1_000_000_007));
        assert!(!is_prime(1) && !is_prime(91) && !is_prime(3_215_031_751));
    }

    #[test]
    fn instance_guards() {
        let s = RecurrenceSpec::balancing();
        assert!(ProblemInstance::new(s.clone(), 4, 3, 100).is_err());
        assert!(ProblemInstance::new(s.clone(), 3, 1, 100).is_err());
        assert!(ProblemInstance::new(s.clone(), 3, 6, 100).is_err());
        assert!(ProblemInstance::new(s, 3, 3, 100).is_ok());
    }

    #[test]
    fn powers() {
        assert_eq!(power_exponent(&Integer::from(1), 3), Some(0));
        assert_eq!(power_exponent(&Integer::from(243), 3), Some(5));
        assert_eq!(power_exponent(&Integer::from(0), 3), None);
        assert_eq!(power_exponent(&Integer::from(-3), 3), None);
        assert_eq!(power_exponent(&Integer::from(6), 3), None);
    }

    #[test]
    fn balancing_three_terms_small_search() {
        let inst = ProblemInstance::balancing(3);
        let found = brute_force(&inst, 100).unwrap();
        assert_eq!(found, vec![sol(&[1, 0, 0, 0]), sol(&[1, 1, 1, 1])]);
        let strict: Vec<_> = found
            .iter()
            .filter(|s| s.indices[2] >= 1 && s.indices[1] < s.indices[0])
            .collect();
        assert!(strict.is_empty());
    }

    #[test]
    fn single_tuple_search() {
        let spec = RecurrenceSpec::new(RecurrenceParams::new(1, 1, 1, 1)).unwrap();
        let inst = ProblemInstance::new(spec, 2, 2, 3).unwrap();
        assert_eq!(brute_force(&inst, 0).unwrap(), vec![sol(&[0, 0, 1])]);
    }

    #[test]
    fn degenerate_families() {
        let d = handle_degenerate(&ProblemInstance::balancing(3));
        assert_eq!(d.subcases.iter().map(|s| s.terms).collect::<Vec<_>>(), vec![3, 2, 1]);
        assert_eq!(d.equal_index, vec![sol(&[1, 1, 1, 1])]);
        let spec = RecurrenceSpec::new(RecurrenceParams::new(1, 1, 2, 1)).unwrap();
        let d = handle_degenerate(&ProblemInstance::new(spec, 2, 2, 10).unwrap());
        assert_eq!(d.subcases.len(), 1);
        assert_eq!(d.subcases[0].n_min, 0);
    }

    #[test]
    fn search_guard() {
        let inst = ProblemInstance::balancing(5);
        assert!(matches!(brute_force(&inst, 500), Err(Error::Resource(_))));
    }
}
