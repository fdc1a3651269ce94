use proptest::prelude::*;
use rug::ops::Pow;
use rug::{Integer, Rational};

use recpow::decimal::Decimal;
use recpow::pipeline::{brute_force, power_exponent, ProblemInstance};
use recpow::qfield::QuadElem;
use recpow::real::HighPrecReal;
use recpow::recurrence::{RecurrenceParams, RecurrenceSpec};
use recpow::reduction::{cf_expand, dp_reduce, gamma_real, mu_real, StageFunctions};

fn spec_strategy() -> impl Strategy<Value = RecurrenceSpec> {
    (-9i64..=9, -9i64..=9, -9i64..=9, -9i64..=9).prop_filter_map("degenerate", |(p, q, u0, u1)| {
        RecurrenceSpec::new(RecurrenceParams::new(p, q, u0, u1)).ok()
    })
}

fn quad_strategy() -> impl Strategy<Value = QuadElem> {
    (-50i64..=50, 1i64..=9, -50i64..=50, 1i64..=9, prop::sample::select(vec![2i64, 3, 5, 13]))
        .prop_map(|(a, b, c, d, r)| QuadElem::new(Rational::from((a, b)), Rational::from((c, d)), r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binet_matches_iteration(spec in spec_strategy(), n in 0u64..80) {
        prop_assert_eq!(spec.binet_term(n).unwrap(), spec.term(n));
    }

    #[test]
    fn decimal_rounding_is_directed(num in -10_000_000i64..10_000_000, den in 1i64..100_000, sig in 1u32..6) {
        let x = Rational::from((num, den));
        let up = Decimal::round_up(&x, sig);
        let down = Decimal::round_down(&x, sig);
        prop_assert!(up.to_rational() >= x);
        prop_assert!(down.to_rational() <= x);
        prop_assert!(up.mantissa().significant_bits() <= 4 * sig);
        let text = up.to_string();
        prop_assert_eq!(text.parse::<Decimal>().unwrap().to_rational(), up.to_rational());
    }

    #[test]
    fn quadratic_field_identities(x in quad_strategy(), y in quad_strategy()) {
        // same radicand for both
        let y = QuadElem::new(y.x().clone(), y.y().clone(), x.radicand().clone());
        prop_assert_eq!((&x * &y).norm(), x.norm() * y.norm());
        if !y.is_zero() {
            prop_assert_eq!(&(&x * &y) / &y, x.clone());
        }
        let v = x.to_real(128);
        let (lo, hi) = v.rational_bounds();
        prop_assert!(lo <= hi);
        if !x.is_zero() {
            prop_assert_eq!(x.signum(), if v.is_positive() { std::cmp::Ordering::Greater } else { std::cmp::Ordering::Less });
        }
    }

    #[test]
    fn interval_log_encloses_value(n in 1u64..1_000_000_000, d in 1u64..1000) {
        let r = Rational::from((n, d));
        let x = HighPrecReal::from_rational(&r, 128).ln().unwrap();
        let f = (n as f64 / d as f64).ln();
        prop_assert!((x.to_f64() - f).abs() <= 1e-12 * f.abs().max(1.0));
        let e = x.exp();
        prop_assert!(e.contains_rational(&r));
    }

    #[test]
    fn search_matches_naive_enumeration(spec in spec_strategy(), p in prop::sample::select(vec![2u64, 3, 5, 7]), n_max in 0u64..25) {
        let inst = ProblemInstance::new(spec.clone(), p, 2, 3).unwrap();
        let found: Vec<Vec<u64>> = brute_force(&inst, n_max).unwrap().iter().map(|s| s.as_tuple()).collect();
        let mut naive = Vec::new();
        for n1 in 0..=n_max {
            for n2 in 0..=n1 {
                let sum = spec.term(n1) + spec.term(n2);
                if let Some(z) = power_exponent(&sum, p) {
                    naive.push(vec![n1, n2, z]);
                }
            }
        }
        prop_assert_eq!(found, naive);
    }
}

#[test]
fn convergent_determinants_and_precision_stability() {
    let spec = RecurrenceSpec::balancing();
    for p in [2u64, 3, 5, 7] {
        let lo = cf_expand(&gamma_real(&spec, p, 512).unwrap(), usize::MAX).unwrap();
        let hi = cf_expand(&gamma_real(&spec, p, 1024).unwrap(), usize::MAX).unwrap();
        assert!(hi.certified_upto >= lo.certified_upto);
        assert_eq!(&hi.partial_quotients[..lo.certified_upto], &lo.partial_quotients[..]);
        for k in 1..hi.convergents.len() {
            let (p1, q1) = &hi.convergents[k];
            let (p0, q0) = &hi.convergents[k - 1];
            let det = Integer::from(p1 * q0) - Integer::from(p0 * q1);
            assert_eq!(det, if k % 2 == 1 { 1 } else { -1 });
        }
    }
}

#[test]
fn epsilon_is_stable_under_precision_doubling() {
    let spec = RecurrenceSpec::balancing();
    let sf = StageFunctions::new(&spec, 8).unwrap();
    let m = Integer::from(10).pow(46u32);
    for x in 0..8 {
        let g3 = sf.phi(x).unwrap();
        let run = |bits: u32| {
            let gamma = gamma_real(&spec, 3, bits).unwrap();
            let mu = mu_real(&spec, &g3, bits).unwrap();
            let a = HighPrecReal::from_i64(4, bits);
            let lb = spec.abs_alpha(bits).ln().unwrap();
            dp_reduce(&gamma, &mu, &a, &lb, &m).unwrap()
        };
        let (a, b) = (run(512), run(1024));
        assert_eq!((a.k, a.m_bound), (b.k, b.m_bound), "x = {x}");
        let (ea, eb) = (a.epsilon.to_f64(), b.epsilon.to_f64());
        assert!(ea > 0.0 && ((ea - eb) / eb).abs() < 1e-2, "x = {x}: {ea} vs {eb}");
    }
}
