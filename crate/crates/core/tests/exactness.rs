//! Closed forms against enumeration.

use hraid_core::analytic::{
    compare_apportionments, hraid_reliability, hraid_unreliability, leading_term, Apportionment,
    DiskReliability,
};
use hraid_core::oracle::{exact_reliability_enum, markov_mttdl};
use hraid_core::{FailureModel, HraidConfig};
use proptest::prelude::*;

fn small_configs() -> impl Iterator<Item = HraidConfig> {
    (1..=5usize).flat_map(|n| {
        (1..=5usize).flat_map(move |m| {
            (0..=2usize)
                .flat_map(move |k| (0..=2usize).map(move |l| (n, m, k, l)))
                .filter_map(|(n, m, k, l)| HraidConfig::new(n, m, k, l).ok())
        })
    })
}

#[test]
fn leading_coefficient_counts_minimal_fatal_sets() {
    for c in small_configs() {
        let poly = exact_reliability_enum(&c).unwrap();
        let lt = leading_term(&c);
        assert_eq!(poly.fatal_count(lt.power as usize), &lt.coefficient, "{c}");
    }
}

#[test]
fn unreliability_matches_enumeration_at_tiny_eps() {
    for c in small_configs() {
        let poly = exact_reliability_enum(&c).unwrap();
        for e in [1e-5, 1e-8] {
            let eps = DiskReliability::new(e).unwrap();
            let a = hraid_unreliability(&c, eps);
            let b = poly.unreliability(eps);
            assert!(((a - b) / b).abs() < 1e-12, "{c} eps={e}: {a} vs {b}");
        }
    }
}

#[test]
fn comparison_agrees_with_exact_reliability() {
    let eps = DiskReliability::new(1e-3).unwrap();
    for nm in 4..=6 {
        let r12 = hraid_reliability(&HraidConfig::new(nm, nm, 1, 2).unwrap(), eps);
        let r21 = hraid_reliability(&HraidConfig::new(nm, nm, 2, 1).unwrap(), eps);
        let cmp = compare_apportionments(nm, nm).unwrap();
        let by_value = if r12 > r21 {
            Apportionment::OneTwoBetter
        } else {
            Apportionment::TwoOneBetter
        };
        assert_eq!(cmp.ordering, by_value, "N=M={nm}");
    }
}

#[test]
fn mttdl_strictly_monotone_at_twelve() {
    for gamma in [0.0, 1e-6] {
        let rates = FailureModel::new(1e-6, gamma).unwrap();
        let t = |k, l| markov_mttdl(&HraidConfig::new(12, 12, k, l).unwrap(), &rates);
        for k in 0..3 {
            for l in 0..3 {
                assert!(t(k + 1, l) > t(k, l));
                assert!(t(k, l + 1) > t(k, l));
            }
        }
    }
}

proptest! {
    #[test]
    fn reliability_matches_enumeration(
        n in 1usize..=6, m in 1usize..=6, k in 0usize..=3, l in 0usize..=3, e in 1e-4f64..0.9,
    ) {
        prop_assume!(k < n && l < m);
        let c = HraidConfig::new(n, m, k, l).unwrap();
        let eps = DiskReliability::new(e).unwrap();
        let a = hraid_reliability(&c, eps);
        let b = exact_reliability_enum(&c).unwrap().reliability(eps);
        prop_assert!(((a - b) / b).abs() < 1e-11, "{} eps={}: {} vs {}", c, e, a, b);
    }
}
