//! Property tests checked against independent reference computations.

use fgrt::fuzzy::{conjoin, Condition, FeaturePartition, LinguisticTerm, TNorm, Trapezoid};
use fgrt::partition::{
    optimize_partition, quantile_partition_unsorted, separability_index, EncodedPartition,
    SearchConfig,
};
use fgrt::tree::{fuzzy_gini, impurity_gain};
use proptest::prelude::*;

fn labels3() -> Vec<String> {
    vec!["Low".into(), "Medium".into(), "High".into()]
}

fn encoded(increments: Vec<f64>) -> EncodedPartition {
    EncodedPartition {
        feature_name: "x".into(),
        labels: labels3(),
        increments,
        domain_min: -1.5,
        domain_max: 2.5,
    }
}

/// Classical Gini of the labels selected by a crisp mask.
fn crisp_gini(mask: &[bool], labels: &[usize], n_classes: usize) -> Option<f64> {
    let selected: Vec<usize> = labels
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&y, _)| y)
        .collect();
    if selected.is_empty() {
        return None;
    }
    let n = selected.len() as f64;
    let mut impurity = 1.0;
    for c in 0..n_classes {
        let count = selected.iter().filter(|&&y| y == c).count() as f64;
        impurity -= (count / n).powi(2);
    }
    Some(impurity)
}

/// Separability computed term by term, class by class, straight from the
/// definition with nested loops over the samples.
fn naive_si(p: &FeaturePartition, values: &[f64], labels: &[usize], n_classes: usize) -> f64 {
    let mut si = 0.0;
    for v in 0..p.len() {
        let mut denominator = 0.0;
        for &x in values {
            denominator += p.terms[v].shape.membership(x).max(edge_plateau(p, v, x));
        }
        if denominator == 0.0 {
            continue;
        }
        for c in 0..n_classes {
            let mut numerator = 0.0;
            for (i, &x) in values.iter().enumerate() {
                if labels[i] == c {
                    numerator += p.terms[v].shape.membership(x).max(edge_plateau(p, v, x));
                }
            }
            si += numerator * numerator / denominator;
        }
    }
    si
}

/// Edge terms stay at 1 beyond their outer plateau edge.
fn edge_plateau(p: &FeaturePartition, v: usize, x: f64) -> f64 {
    let t = &p.terms[v].shape;
    if (v == 0 && x <= t.c) || (v + 1 == p.len() && x >= t.b) {
        1.0
    } else {
        0.0
    }
}

fn increments_strategy() -> impl Strategy<Value = Vec<f64>> {
    // a mix of exact zeros and positive steps, never all zero after slot 0
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..5.0], 12)
        .prop_filter("non-degenerate", |v| v[1..].iter().any(|x| *x > 0.0))
}

fn dataset_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<usize>, usize)> {
    (2usize..=4).prop_flat_map(|c| {
        (prop::collection::vec(-3.0f64..3.0, 5..60), Just(c)).prop_flat_map(|(values, c)| {
            let n = values.len();
            (Just(values), prop::collection::vec(0..c, n), Just(c))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn any_non_negative_increments_decode_to_a_valid_partition(inc in increments_strategy()) {
        let p = encoded(inc).decode().unwrap();
        prop_assert!(p.validate().is_ok());
        prop_assert!(p.uncovered_point().is_none());
        prop_assert_eq!(p.terms[0].shape.a, -1.5);
        prop_assert_eq!(p.terms[2].shape.d, 2.5);
    }

    #[test]
    fn positive_increments_roundtrip(inc in prop::collection::vec(0.01f64..5.0, 12)) {
        let e = encoded(inc.clone());
        let p = e.decode().unwrap();
        let back = EncodedPartition::encode(&p).unwrap();
        // decode anchors at the domain minimum and rescales the rest
        let scale = 4.0 / inc[1..].iter().sum::<f64>();
        prop_assert!(back.increments[0].abs() <= 1e-12);
        for (b, i) in back.increments[1..].iter().zip(&inc[1..]) {
            prop_assert!((b - i * scale).abs() <= 1e-12, "{} vs {}", b, i * scale);
        }
        let again = back.decode().unwrap();
        for (t, u) in p.terms.iter().zip(&again.terms) {
            for (x, y) in [(t.shape.a, u.shape.a), (t.shape.b, u.shape.b), (t.shape.c, u.shape.c), (t.shape.d, u.shape.d)] {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn crisp_memberships_reduce_to_classical_gini(
        (mask, labels, c) in (2usize..=4, 1usize..=50).prop_flat_map(|(c, n)| {
            (prop::collection::vec(any::<bool>(), n), prop::collection::vec(0..c, n), Just(c))
        })
    ) {
        let mu: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
        let fuzzy = fuzzy_gini(&mu, &labels, c);
        let crisp = crisp_gini(&mask, &labels, c);
        match (fuzzy, crisp) {
            (Some(f), Some(g)) => prop_assert!((f - g).abs() <= 1e-12),
            (None, None) => {}
            other => prop_assert!(false, "dead-node mismatch {:?}", other),
        }
    }

    #[test]
    fn gain_is_the_gini_difference(
        (parent, term, labels, c) in (2usize..=4, 1usize..=40).prop_flat_map(|(c, n)| {
            (
                prop::collection::vec(0.0f64..=1.0, n),
                prop::collection::vec(0.0f64..=1.0, n),
                prop::collection::vec(0..c, n),
                Just(c),
            )
        })
    ) {
        let child: Vec<f64> = parent.iter().zip(&term).map(|(p, t)| conjoin(TNorm::Product, *p, *t)).collect();
        let gain = impurity_gain(&parent, &child, &labels, c);
        // independent evaluation of the impurity on both rules
        let gini = |mu: &[f64]| -> Option<f64> {
            let total: f64 = mu.iter().sum();
            if total == 0.0 {
                return None;
            }
            Some(1.0 - (0..c).map(|k| {
                let m: f64 = mu.iter().zip(&labels).filter(|(_, &y)| y == k).map(|(v, _)| v).sum();
                (m / total).powi(2)
            }).sum::<f64>())
        };
        match (gini(&parent), gini(&child)) {
            (Some(p), Some(ch)) => prop_assert!((gain - (p - ch)).abs() <= 1e-12),
            _ => prop_assert_eq!(gain, f64::NEG_INFINITY),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn separability_matches_double_loop(
        inc in increments_strategy(),
        (values, labels, c) in dataset_strategy(),
    ) {
        let p = encoded(inc).decode().unwrap();
        let fast = separability_index(&p, &values, &labels, c).value;
        let slow = naive_si(&p, &values, &labels, c);
        prop_assert!((fast - slow).abs() <= 1e-9 * slow.abs().max(1.0), "{} vs {}", fast, slow);
    }

    #[test]
    fn separability_ignores_class_names(
        inc in increments_strategy(),
        (values, labels, c) in dataset_strategy(),
        shift in 1usize..4,
    ) {
        let p = encoded(inc).decode().unwrap();
        let relabelled: Vec<usize> = labels.iter().map(|y| (y + shift) % c).collect();
        let a = separability_index(&p, &values, &labels, c).value;
        let b = separability_index(&p, &values, &relabelled, c).value;
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn optimizer_never_loses_separability((values, labels, c) in dataset_strategy()) {
        let Ok(initial) = quantile_partition_unsorted("x", &values, 3) else {
            return Ok(());
        };
        let config = SearchConfig::default();
        let out = optimize_partition(&values, &labels, c, &config, &initial).unwrap();
        prop_assert!(out.si_after >= out.si_before);
        prop_assert!(out.evaluations <= config.evaluation_budget());
        prop_assert!(out.partition.validate().is_ok());
        let rescored = separability_index(&out.partition, &values, &labels, c).value;
        prop_assert!((rescored - out.si_after).abs() <= 1e-9 * rescored.max(1.0));
    }

    #[test]
    fn rule_membership_is_the_tnorm_fold(x0 in -2.0f64..2.0, x1 in -2.0f64..2.0, t0 in 0usize..3, t1 in 0usize..3) {
        let shape = |a, b, c, d| Trapezoid::new(a, b, c, d).unwrap();
        let p = FeaturePartition::new(
            "f",
            vec![
                LinguisticTerm::new("Low", shape(-2.0, -2.0, -0.5, 0.0)),
                LinguisticTerm::new("Medium", shape(-0.5, 0.0, 0.0, 0.5)),
                LinguisticTerm::new("High", shape(0.0, 0.5, 2.0, 2.0)),
            ],
            -2.0,
            2.0,
        ).unwrap();
        let partitions = vec![Some(p.clone()), Some(p.clone())];
        let conditions = [Condition::new(0, t0), Condition::new(1, t1)];
        for tnorm in [TNorm::Product, TNorm::Minimum] {
            let mu = fgrt::fuzzy::rule_membership(&conditions, &partitions, &[x0, x1], tnorm).unwrap();
            let expected = conjoin(tnorm, p.term_membership(t0, x0), p.term_membership(t1, x1));
            prop_assert!((mu - expected).abs() <= 1e-15);
        }
    }
}
