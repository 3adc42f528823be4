use fgrt::data::{Dataset, FeatureStats};
use fgrt::fuzzy::{Condition, FeaturePartition, LinguisticTerm, Trapezoid};
use fgrt::model::{assemble, build_partitions, fit, FitConfig, ModelMetadata};
use fgrt::partition::quantile_partition_unsorted;
use fgrt::tree::{grow_tree, TreeConfig};
use fgrt::{classify, eval};

fn three_terms(low: [f64; 4], mid: [f64; 4], high: [f64; 4]) -> FeaturePartition {
    let t = |p: [f64; 4]| Trapezoid::new(p[0], p[1], p[2], p[3]).unwrap();
    FeaturePartition::new(
        "x",
        vec![
            LinguisticTerm::new("Low", t(low)),
            LinguisticTerm::new("Medium", t(mid)),
            LinguisticTerm::new("High", t(high)),
        ],
        0.0,
        1.0,
    )
    .unwrap()
}

fn gini(mu: &[f64], labels: &[usize], n_classes: usize) -> f64 {
    let total: f64 = mu.iter().sum();
    let mut g = 1.0;
    for c in 0..n_classes {
        let m: f64 = mu
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y == c)
            .map(|(v, _)| v)
            .sum();
        g -= (m / total).powi(2);
    }
    g
}

#[test]
fn aligned_one_dimensional_split() {
    let partition = three_terms(
        [0.0, 0.0, 0.2, 0.4],
        [0.3, 0.45, 0.55, 0.7],
        [0.6, 0.75, 1.0, 1.0],
    );
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..=30 {
        x.push(vec![i as f64 / 100.0]);
        y.push(0);
        x.push(vec![0.7 + i as f64 / 100.0]);
        y.push(1);
    }
    let config = TreeConfig {
        max_rules: 2,
        ..Default::default()
    };
    let partitions = vec![Some(partition)];
    let tree = grow_tree(&x, &y, 2, &partitions, &config).unwrap();
    let model = assemble(
        &tree,
        vec!["x".into()],
        vec!["left".into(), "right".into()],
        vec![FeatureStats {
            mean: 0.0,
            std: 1.0,
        }],
        partitions,
        config,
        ModelMetadata::default(),
    );
    let rules: Vec<(Vec<Condition>, usize)> = model
        .rules
        .iter()
        .map(|r| (r.conditions.clone(), r.predicted_class))
        .collect();
    assert_eq!(
        rules,
        vec![
            (vec![Condition::new(0, 0)], 0),
            (vec![Condition::new(0, 2)], 1)
        ]
    );
    for (row, &label) in x.iter().zip(&y) {
        assert_eq!(classify(&model, row).unwrap().predicted_class, label);
    }
    for (v, label) in [
        (0.05, 0),
        (0.17, 0),
        (0.28, 0),
        (0.72, 1),
        (0.81, 1),
        (0.99, 1),
    ] {
        assert_eq!(
            classify(&model, &[v]).unwrap().predicted_class,
            label,
            "x = {v}"
        );
    }
}

/// Two-feature parity with unequal quadrant sizes so single conditions
/// already carry some gain.
fn skewed_xor() -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let quadrants = [
        ((0.5, 0.5), 0, 40),
        ((-0.5, -0.5), 0, 10),
        ((0.5, -0.5), 1, 20),
        ((-0.5, 0.5), 1, 30),
    ];
    for ((cx, cy), label, count) in quadrants {
        for i in 0..count {
            let jitter = 0.4 * (i as f64 / count as f64 - 0.5);
            x.push(vec![cx + jitter, cy - jitter * 0.7]);
            y.push(label);
        }
    }
    (x, y)
}

#[test]
fn parity_needs_two_conditions() {
    let (x, y) = skewed_xor();
    let partitions: Vec<Option<FeaturePartition>> = (0..2)
        .map(|f| {
            let column: Vec<f64> = x.iter().map(|r| r[f]).collect();
            Some(quantile_partition_unsorted(&format!("x{f}"), &column, 3).unwrap())
        })
        .collect();
    let config = TreeConfig {
        min_gain_theta: 0.0,
        ..Default::default()
    };
    let tree = grow_tree(&x, &y, 2, &partitions, &config).unwrap();

    // the first expansion must be the best single condition found by brute force
    let root_gini = gini(&vec![1.0; y.len()], &y, 2);
    let mut best: Option<(f64, Condition)> = None;
    for (f, p) in partitions.iter().enumerate() {
        let p = p.as_ref().unwrap();
        for t in 0..p.len() {
            let mu: Vec<f64> = x.iter().map(|r| p.term_membership(t, r[f])).collect();
            if mu.iter().sum::<f64>() == 0.0 {
                continue;
            }
            let gain = root_gini - gini(&mu, &y, 2);
            if best.is_none_or(|(g, _)| gain > g + 1e-12) {
                best = Some((gain, Condition::new(f, t)));
            }
        }
    }
    assert_eq!(tree.nodes[1].conditions, vec![best.unwrap().1]);

    let rules: Vec<_> = tree
        .rule_nodes()
        .map(|(_, n)| n.conditions.clone())
        .collect();
    assert!(rules.iter().any(|c| c.len() == 2), "rules: {rules:?}");
    for conditions in &rules {
        let mut features: Vec<usize> = conditions.iter().map(|c| c.feature).collect();
        features.sort_unstable();
        features.dedup();
        assert_eq!(features.len(), conditions.len());
    }
}

fn wine_like() -> Dataset {
    eval::gaussian_classes(150, 4, 3, 1.5, 9)
}

#[test]
fn identical_inputs_give_identical_models() {
    let ds = wine_like();
    let config = FitConfig {
        optimize_partitions: true,
        ..Default::default()
    };
    let a = fit(&ds, &config, 1).unwrap().to_json().unwrap();
    let b = fit(&ds, &config, 1).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn staged_pipeline_matches_fit() {
    let ds = wine_like();
    let config = FitConfig::default();
    let model = fit(&ds, &config, 3).unwrap();

    let set = build_partitions(&ds, &config).unwrap();
    let z = set.normalizer.apply(&ds.x);
    let tree = grow_tree(&z, &ds.y, ds.n_classes(), &set.partitions, &config.tree).unwrap();
    let staged = assemble(
        &tree,
        ds.feature_names.clone(),
        ds.class_names.clone(),
        set.normalizer.stats,
        set.partitions,
        config.tree.clone(),
        model.metadata.clone(),
    );
    assert_eq!(staged.to_json().unwrap(), model.to_json().unwrap());

    // each rule's stored support is the firing mass over the training rows
    for rule in &model.rules {
        let mass: f64 = z
            .iter()
            .map(|row| {
                fgrt::fuzzy::rule_membership(
                    &rule.conditions,
                    &model.partitions,
                    row,
                    config.tree.tnorm,
                )
                .unwrap()
            })
            .sum();
        assert!(
            (mass - rule.support).abs() <= 1e-9 * mass.max(1.0),
            "{mass} vs {}",
            rule.support
        );
    }
}

#[test]
fn affine_rescaling_leaves_rules_unchanged() {
    let ds = wine_like();
    let scaled_x: Vec<Vec<f64>> =
        ds.x.iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, v)| v * (2.0 + j as f64) - 7.0)
                    .collect()
            })
            .collect();
    let scaled = Dataset::new(
        "scaled",
        ds.feature_names.clone(),
        scaled_x.clone(),
        ds.y.clone(),
        ds.class_names.clone(),
    )
    .unwrap();
    let config = FitConfig::default();
    let a = fit(&ds, &config, 0).unwrap();
    let b = fit(&scaled, &config, 0).unwrap();
    let conditions = |m: &fgrt::FgrtModel| -> Vec<(Vec<Condition>, usize)> {
        m.rules
            .iter()
            .map(|r| (r.conditions.clone(), r.predicted_class))
            .collect()
    };
    assert_eq!(conditions(&a), conditions(&b));
    for (raw, rescaled) in ds.x.iter().zip(&scaled_x) {
        assert_eq!(
            classify(&a, raw).unwrap().predicted_class,
            classify(&b, rescaled).unwrap().predicted_class
        );
    }
}
