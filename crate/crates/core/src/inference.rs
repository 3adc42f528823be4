//! Classification and explanations with a trained model.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{FgrtError, Result};
use crate::fuzzy::rule_membership;
use crate::model::FgrtModel;
use crate::tree::{argmax_class, Aggregation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub predicted_class: usize,
    pub class_scores: Vec<f64>,
    /// `(rule index, firing strength)` for every rule with non-zero firing,
    /// strongest first.
    pub fired_rules: Vec<(usize, f64)>,
    /// Rule that produced the winning score, absent on fallback.
    pub winning_rule: Option<usize>,
    pub fallback_used: bool,
    /// Internal node used for the fallback; `None` means the root prior.
    pub fallback_node: Option<usize>,
}

/// Classifies one raw (unnormalized) sample.
pub fn classify(model: &FgrtModel, x_raw: &[f64]) -> Result<Prediction> {
    if x_raw.len() != model.n_features() {
        return Err(FgrtError::ArityMismatch {
            expected: model.n_features(),
            actual: x_raw.len(),
        });
    }
    let z: Vec<f64> = x_raw
        .iter()
        .zip(&model.normalization)
        .map(|(&v, s)| s.apply(v))
        .collect();
    classify_normalized(model, &z)
}

/// Classifies a sample already mapped through the model's normalization.
pub fn classify_normalized(model: &FgrtModel, z: &[f64]) -> Result<Prediction> {
    let tnorm = model.config.tnorm;
    let n_classes = model.n_classes();
    let mut firings = Vec::with_capacity(model.rules.len());
    for rule in &model.rules {
        firings.push(rule_membership(
            &rule.conditions,
            &model.partitions,
            z,
            tnorm,
        )?);
    }
    let mut fired_rules: Vec<(usize, f64)> = firings
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, f)| *f > 0.0)
        .collect();
    // stable: equal strengths keep rule order
    fired_rules.sort_by(|a, b| b.1.total_cmp(&a.1));

    let strongest = fired_rules.first().map_or(0.0, |r| r.1);
    if model.rules.is_empty() || strongest < model.config.firing_threshold {
        return fallback(model, z, fired_rules);
    }

    let mut scores = vec![0.0; n_classes];
    let mut sources: Vec<Option<usize>> = vec![None; n_classes];
    for (r, rule) in model.rules.iter().enumerate() {
        for c in 0..n_classes {
            let s = firings[r] * rule.confidence[c];
            match model.config.aggregation {
                Aggregation::Max => {
                    if s > scores[c] {
                        scores[c] = s;
                        sources[c] = Some(r);
                    }
                }
                Aggregation::Additive => {
                    scores[c] += s;
                    if s > 0.0
                        && sources[c]
                            .is_none_or(|best| s > firings[best] * model.rules[best].confidence[c])
                    {
                        sources[c] = Some(r);
                    }
                }
            }
        }
    }
    let predicted_class = argmax_class(&scores);
    Ok(Prediction {
        predicted_class,
        class_scores: scores,
        winning_rule: sources[predicted_class],
        fired_rules,
        fallback_used: false,
        fallback_node: None,
    })
}

/// Deepest internal node still firing above the threshold, else the root.
fn fallback(model: &FgrtModel, z: &[f64], fired_rules: Vec<(usize, f64)>) -> Result<Prediction> {
    let mut best: Option<(usize, usize, f64)> = None; // (node, depth, firing)
    for (i, node) in model.fallback.iter().enumerate() {
        let f = rule_membership(&node.conditions, &model.partitions, z, model.config.tnorm)?;
        if f < model.config.firing_threshold || f <= 0.0 {
            continue;
        }
        let depth = node.conditions.len();
        let better = match best {
            None => true,
            Some((_, d, bf)) => depth > d || (depth == d && f > bf),
        };
        if better {
            best = Some((i, depth, f));
        }
    }
    let (fallback_node, scores) = match best {
        Some((i, _, _)) => (Some(i), model.fallback[i].distribution.clone()),
        None => (None, model.default_distribution.clone()),
    };
    Ok(Prediction {
        predicted_class: argmax_class(&scores),
        class_scores: scores,
        fired_rules,
        winning_rule: None,
        fallback_used: true,
        fallback_node,
    })
}

pub fn classify_batch(model: &FgrtModel, rows: &[Vec<f64>]) -> Result<Vec<Prediction>> {
    rows.iter().map(|r| classify(model, r)).collect()
}

/// Fired rules in pretty-print form, strongest first, then a fallback
/// note if the rules did not fire strongly enough.
pub fn explain(model: &FgrtModel, x_raw: &[f64]) -> Result<String> {
    let p = classify(model, x_raw)?;
    Ok(render_explanation(model, &p))
}

pub fn render_explanation(model: &FgrtModel, p: &Prediction) -> String {
    let mut out = String::new();
    for &(r, strength) in &p.fired_rules {
        let _ = writeln!(
            out,
            "{} [strength={:.3}]",
            model.rule_text(&model.rules[r]),
            strength
        );
    }
    if p.fallback_used {
        let class = &model.class_names[p.predicted_class];
        match p.fallback_node {
            Some(i) => {
                let _ = writeln!(
                    out,
                    "fallback to ancestor IF {} THEN class={class}",
                    model.antecedent_text(&model.fallback[i].conditions)
                );
            }
            None => {
                let _ = writeln!(out, "fallback to prior: class={class}");
            }
        }
    }
    out
}
