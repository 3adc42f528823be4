//! The trained artifact and the training pipeline that produces it.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureStats, Normalizer};
use crate::error::{FgrtError, Result};
use crate::fuzzy::{Condition, FeaturePartition};
use crate::partition::{
    optimize_partition, quantile_partition_unsorted, OptimizedPartition, SearchConfig,
};
use crate::tree::{grow_tree, GrownTree, TreeConfig, TreeNode};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub conditions: Vec<Condition>,
    pub predicted_class: usize,
    /// Per-class confidence, sums to 1.
    pub confidence: Vec<f64>,
    /// Training membership mass.
    pub support: f64,
}

/// Internal node kept for the low-firing fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackNode {
    pub conditions: Vec<Condition>,
    pub distribution: Vec<f64>,
    pub support: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub partition_ms: f64,
    pub grow_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub dataset: String,
    pub seed: u64,
    pub n_train: usize,
    pub optimized_partitions: bool,
    /// Features left out of the rules because they are constant on the
    /// training data.
    pub dropped_features: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgrtModel {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub normalization: Vec<FeatureStats>,
    /// One slot per raw feature; `None` for dropped features.
    pub partitions: Vec<Option<FeaturePartition>>,
    pub rules: Vec<FuzzyRule>,
    pub fallback: Vec<FallbackNode>,
    pub default_distribution: Vec<f64>,
    pub config: TreeConfig,
    pub metadata: ModelMetadata,
}

impl FgrtModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: FgrtModel = serde_json::from_str(text)?;
        if model.format_version != FORMAT_VERSION {
            return Err(FgrtError::Config(format!(
                "unsupported model format_version {} (expected {FORMAT_VERSION})",
                model.format_version
            )));
        }
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| FgrtError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FgrtError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks that every rule references existing partitions and terms.
    pub fn validate(&self) -> Result<()> {
        let m = self.feature_names.len();
        if self.normalization.len() != m || self.partitions.len() != m {
            return Err(FgrtError::MalformedRule(
                "feature, normalization and partition counts differ".into(),
            ));
        }
        for p in self.partitions.iter().flatten() {
            p.validate()?;
        }
        let all_conditions = self
            .rules
            .iter()
            .map(|r| &r.conditions)
            .chain(self.fallback.iter().map(|n| &n.conditions));
        for conditions in all_conditions {
            for (i, c) in conditions.iter().enumerate() {
                let ok = self
                    .partitions
                    .get(c.feature)
                    .and_then(Option::as_ref)
                    .is_some_and(|p| c.term < p.len());
                if !ok || conditions[..i].iter().any(|o| o.feature == c.feature) {
                    return Err(FgrtError::MalformedRule(format!(
                        "condition {c:?} does not reference a usable term"
                    )));
                }
            }
        }
        if self.rules.len() > self.config.max_rules {
            return Err(FgrtError::MalformedRule(format!(
                "{} rules exceed max_rules {}",
                self.rules.len(),
                self.config.max_rules
            )));
        }
        Ok(())
    }

    pub fn condition_text(&self, c: &Condition) -> String {
        let partition = self.partitions[c.feature].as_ref().expect("validated rule");
        format!(
            "{} IS {}",
            self.feature_names[c.feature], partition.terms[c.term].label
        )
    }

    pub fn antecedent_text(&self, conditions: &[Condition]) -> String {
        conditions
            .iter()
            .map(|c| self.condition_text(c))
            .collect::<Vec<_>>()
            .join(" AND ")
    }

    /// `IF <feature> IS <Term> AND ... THEN class=<c> (confidence=<p>, support=<s>)`
    pub fn rule_text(&self, rule: &FuzzyRule) -> String {
        format!(
            "IF {} THEN class={} (confidence={:.3}, support={:.3})",
            self.antecedent_text(&rule.conditions),
            self.class_names[rule.predicted_class],
            rule.confidence[rule.predicted_class],
            rule.support
        )
    }

    /// One rule per line, plus the default class.
    pub fn rulebase_text(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            let _ = writeln!(out, "{}", self.rule_text(rule));
        }
        let default = crate::tree::argmax_class(&self.default_distribution);
        let _ = writeln!(
            out,
            "DEFAULT class={} (confidence={:.3})",
            self.class_names[default], self.default_distribution[default]
        );
        out
    }

    /// Mean conditions per rule, 0 for an empty rulebase.
    pub fn conditions_per_rule(&self) -> f64 {
        if self.rules.is_empty() {
            0.0
        } else {
            self.total_conditions() as f64 / self.rules.len() as f64
        }
    }

    pub fn total_conditions(&self) -> usize {
        self.rules.iter().map(|r| r.conditions.len()).sum()
    }
}

/// Everything that shapes a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub tree: TreeConfig,
    pub search: SearchConfig,
    pub terms_per_feature: usize,
    pub optimize_partitions: bool,
    /// Record wall-clock timings in the model metadata.
    pub record_timings: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tree: TreeConfig::default(),
            search: SearchConfig::default(),
            terms_per_feature: 3,
            optimize_partitions: false,
            record_timings: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        if self.terms_per_feature < 2 {
            return Err(FgrtError::Config(
                "terms_per_feature must be at least 2".into(),
            ));
        }
        if self.optimize_partitions {
            self.search.validate()?;
            if self.search.parameters_per_feature != self.terms_per_feature {
                return Err(FgrtError::Config(format!(
                    "parameters_per_feature ({}) must equal terms_per_feature ({})",
                    self.search.parameters_per_feature, self.terms_per_feature
                )));
            }
        }
        Ok(())
    }
}

/// Partitions built on training data, plus the search report per feature
/// when optimization ran.
#[derive(Debug, Clone)]
pub struct PartitionSet {
    pub normalizer: Normalizer,
    pub partitions: Vec<Option<FeaturePartition>>,
    pub reports: Vec<Option<OptimizedPartition>>,
    pub dropped: Vec<usize>,
}

/// Normalizes `train`, places quantile partitions on every non-constant
/// feature and optionally tunes them. Features are independent and are
/// processed in parallel.
pub fn build_partitions(train: &Dataset, config: &FitConfig) -> Result<PartitionSet> {
    config.validate()?;
    let normalizer = Normalizer::fit(&train.x)?;
    let z = normalizer.apply(&train.x);
    let k = config.terms_per_feature;
    let per_feature: Vec<Result<Option<(FeaturePartition, Option<OptimizedPartition>)>>> = (0
        ..train.n_features())
        .into_par_iter()
        .map(|f| {
            if normalizer.stats[f].is_degenerate() {
                return Ok(None);
            }
            let column: Vec<f64> = z.iter().map(|r| r[f]).collect();
            let initial = match quantile_partition_unsorted(&train.feature_names[f], &column, k) {
                Ok(p) => p,
                Err(FgrtError::DegenerateFeature(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            if config.optimize_partitions {
                let report = optimize_partition(
                    &column,
                    &train.y,
                    train.n_classes(),
                    &config.search,
                    &initial,
                )?;
                Ok(Some((report.partition.clone(), Some(report))))
            } else {
                Ok(Some((initial, None)))
            }
        })
        .collect();

    let mut partitions = Vec::with_capacity(per_feature.len());
    let mut reports = Vec::with_capacity(per_feature.len());
    let mut dropped = Vec::new();
    for (f, entry) in per_feature.into_iter().enumerate() {
        match entry? {
            Some((p, r)) => {
                partitions.push(Some(p));
                reports.push(r);
            }
            None => {
                partitions.push(None);
                reports.push(None);
                dropped.push(f);
            }
        }
    }
    if dropped.len() == train.n_features() {
        return Err(FgrtError::AllFeaturesDegenerate);
    }
    Ok(PartitionSet {
        normalizer,
        partitions,
        reports,
        dropped,
    })
}

/// Full training pipeline: normalization, partitions, tree, rulebase.
pub fn fit(train: &Dataset, config: &FitConfig, seed: u64) -> Result<FgrtModel> {
    // the clock is only read when asked for; it is unavailable in browsers
    let clock = || config.record_timings.then(Instant::now);
    let elapsed_ms = |t: Option<Instant>| t.map_or(0.0, |t| t.elapsed().as_secs_f64() * 1e3);

    let started = clock();
    let set = build_partitions(train, config)?;
    let partition_ms = elapsed_ms(started);

    let started = clock();
    let z = set.normalizer.apply(&train.x);
    let tree = grow_tree(
        &z,
        &train.y,
        train.n_classes(),
        &set.partitions,
        &config.tree,
    )?;
    let grow_ms = elapsed_ms(started);

    let metadata = ModelMetadata {
        dataset: train.name.clone(),
        seed,
        n_train: train.n_samples(),
        optimized_partitions: config.optimize_partitions,
        dropped_features: set
            .dropped
            .iter()
            .map(|&f| train.feature_names[f].clone())
            .collect(),
        timings: config.record_timings.then_some(Timings {
            partition_ms,
            grow_ms,
        }),
    };
    let model = assemble(
        &tree,
        train.feature_names.clone(),
        train.class_names.clone(),
        set.normalizer.stats,
        set.partitions,
        config.tree.clone(),
        metadata,
    );
    model.validate()?;
    Ok(model)
}

/// Flattens a grown tree into a model: leaves become rules, internal
/// nodes become fallbacks.
pub fn assemble(
    tree: &GrownTree,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    normalization: Vec<FeatureStats>,
    partitions: Vec<Option<FeaturePartition>>,
    config: TreeConfig,
    metadata: ModelMetadata,
) -> FgrtModel {
    let rule = |n: &TreeNode| FuzzyRule {
        conditions: n.conditions.clone(),
        predicted_class: n.majority_class(),
        confidence: n.class_distribution.clone(),
        support: n.support,
    };
    FgrtModel {
        format_version: FORMAT_VERSION,
        feature_names,
        class_names,
        normalization,
        partitions,
        rules: tree.rule_nodes().map(|(_, n)| rule(n)).collect(),
        fallback: tree
            .internal_nodes()
            .map(|(_, n)| FallbackNode {
                conditions: n.conditions.clone(),
                distribution: n.class_distribution.clone(),
                support: n.support,
            })
            .collect(),
        default_distribution: tree.root().class_distribution.clone(),
        config,
        metadata,
    }
}
