//! Greedy induction of fuzzy rule trees.

mod grow;
mod impurity;

pub(crate) use grow::argmax as argmax_class;
pub use grow::{grow_tree, GrownTree, TreeNode};
pub use impurity::{fuzzy_gini, impurity_gain};

use serde::{Deserialize, Serialize};

use crate::error::{FgrtError, Result};
use crate::fuzzy::TNorm;

/// How rule activations are combined into class scores at inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Each class takes its single strongest rule.
    #[default]
    Max,
    /// Each class sums over all rules.
    Additive,
}

impl std::str::FromStr for Aggregation {
    type Err = FgrtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(Aggregation::Max),
            "additive" | "sum" => Ok(Aggregation::Additive),
            other => Err(FgrtError::Config(format!("unknown aggregation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    /// Cap on emitted rules (leaves).
    pub max_rules: usize,
    /// Cap on conditions per rule.
    pub max_depth: usize,
    /// An expansion must lower the fuzzy Gini by strictly more than this.
    pub min_gain_theta: f64,
    /// Nodes holding less than this fraction of the root's membership mass
    /// are not expanded.
    pub coverage_threshold: f64,
    /// Below this best-rule firing, inference falls back to internal nodes.
    pub firing_threshold: f64,
    pub tnorm: TNorm,
    pub aggregation: Aggregation,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_rules: 15,
            max_depth: 5,
            min_gain_theta: 0.01,
            coverage_threshold: 0.05,
            firing_threshold: 0.05,
            tnorm: TNorm::Product,
            aggregation: Aggregation::Max,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_rules == 0 {
            return Err(FgrtError::Config("max_rules must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(FgrtError::Config("max_depth must be at least 1".into()));
        }
        if !(self.min_gain_theta >= 0.0 && self.min_gain_theta.is_finite()) {
            return Err(FgrtError::Config(format!(
                "min_gain_theta must be non-negative, got {}",
                self.min_gain_theta
            )));
        }
        for (name, v) in [
            ("coverage_threshold", self.coverage_threshold),
            ("firing_threshold", self.firing_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(FgrtError::Config(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TreeConfig::default().validate().unwrap();
        let bad = TreeConfig {
            coverage_threshold: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TreeConfig {
            max_rules: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
