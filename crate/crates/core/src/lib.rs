//! Fuzzy greedy rule trees.
//!
//! Rules are conjunctions of linguistic conditions (`petal_width IS High`)
//! over trapezoidal partitions of each feature. A tree is grown best-first by
//! fuzzy Gini gain under a rule budget, and every leaf becomes one readable
//! rule. Partitions are quantile-placed by default and can be tuned per
//! feature to maximize a class separability index.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod fuzzy;
pub mod inference;
pub mod model;
pub mod partition;
pub mod tree;

pub use data::{Dataset, FoldPlan, Normalizer};
pub use error::{FgrtError, Result};
pub use fuzzy::{Condition, FeaturePartition, LinguisticTerm, TNorm, Trapezoid};
pub use inference::{classify, explain, Prediction};
pub use model::{fit, FgrtModel, FitConfig, FuzzyRule};
pub use partition::{EncodedPartition, SearchConfig, SeparabilityScore};
pub use tree::{Aggregation, TreeConfig};
