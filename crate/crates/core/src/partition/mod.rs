//! Linguistic partition construction and tuning.
//!
//! Default partitions are placed on training-data quantiles. They can then
//! be tuned per feature by a cyclic coordinate search that maximizes the
//! separability index, working through the interleaved increment encoding
//! so every candidate is a valid partition.

mod encoding;
mod search;
mod separability;

pub use encoding::{chain_order, project_chain, ChainSlot, EncodedPartition};
pub use search::{optimize_partition, OptimizedPartition, SearchConfig};
pub use separability::{separability_index, SeparabilityScore};

use crate::error::{FgrtError, Result};
use crate::fuzzy::{default_labels, FeaturePartition, LinguisticTerm, Trapezoid};

/// Linear-interpolation quantile of already sorted values, `p` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Quantile-placed partition with `k` terms.
///
/// `2k` evenly spaced quantiles `q0..q(2k-1)` are taken, from the minimum
/// to the maximum. Each term is a run of four consecutive quantiles,
/// consecutive terms sharing two: with `k = 3` (0/20/40/60/80/100%) the terms
/// are `Low (q0,q0,q1,q2)`, `Medium (q1,q2,q3,q4)` and `High (q3,q4,q5,q5)`.
/// Neighbouring ramps mirror each other, so memberships sum to one and the
/// partition already satisfies the interleaved order.
pub fn quantile_partition(
    feature_name: &str,
    sorted_values: &[f64],
    k: usize,
) -> Result<FeaturePartition> {
    if k < 2 {
        return Err(FgrtError::Config(format!(
            "at least two terms per feature are required, got {k}"
        )));
    }
    let (Some(&lo), Some(&hi)) = (sorted_values.first(), sorted_values.last()) else {
        return Err(FgrtError::EmptyData);
    };
    if sorted_values.iter().any(|v| !v.is_finite()) {
        return Err(FgrtError::InvalidPartition(format!(
            "feature `{feature_name}` has non-finite values"
        )));
    }
    if lo == hi {
        return Err(FgrtError::DegenerateFeature(feature_name.to_string()));
    }
    debug_assert!(sorted_values.windows(2).all(|w| w[0] <= w[1]));

    let last = 2 * k - 1;
    let q: Vec<f64> = (0..=last)
        .map(|i| match i {
            0 => lo,
            i if i == last => hi,
            i => quantile_sorted(sorted_values, i as f64 / last as f64),
        })
        .collect();
    let labels = default_labels(k);
    let mut terms = Vec::with_capacity(k);
    for (i, label) in labels.into_iter().enumerate() {
        let (a, b, c, d) = if i == 0 {
            (q[0], q[0], q[1], q[2])
        } else if i == k - 1 {
            (q[last - 2], q[last - 1], q[last], q[last])
        } else {
            (q[2 * i - 1], q[2 * i], q[2 * i + 1], q[2 * i + 2])
        };
        terms.push(LinguisticTerm::new(label, Trapezoid::new(a, b, c, d)?));
    }
    FeaturePartition::new(feature_name, terms, lo, hi)
}

/// Sorts a copy of `values` and builds the quantile partition.
pub fn quantile_partition_unsorted(
    feature_name: &str,
    values: &[f64],
    k: usize,
) -> Result<FeaturePartition> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_partition(feature_name, &sorted, k)
}
