use serde::{Deserialize, Serialize};

use super::encoding::{chain_order, chain_values, project_chain, EncodedPartition};
use super::separability::separability_index;
use crate::error::{FgrtError, Result};
use crate::fuzzy::FeaturePartition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Step sizes as fractions of the feature range, largest first.
    pub step_fractions: Vec<f64>,
    /// Cycle cap per step size.
    pub max_cycles: usize,
    /// Critical parameters moved per feature; equals the terms per feature.
    pub parameters_per_feature: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            step_fractions: vec![0.10, 0.05, 0.02],
            max_cycles: 10,
            parameters_per_feature: 3,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step_fractions.is_empty() {
            return Err(FgrtError::Config("no step fractions given".into()));
        }
        if self.step_fractions.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
            return Err(FgrtError::Config(format!(
                "step fractions must lie in (0, 1): {:?}",
                self.step_fractions
            )));
        }
        if self.step_fractions.windows(2).any(|w| w[0] <= w[1]) {
            return Err(FgrtError::Config(format!(
                "step fractions must be strictly decreasing: {:?}",
                self.step_fractions
            )));
        }
        if self.max_cycles == 0 {
            return Err(FgrtError::Config("max_cycles must be at least 1".into()));
        }
        if self.parameters_per_feature < 2 {
            return Err(FgrtError::Config(
                "parameters_per_feature must be at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Upper bound on separability evaluations for one feature.
    pub fn evaluation_budget(&self) -> usize {
        self.parameters_per_feature * 2 * self.max_cycles * self.step_fractions.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedPartition {
    pub partition: FeaturePartition,
    pub si_before: f64,
    pub si_after: f64,
    /// Candidate partitions scored during the search.
    pub evaluations: usize,
    /// Whether a full cycle at the smallest step found no improvement.
    pub converged: bool,
}

/// Shape of a partition that stays fixed while the critical parameters move:
/// outer shoulders, middle plateau half-widths and where each foot sits
/// inside the transition between neighbouring plateaus.
struct Geometry {
    first_ab: (f64, f64),
    last_cd: (f64, f64),
    half_widths: Vec<f64>,
    /// per boundary `(α_a, α_d)`: relative positions of `a_{i+1}` and `d_i`
    /// within `[c_i, b_{i+1}]`
    feet: Vec<(f64, f64)>,
    labels: Vec<String>,
    feature_name: String,
    domain: (f64, f64),
}

type Params = Vec<[f64; 4]>;

fn params_of(p: &FeaturePartition) -> Params {
    p.terms
        .iter()
        .map(|t| [t.shape.a, t.shape.b, t.shape.c, t.shape.d])
        .collect()
}

impl Geometry {
    fn from_template(p: &FeaturePartition) -> Self {
        let t = params_of(p);
        let k = t.len();
        let half_widths = (0..k).map(|i| 0.5 * (t[i][2] - t[i][1])).collect();
        let feet = (0..k - 1)
            .map(|i| {
                let (c, b_next) = (t[i][2], t[i + 1][1]);
                let w = b_next - c;
                if w > 0.0 {
                    ((t[i + 1][0] - c) / w, (t[i][3] - c) / w)
                } else {
                    (0.0, 1.0)
                }
            })
            .collect();
        Geometry {
            first_ab: (t[0][0], t[0][1]),
            last_cd: (t[k - 1][2], t[k - 1][3]),
            half_widths,
            feet,
            labels: p.terms.iter().map(|t| t.label.clone()).collect(),
            feature_name: p.feature_name.clone(),
            domain: (p.domain_min, p.domain_max),
        }
    }

    fn k(&self) -> usize {
        self.labels.len()
    }

    /// End of the first plateau, centres of the middle plateaus, start of
    /// the last plateau.
    fn critical(&self, p: &FeaturePartition) -> Vec<f64> {
        let t = params_of(p);
        let k = self.k();
        (0..k)
            .map(|i| match i {
                0 => t[0][2],
                i if i == k - 1 => t[i][1],
                i => 0.5 * (t[i][1] + t[i][2]),
            })
            .collect()
    }

    fn rebuild(&self, critical: &[f64]) -> Result<FeaturePartition> {
        let k = self.k();
        let mut t: Params = vec![[0.0; 4]; k];
        for i in 0..k {
            let (b, c) = match i {
                0 => (self.first_ab.1, critical[0]),
                i if i == k - 1 => (critical[i], self.last_cd.0),
                i => (
                    critical[i] - self.half_widths[i],
                    critical[i] + self.half_widths[i],
                ),
            };
            t[i][1] = b;
            t[i][2] = c;
        }
        t[0][0] = self.first_ab.0;
        t[k - 1][3] = self.last_cd.1;
        for (i, &(alpha_a, alpha_d)) in self.feet.iter().enumerate() {
            let c = t[i][2];
            let w = t[i + 1][1] - c;
            t[i + 1][0] = c + alpha_a * w;
            t[i][3] = c + alpha_d * w;
        }
        let chain: Vec<f64> = chain_order(k).iter().map(|s| t[s.term][s.param]).collect();
        EncodedPartition::from_chain_projected(
            &self.feature_name,
            self.labels.clone(),
            &chain,
            self.domain.0,
            self.domain.1,
        )
        .decode()
    }
}

/// Projects a partition onto the interleaved order, re-anchored to its
/// domain.
fn interleaved_template(initial: &FeaturePartition) -> Result<FeaturePartition> {
    let chain = chain_values(initial);
    let ordered = project_chain(&chain);
    EncodedPartition::from_chain_projected(
        &initial.feature_name,
        initial.terms.iter().map(|t| t.label.clone()).collect(),
        &ordered,
        initial.domain_min,
        initial.domain_max,
    )
    .decode()
}

/// Cyclic coordinate search over the critical parameters of one partition.
///
/// Each probe moves one parameter by `±step × (domain_max − domain_min)`,
/// regenerates the remaining parameters from the starting geometry and
/// decodes through the increment encoding. Improving probes are accepted
/// immediately; a cycle without improvement moves on to the next step size.
/// The result never scores below `initial`.
pub fn optimize_partition(
    values: &[f64],
    labels: &[usize],
    n_classes: usize,
    config: &SearchConfig,
    initial: &FeaturePartition,
) -> Result<OptimizedPartition> {
    config.validate()?;
    initial.validate()?;
    if values.is_empty() || values.len() != labels.len() {
        return Err(FgrtError::Config(format!(
            "{} values and {} labels",
            values.len(),
            labels.len()
        )));
    }
    if initial.len() != config.parameters_per_feature {
        return Err(FgrtError::Config(format!(
            "partition of `{}` has {} terms but the search moves {} parameters",
            initial.feature_name,
            initial.len(),
            config.parameters_per_feature
        )));
    }
    let span = initial.domain_max - initial.domain_min;
    if span <= 0.0 {
        return Err(FgrtError::DegenerateFeature(initial.feature_name.clone()));
    }

    let si = |p: &FeaturePartition| separability_index(p, values, labels, n_classes).value;
    let si_before = si(initial);

    let template = interleaved_template(initial)?;
    let geometry = Geometry::from_template(&template);
    let mut current = template;
    let mut current_si = si(&current);
    let mut critical = geometry.critical(&current);
    let mut evaluations = 0;
    let mut converged = false;

    for (step_idx, fraction) in config.step_fractions.iter().enumerate() {
        let step = fraction * span;
        for _ in 0..config.max_cycles {
            let mut improved = false;
            for p in 0..critical.len() {
                for dir in [1.0, -1.0] {
                    let mut trial = critical.clone();
                    trial[p] += dir * step;
                    let candidate = geometry.rebuild(&trial)?;
                    evaluations += 1;
                    let score = si(&candidate);
                    if score > current_si {
                        critical = geometry.critical(&candidate);
                        current = candidate;
                        current_si = score;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                if step_idx + 1 == config.step_fractions.len() {
                    converged = true;
                }
                break;
            }
        }
    }

    let tolerance = 1e-12 * si_before.abs().max(1.0);
    let (partition, si_after) = if current_si > si_before + tolerance {
        (current, current_si)
    } else {
        (initial.clone(), si_before)
    };
    Ok(OptimizedPartition {
        partition,
        si_before,
        si_after,
        evaluations,
        converged,
    })
}
