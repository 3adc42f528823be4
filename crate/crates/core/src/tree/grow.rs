use std::cmp::Ordering;

use super::impurity::gini_from_mass;
use super::TreeConfig;
use crate::error::{FgrtError, Result};
use crate::fuzzy::{Condition, FeaturePartition};

/// Largest-class share at or above which a node counts as pure.
const PURITY: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub conditions: Vec<Condition>,
    /// `μ_R(x_i)` for every training sample.
    pub memberships: Vec<f64>,
    pub class_distribution: Vec<f64>,
    pub support: f64,
    /// `None` for a dead node.
    pub gini: Option<f64>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: usize,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Membership-weighted majority class, lowest id on ties.
    pub fn majority_class(&self) -> usize {
        argmax(&self.class_distribution)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Result of [`grow_tree`]; node 0 is the root.
#[derive(Debug, Clone)]
pub struct GrownTree {
    pub nodes: Vec<TreeNode>,
    pub n_classes: usize,
    pub expansions: usize,
}

impl GrownTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    /// Non-root leaves in creation order; each one is a rule.
    pub fn rule_nodes(&self) -> impl Iterator<Item = (usize, &TreeNode)> {
        self.nodes
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, n)| n.is_leaf())
    }

    /// Non-root internal nodes in creation order.
    pub fn internal_nodes(&self) -> impl Iterator<Item = (usize, &TreeNode)> {
        self.nodes
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, n)| !n.is_leaf())
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    condition: Condition,
}

/// Higher gain first, then lower feature, then lower term.
fn candidate_order(x: &Candidate, y: &Candidate) -> Ordering {
    y.gain
        .total_cmp(&x.gain)
        .then(x.condition.feature.cmp(&y.condition.feature))
        .then(x.condition.term.cmp(&y.condition.term))
}

struct Frontier {
    /// remaining candidates, best first
    candidates: Vec<Candidate>,
    next: usize,
    expandable: bool,
}

struct Grower<'a> {
    labels: &'a [usize],
    n_classes: usize,
    /// `[feature][term][sample]`, `None` for features without a partition
    term_memberships: Vec<Option<Vec<Vec<f64>>>>,
    config: &'a TreeConfig,
    root_support: f64,
}

impl Grower<'_> {
    fn make_node(
        &self,
        conditions: Vec<Condition>,
        memberships: Vec<f64>,
        parent: Option<usize>,
    ) -> TreeNode {
        let mut mass = vec![0.0; self.n_classes];
        for (&mu, &y) in memberships.iter().zip(self.labels) {
            mass[y] += mu;
        }
        let support: f64 = mass.iter().sum();
        let class_distribution = if support > 0.0 {
            mass.iter().map(|m| m / support).collect()
        } else {
            vec![0.0; self.n_classes]
        };
        TreeNode {
            depth: conditions.len(),
            conditions,
            memberships,
            class_distribution,
            support,
            gini: gini_from_mass(&mass, support),
            parent,
            children: Vec::new(),
        }
    }

    fn stops(&self, node: &TreeNode) -> bool {
        let Some(gini) = node.gini else { return true };
        let coverage = node.support / self.root_support;
        let top_share = node.class_distribution.iter().cloned().fold(0.0, f64::max);
        node.depth >= self.config.max_depth
            || coverage < self.config.coverage_threshold
            || top_share >= PURITY
            || gini <= 0.0
    }

    fn child_memberships(&self, node: &TreeNode, cond: Condition) -> Vec<f64> {
        let term = &self.term_memberships[cond.feature]
            .as_ref()
            .expect("partitioned feature")[cond.term];
        let tnorm = self.config.tnorm;
        node.memberships
            .iter()
            .zip(term)
            .map(|(&p, &t)| tnorm.conjoin(p, t))
            .collect()
    }

    /// Every extension of `node` whose gain exceeds the threshold, best first.
    fn candidates(&self, node: &TreeNode) -> Vec<Candidate> {
        let Some(parent_gini) = node.gini else {
            return Vec::new();
        };
        let active: Vec<usize> = (0..node.memberships.len())
            .filter(|&i| node.memberships[i] > 0.0)
            .collect();
        let tnorm = self.config.tnorm;
        let mut out = Vec::new();
        let mut mass = vec![0.0; self.n_classes];
        for (feature, terms) in self.term_memberships.iter().enumerate() {
            let Some(terms) = terms else { continue };
            if node.conditions.iter().any(|c| c.feature == feature) {
                continue;
            }
            for (term, tm) in terms.iter().enumerate() {
                mass.iter_mut().for_each(|m| *m = 0.0);
                for &i in &active {
                    mass[self.labels[i]] += tnorm.conjoin(node.memberships[i], tm[i]);
                }
                let total: f64 = mass.iter().sum();
                // dead children are skipped
                let Some(child_gini) = gini_from_mass(&mass, total) else {
                    continue;
                };
                let gain = parent_gini - child_gini;
                if gain > self.config.min_gain_theta {
                    out.push(Candidate {
                        gain,
                        condition: Condition::new(feature, term),
                    });
                }
            }
        }
        out.sort_by(candidate_order);
        out
    }
}

/// Best-first fuzzy rule tree induction.
///
/// Every node of the tree stays on the frontier. Each iteration takes the
/// single best extension over all expandable nodes (ties: lower feature,
/// lower term, deeper node, older node) and adds it as a new child, as long
/// as its gain exceeds `min_gain_theta`. Growth stops once the number of
/// non-root leaves reaches `max_rules` or no candidate remains.
///
/// `data` holds normalized rows; `partitions[f]` is `None` for features
/// that take no part in the rules.
pub fn grow_tree(
    data: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    partitions: &[Option<FeaturePartition>],
    config: &TreeConfig,
) -> Result<GrownTree> {
    config.validate()?;
    if data.is_empty() {
        return Err(FgrtError::EmptyData);
    }
    if data.len() != labels.len() {
        return Err(FgrtError::Config(format!(
            "{} rows but {} labels",
            data.len(),
            labels.len()
        )));
    }
    if let Some(row) = data.iter().find(|r| r.len() != partitions.len()) {
        return Err(FgrtError::ArityMismatch {
            expected: partitions.len(),
            actual: row.len(),
        });
    }
    if labels.iter().any(|&y| y >= n_classes) {
        return Err(FgrtError::Config(format!("label outside 0..{n_classes}")));
    }
    if partitions.iter().all(Option::is_none) {
        return Err(FgrtError::AllFeaturesDegenerate);
    }

    let term_memberships = partitions
        .iter()
        .enumerate()
        .map(|(f, p)| {
            p.as_ref().map(|p| {
                (0..p.len())
                    .map(|t| {
                        data.iter()
                            .map(|row| p.term_membership(t, row[f]))
                            .collect()
                    })
                    .collect()
            })
        })
        .collect();

    let mut grower = Grower {
        labels,
        n_classes,
        term_memberships,
        config,
        root_support: 1.0,
    };
    let root = grower.make_node(Vec::new(), vec![1.0; data.len()], None);
    grower.root_support = root.support;

    let mut nodes = vec![root];
    let mut frontier = vec![grower.frontier_for(&nodes[0])];
    let mut rules = 0usize;
    let mut expansions = 0usize;

    while rules < config.max_rules {
        let mut best: Option<(usize, Candidate)> = None;
        for (id, entry) in frontier.iter().enumerate() {
            if !entry.expandable {
                continue;
            }
            let Some(&cand) = entry.candidates.get(entry.next) else {
                continue;
            };
            let better = match &best {
                None => true,
                Some((best_id, best_cand)) => match candidate_order(&cand, best_cand) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        let (d, bd) = (nodes[id].depth, nodes[*best_id].depth);
                        d > bd || (d == bd && id < *best_id)
                    }
                },
            };
            if better {
                best = Some((id, cand));
            }
        }
        let Some((parent_id, cand)) = best else { break };
        frontier[parent_id].next += 1;

        let parent = &nodes[parent_id];
        let mut conditions = parent.conditions.clone();
        conditions.push(cand.condition);
        let memberships = grower.child_memberships(parent, cand.condition);
        let grows_rule_count = parent_id == 0 || !parent.is_leaf();
        let child = grower.make_node(conditions, memberships, Some(parent_id));
        let child_id = nodes.len();
        frontier.push(grower.frontier_for(&child));
        nodes.push(child);
        nodes[parent_id].children.push(child_id);
        if grows_rule_count {
            rules += 1;
        }
        expansions += 1;
    }

    Ok(GrownTree {
        nodes,
        n_classes,
        expansions,
    })
}

impl Grower<'_> {
    fn frontier_for(&self, node: &TreeNode) -> Frontier {
        let expandable = !self.stops(node);
        Frontier {
            candidates: if expandable {
                self.candidates(node)
            } else {
                Vec::new()
            },
            next: 0,
            expandable,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::quantile_partition_unsorted;

    fn partitions_for(data: &[Vec<f64>]) -> Vec<Option<FeaturePartition>> {
        (0..data[0].len())
            .map(|f| {
                let col: Vec<f64> = data.iter().map(|r| r[f]).collect();
                Some(quantile_partition_unsorted(&format!("x{f}"), &col, 3).unwrap())
            })
            .collect()
    }

    #[test]
    fn pure_data_has_no_expansions() {
        let data: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels = vec![1; 20];
        let parts = partitions_for(&data);
        let tree = grow_tree(&data, &labels, 2, &parts, &TreeConfig::default()).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.root().majority_class(), 1);
    }

    #[test]
    fn single_rule_cap() {
        let data: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![i as f64, (i * 7 % 13) as f64])
            .collect();
        let labels: Vec<usize> = (0..60).map(|i| usize::from(i >= 30)).collect();
        let parts = partitions_for(&data);
        let config = TreeConfig {
            max_rules: 1,
            ..Default::default()
        };
        let tree = grow_tree(&data, &labels, 2, &parts, &config).unwrap();
        assert!(tree.rule_nodes().count() <= 1);
    }

    #[test]
    fn rejects_bad_input() {
        let parts = vec![None];
        assert!(matches!(
            grow_tree(&[], &[], 2, &parts, &TreeConfig::default()),
            Err(FgrtError::EmptyData)
        ));
        assert!(matches!(
            grow_tree(&[vec![1.0]], &[0], 2, &parts, &TreeConfig::default()),
            Err(FgrtError::AllFeaturesDegenerate)
        ));
    }

    #[test]
    fn membership_chain_is_monotone() {
        let data: Vec<Vec<f64>> = (0..80)
            .map(|i| vec![(i % 10) as f64, (i / 10) as f64, ((i * 37) % 17) as f64])
            .collect();
        let labels: Vec<usize> = (0..80).map(|i| (i % 10 + i / 10) % 3).collect();
        let parts = partitions_for(&data);
        let config = TreeConfig {
            min_gain_theta: 0.0,
            max_rules: 20,
            ..Default::default()
        };
        let tree = grow_tree(&data, &labels, 3, &parts, &config).unwrap();
        assert!(tree.expansions > 0);
        for node in &tree.nodes[1..] {
            let parent = &tree.nodes[node.parent.unwrap()];
            for (c, p) in node.memberships.iter().zip(&parent.memberships) {
                assert!(c <= p);
            }
            let total: f64 = node.class_distribution.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            let mut features: Vec<_> = node.conditions.iter().map(|c| c.feature).collect();
            features.sort();
            features.dedup();
            assert_eq!(features.len(), node.conditions.len());
            assert!(node.depth <= config.max_depth);
        }
    }
}
