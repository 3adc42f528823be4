use serde::{Deserialize, Serialize};

use crate::error::{FgrtError, Result};
use crate::fuzzy::{FeaturePartition, LinguisticTerm, Trapezoid};

/// Position of one trapezoid parameter in the interleaved chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSlot {
    pub term: usize,
    /// 0..4 for `a, b, c, d`.
    pub param: usize,
}

/// Interleaved parameter order for `k` terms.
///
/// For three terms this is `a1 b1 c1 a2 d1 b2 c2 a3 d2 b3 c3 d3`: the rising
/// foot of each term is placed between the plateau end and the falling foot
/// of its left neighbour.
pub fn chain_order(k: usize) -> Vec<ChainSlot> {
    let slot = |term, param| ChainSlot { term, param };
    let mut order = Vec::with_capacity(4 * k);
    if k == 0 {
        return order;
    }
    order.extend([slot(0, 0), slot(0, 1), slot(0, 2)]);
    for i in 1..k {
        order.extend([slot(i, 0), slot(i - 1, 3), slot(i, 1), slot(i, 2)]);
    }
    order.push(slot(k - 1, 3));
    order
}

fn param(t: &Trapezoid, idx: usize) -> f64 {
    [t.a, t.b, t.c, t.d][idx]
}

pub(crate) fn chain_values(partition: &FeaturePartition) -> Vec<f64> {
    chain_order(partition.len())
        .into_iter()
        .map(|s| param(&partition.terms[s.term].shape, s.param))
        .collect()
}

/// Least-squares monotone (non-decreasing) fit of a chain, by pool
/// adjacent violators. Already ordered chains come back unchanged.
pub fn project_chain(values: &[f64]) -> Vec<f64> {
    // (sum, count) per pooled block
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, n1) = blocks[blocks.len() - 1];
            let (s0, n0) = blocks[blocks.len() - 2];
            if s0 / n0 as f64 > s1 / n1 as f64 {
                blocks.pop();
                *blocks.last_mut().unwrap() = (s0 + s1, n0 + n1);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (sum, n) in blocks {
        if n == 1 {
            out.push(sum);
        } else {
            out.extend(std::iter::repeat_n(sum / n as f64, n));
        }
    }
    out
}

/// Non-negative increment encoding of a partition.
///
/// `increments[0]` is the offset of the first chain value from
/// `domain_min`; every later entry is the step from the previous chain value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedPartition {
    pub feature_name: String,
    pub labels: Vec<String>,
    pub increments: Vec<f64>,
    pub domain_min: f64,
    pub domain_max: f64,
}

impl EncodedPartition {
    /// Encodes a partition whose parameters follow the interleaved order.
    pub fn encode(partition: &FeaturePartition) -> Result<Self> {
        let values = chain_values(partition);
        let mut increments = Vec::with_capacity(values.len());
        let mut previous = partition.domain_min;
        for (position, &value) in values.iter().enumerate() {
            if value < previous {
                return Err(FgrtError::EncodingOrder {
                    position,
                    previous,
                    value,
                });
            }
            increments.push(value - previous);
            previous = value;
        }
        Ok(EncodedPartition {
            feature_name: partition.feature_name.clone(),
            labels: partition.terms.iter().map(|t| t.label.clone()).collect(),
            increments,
            domain_min: partition.domain_min,
            domain_max: partition.domain_max,
        })
    }

    /// Encodes an arbitrary chain after projecting it onto the ordered set.
    pub fn from_chain_projected(
        feature_name: &str,
        labels: Vec<String>,
        chain: &[f64],
        domain_min: f64,
        domain_max: f64,
    ) -> Self {
        let clamped: Vec<f64> = chain
            .iter()
            .map(|v| v.clamp(domain_min, domain_max))
            .collect();
        let ordered = project_chain(&clamped);
        let mut previous = domain_min;
        let increments = ordered
            .iter()
            .map(|&v| {
                let inc = (v - previous).max(0.0);
                previous = v;
                inc
            })
            .collect();
        EncodedPartition {
            feature_name: feature_name.to_string(),
            labels,
            increments,
            domain_min,
            domain_max,
        }
    }

    pub fn terms(&self) -> usize {
        self.increments.len() / 4
    }

    /// Accumulates the increments, rescales the chain onto the domain and
    /// rebuilds the trapezoids.
    pub fn decode(&self) -> Result<FeaturePartition> {
        let k = self.terms();
        if k == 0 || self.increments.len() != 4 * k {
            return Err(FgrtError::InvalidPartition(format!(
                "increment vector of length {} is not a multiple of 4",
                self.increments.len()
            )));
        }
        if self.labels.len() != k {
            return Err(FgrtError::InvalidPartition(format!(
                "{} labels for {k} terms",
                self.labels.len()
            )));
        }
        if let Some(bad) = self
            .increments
            .iter()
            .find(|v| !(v.is_finite() && **v >= 0.0))
        {
            return Err(FgrtError::InvalidPartition(format!(
                "increment {bad} is negative"
            )));
        }
        let total: f64 = self.increments[1..].iter().sum();
        let width = self.domain_max - self.domain_min;
        if total <= 0.0 || width <= 0.0 || !width.is_finite() {
            return Err(FgrtError::DegenerateEncoding);
        }

        let n = self.increments.len();
        let mut chain = Vec::with_capacity(n);
        let mut cum = 0.0;
        chain.push(self.domain_min);
        for (j, inc) in self.increments.iter().enumerate().skip(1) {
            cum += inc;
            chain.push(if j == n - 1 {
                self.domain_max
            } else {
                (self.domain_min + cum / total * width).min(self.domain_max)
            });
        }

        let order = chain_order(k);
        let mut params = vec![[0.0f64; 4]; k];
        for (slot, v) in order.iter().zip(&chain) {
            params[slot.term][slot.param] = *v;
        }
        close_touching_gaps(&mut params);

        let terms = params
            .iter()
            .zip(&self.labels)
            .map(|(p, label)| {
                Ok(LinguisticTerm::new(
                    label.clone(),
                    Trapezoid::new(p[0], p[1], p[2], p[3])?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        FeaturePartition::new(
            self.feature_name.clone(),
            terms,
            self.domain_min,
            self.domain_max,
        )
    }
}

/// Where a term's falling foot coincides with its right neighbour's rising
/// foot and both ramps are proper, that single point has zero membership.
/// Pull the neighbour's foot slightly left, inside its `[c_i, a_{i+1}]`
/// slack, to restore coverage.
fn close_touching_gaps(params: &mut [[f64; 4]]) {
    for i in 0..params.len().saturating_sub(1) {
        let (c_i, d_i) = (params[i][2], params[i][3]);
        let (a_n, b_n) = (params[i + 1][0], params[i + 1][1]);
        if d_i == a_n && c_i < d_i && a_n < b_n {
            let nudged = a_n - (a_n - c_i) * 1e-6;
            params[i + 1][0] = if nudged < a_n { nudged } else { c_i };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> FeaturePartition {
        FeaturePartition::new(
            "x",
            vec![
                LinguisticTerm::new("Low", Trapezoid::new(0.0, 0.0, 0.2, 0.4).unwrap()),
                LinguisticTerm::new("Medium", Trapezoid::new(0.3, 0.45, 0.55, 0.7).unwrap()),
                LinguisticTerm::new("High", Trapezoid::new(0.6, 0.75, 1.0, 1.0).unwrap()),
            ],
            0.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn order_for_three_terms() {
        let names: Vec<String> = chain_order(3)
            .iter()
            .map(|s| format!("{}{}", ["a", "b", "c", "d"][s.param], s.term + 1))
            .collect();
        assert_eq!(
            names,
            ["a1", "b1", "c1", "a2", "d1", "b2", "c2", "a3", "d2", "b3", "c3", "d3"]
        );
    }

    #[test]
    fn encode_example() {
        let e = EncodedPartition::encode(&example()).unwrap();
        let expected = [
            0.0, 0.0, 0.2, 0.1, 0.1, 0.05, 0.1, 0.05, 0.1, 0.05, 0.25, 0.0,
        ];
        for (got, want) in e.increments.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{:?}", e.increments);
        }
        // accumulated sequence
        let mut acc = 0.0;
        let accumulated: Vec<f64> = e
            .increments
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        let chain = [
            0.0, 0.0, 0.2, 0.3, 0.4, 0.45, 0.55, 0.6, 0.7, 0.75, 1.0, 1.0,
        ];
        for (got, want) in accumulated.iter().zip(chain) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn decode_roundtrip() {
        let p = example();
        let back = EncodedPartition::encode(&p).unwrap().decode().unwrap();
        for (t0, t1) in p.terms.iter().zip(&back.terms) {
            assert_eq!(t0.label, t1.label);
            for (x, y) in [
                (t0.shape.a, t1.shape.a),
                (t0.shape.b, t1.shape.b),
                (t0.shape.c, t1.shape.c),
                (t0.shape.d, t1.shape.d),
            ] {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn out_of_order_rejected() {
        let mut p = example();
        p.terms[1].shape.a = 0.1; // a2 < c1
        let err = EncodedPartition::encode(&p).unwrap_err();
        assert!(matches!(err, FgrtError::EncodingOrder { position: 3, .. }));
    }

    #[test]
    fn all_zero_is_degenerate() {
        let e = EncodedPartition {
            feature_name: "x".into(),
            labels: vec!["Low".into(), "Medium".into(), "High".into()],
            increments: vec![0.0; 12],
            domain_min: 0.0,
            domain_max: 1.0,
        };
        assert!(matches!(e.decode(), Err(FgrtError::DegenerateEncoding)));
    }

    #[test]
    fn uniform_increments_are_evenly_spaced() {
        let e = EncodedPartition {
            feature_name: "x".into(),
            labels: vec!["Low".into(), "Medium".into(), "High".into()],
            increments: vec![1.0; 12],
            domain_min: 0.0,
            domain_max: 11.0,
        };
        let p = e.decode().unwrap();
        let chain = chain_values(&p);
        for (j, v) in chain.iter().enumerate() {
            assert!((v - j as f64).abs() < 1e-12, "{chain:?}");
        }
    }

    #[test]
    fn touching_feet_get_separated() {
        // d1 == a2 with proper ramps on both sides
        let mut inc = vec![0.0, 0.1, 0.1, 0.1, 0.0, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.0];
        let e = EncodedPartition {
            feature_name: "x".into(),
            labels: vec!["Low".into(), "Medium".into(), "High".into()],
            increments: inc.clone(),
            domain_min: 0.0,
            domain_max: 1.0,
        };
        e.decode().unwrap();
        inc[8] = 0.0;
        let e = EncodedPartition {
            increments: inc,
            ..e
        };
        e.decode().unwrap();
    }

    #[test]
    fn projection_is_isotonic() {
        assert_eq!(project_chain(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(
            project_chain(&[1.0, 3.0, 2.0, 4.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
        assert_eq!(project_chain(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }
}
