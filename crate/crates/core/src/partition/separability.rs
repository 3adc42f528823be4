use serde::{Deserialize, Serialize};

use crate::fuzzy::FeaturePartition;

/// Separability index of a partition with its per-(term, class) terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityScore {
    pub value: f64,
    /// `per_term_per_class[v][c] = (Σ_i μ_v(x_i)·[y_i = c])² / Σ_i μ_v(x_i)`
    pub per_term_per_class: Vec<Vec<f64>>,
}

/// Sum over terms and classes of the squared class-restricted membership
/// mass divided by the term's total mass. Terms that no sample activates
/// contribute zero.
///
/// `n_classes` must exceed every label.
pub fn separability_index(
    partition: &FeaturePartition,
    values: &[f64],
    labels: &[usize],
    n_classes: usize,
) -> SeparabilityScore {
    assert_eq!(
        values.len(),
        labels.len(),
        "values and labels differ in length"
    );
    let k = partition.len();
    let mut class_mass = vec![vec![0.0; n_classes]; k];
    let mut mass = vec![0.0; k];
    for (&x, &y) in values.iter().zip(labels) {
        for v in 0..k {
            let mu = partition.term_membership(v, x);
            class_mass[v][y] += mu;
            mass[v] += mu;
        }
    }
    let per_term_per_class: Vec<Vec<f64>> = class_mass
        .iter()
        .zip(&mass)
        .map(|(row, &total)| {
            row.iter()
                .map(|&m| if total > 0.0 { m * m / total } else { 0.0 })
                .collect()
        })
        .collect();
    let value = per_term_per_class.iter().flatten().sum();
    SeparabilityScore {
        value,
        per_term_per_class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{LinguisticTerm, Trapezoid};

    fn single_term() -> FeaturePartition {
        FeaturePartition::new(
            "x",
            vec![LinguisticTerm::new(
                "Any",
                Trapezoid::new(0.0, 0.0, 1.0, 1.0).unwrap(),
            )],
            0.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn balanced_single_term() {
        let s = separability_index(&single_term(), &[0.1, 0.2, 0.3, 0.4], &[0, 0, 1, 1], 2);
        assert!((s.value - 2.0).abs() < 1e-12);
        assert_eq!(s.per_term_per_class, vec![vec![1.0, 1.0]]);
    }

    #[test]
    fn pure_class_gives_n() {
        let n = 17;
        let values: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let s = separability_index(&single_term(), &values, &vec![0; n], 3);
        assert!((s.value - n as f64).abs() < 1e-12);
    }

    #[test]
    fn inactive_term_contributes_zero() {
        let p = FeaturePartition::new(
            "x",
            vec![
                LinguisticTerm::new("Low", Trapezoid::new(0.0, 0.0, 0.3, 0.5).unwrap()),
                LinguisticTerm::new("Mid", Trapezoid::new(0.4, 0.5, 0.6, 0.7).unwrap()),
                LinguisticTerm::new("High", Trapezoid::new(0.6, 0.8, 1.0, 1.0).unwrap()),
            ],
            0.0,
            1.0,
        )
        .unwrap();
        let s = separability_index(&p, &[0.0, 0.1, 1.0], &[0, 0, 1], 2);
        assert_eq!(s.per_term_per_class[1], vec![0.0, 0.0]);
        assert!(s.value.is_finite());
    }
}
