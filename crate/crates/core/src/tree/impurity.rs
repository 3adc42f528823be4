/// Membership-weighted class mass and total.
pub(crate) fn class_mass(
    memberships: &[f64],
    labels: &[usize],
    n_classes: usize,
) -> (Vec<f64>, f64) {
    let mut mass = vec![0.0; n_classes];
    for (&mu, &y) in memberships.iter().zip(labels) {
        mass[y] += mu;
    }
    let total = mass.iter().sum();
    (mass, total)
}

/// Gini impurity of a class-mass vector; `None` when the mass is zero.
pub(crate) fn gini_from_mass(mass: &[f64], total: f64) -> Option<f64> {
    if total <= 0.0 {
        return None;
    }
    let sum_sq: f64 = mass.iter().map(|m| (m / total) * (m / total)).sum();
    Some(1.0 - sum_sq)
}

/// Fuzzy Gini impurity `1 − Σ_c (Σ_{i:y_i=c} μ_i / Σ_i μ_i)²`.
///
/// Returns `None` for a dead node (zero total membership).
pub fn fuzzy_gini(memberships: &[f64], labels: &[usize], n_classes: usize) -> Option<f64> {
    assert_eq!(
        memberships.len(),
        labels.len(),
        "memberships and labels differ in length"
    );
    let (mass, total) = class_mass(memberships, labels, n_classes);
    gini_from_mass(&mass, total)
}

/// Drop in fuzzy Gini from a rule to its extension. A dead child scores
/// `-inf` so it is never selected; a dead parent has nothing to gain.
pub fn impurity_gain(parent: &[f64], child: &[f64], labels: &[usize], n_classes: usize) -> f64 {
    match (
        fuzzy_gini(parent, labels, n_classes),
        fuzzy_gini(child, labels, n_classes),
    ) {
        (Some(p), Some(c)) => p - c,
        _ => f64::NEG_INFINITY,
    }
}
