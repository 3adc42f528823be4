//! Membership geometry shared by the rest of the crate.
//!
//! A [`FeaturePartition`] is an ordered family of trapezoidal
//! [`LinguisticTerm`]s over one feature. The first and last terms of a
//! partition behave as open shoulders: the first term is fully active
//! everywhere left of its plateau and the last term everywhere right of it,
//! so values outside the training domain still land on an edge term.

use serde::{Deserialize, Serialize};

use crate::error::{FgrtError, Result};

/// Trapezoidal membership function `(a, b, c, d)` with `a <= b <= c <= d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trapezoid {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Trapezoid {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let t = Trapezoid { a, b, c, d };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let Trapezoid { a, b, c, d } = *self;
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(FgrtError::InvalidPartition(format!(
                "non-finite trapezoid ({a}, {b}, {c}, {d})"
            )));
        }
        if !(a <= b && b <= c && c <= d) {
            return Err(FgrtError::InvalidPartition(format!(
                "trapezoid ({a}, {b}, {c}, {d}) is not ordered"
            )));
        }
        Ok(())
    }

    /// Piecewise-linear membership. Degenerate ramps (`a == b` or `c == d`)
    /// never divide: the boundary point belongs to the plateau.
    pub fn membership(&self, x: f64) -> f64 {
        let Trapezoid { a, b, c, d } = *self;
        if x < a || x > d {
            0.0
        } else if x < b {
            (x - a) / (b - a)
        } else if x <= c {
            1.0
        } else {
            (d - x) / (d - c)
        }
    }
}

/// Free-function form of [`Trapezoid::membership`].
pub fn membership(t: &Trapezoid, x: f64) -> f64 {
    t.membership(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticTerm {
    pub label: String,
    pub shape: Trapezoid,
}

impl LinguisticTerm {
    pub fn new(label: impl Into<String>, shape: Trapezoid) -> Self {
        LinguisticTerm {
            label: label.into(),
            shape,
        }
    }
}

/// Conventional labels for `k` ordered terms.
pub fn default_labels(k: usize) -> Vec<String> {
    let fixed: &[&str] = match k {
        1 => &["Any"],
        2 => &["Low", "High"],
        3 => &["Low", "Medium", "High"],
        4 => &["VeryLow", "Low", "High", "VeryHigh"],
        5 => &["VeryLow", "Low", "Medium", "High", "VeryHigh"],
        _ => &[],
    };
    if fixed.is_empty() {
        (1..=k).map(|i| format!("T{i}")).collect()
    } else {
        fixed.iter().map(|s| s.to_string()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePartition {
    pub feature_name: String,
    pub terms: Vec<LinguisticTerm>,
    pub domain_min: f64,
    pub domain_max: f64,
}

impl FeaturePartition {
    /// Builds a partition and checks every invariant.
    pub fn new(
        feature_name: impl Into<String>,
        terms: Vec<LinguisticTerm>,
        domain_min: f64,
        domain_max: f64,
    ) -> Result<Self> {
        let p = FeaturePartition {
            feature_name: feature_name.into(),
            terms,
            domain_min,
            domain_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Membership of `x` in term `term`, with shoulder semantics on the
    /// first and last terms.
    pub fn term_membership(&self, term: usize, x: f64) -> f64 {
        let shape = &self.terms[term].shape;
        let last = self.terms.len() - 1;
        if (term == 0 && x <= shape.c) || (term == last && x >= shape.b) {
            return 1.0;
        }
        shape.membership(x)
    }

    /// Memberships of `x` in every term, in term order.
    pub fn memberships(&self, x: f64) -> Vec<f64> {
        (0..self.terms.len())
            .map(|t| self.term_membership(t, x))
            .collect()
    }

    pub fn term_index(&self, label: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.label == label)
    }

    /// Checks term validity, label uniqueness, term ordering and full domain
    /// coverage.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(FgrtError::InvalidPartition(msg));
        if self.terms.is_empty() {
            return fail(format!("feature `{}` has no terms", self.feature_name));
        }
        if !(self.domain_min.is_finite()
            && self.domain_max.is_finite()
            && self.domain_min <= self.domain_max)
        {
            return fail(format!(
                "feature `{}` has invalid domain [{}, {}]",
                self.feature_name, self.domain_min, self.domain_max
            ));
        }
        for (i, term) in self.terms.iter().enumerate() {
            if term.label.is_empty() {
                return fail(format!(
                    "term {i} of `{}` has an empty label",
                    self.feature_name
                ));
            }
            if self.terms[..i].iter().any(|t| t.label == term.label) {
                return fail(format!("duplicate label `{}`", term.label));
            }
            term.shape.validate()?;
        }
        for (i, pair) in self.terms.windows(2).enumerate() {
            let (lo, hi) = (&pair[0].shape, &pair[1].shape);
            if lo.a > hi.a || lo.d > hi.d {
                return fail(format!(
                    "terms {i} and {} of `{}` are out of order",
                    i + 1,
                    self.feature_name
                ));
            }
        }
        if let Some(x) = self.uncovered_point() {
            return fail(format!(
                "feature `{}` has zero membership at {x}",
                self.feature_name
            ));
        }
        Ok(())
    }

    /// Returns a point of `[domain_min, domain_max]` where every term has
    /// zero membership, if any.
    ///
    /// Memberships are piecewise linear with kinks only at trapezoid
    /// parameters, so checking every breakpoint and the midpoint of every
    /// gap between consecutive breakpoints is exhaustive.
    pub fn uncovered_point(&self) -> Option<f64> {
        let (lo, hi) = (self.domain_min, self.domain_max);
        let mut points: Vec<f64> = self
            .terms
            .iter()
            .flat_map(|t| [t.shape.a, t.shape.b, t.shape.c, t.shape.d])
            .filter(|&v| v > lo && v < hi)
            .chain([lo, hi])
            .collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        let mids: Vec<f64> = points.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        points
            .into_iter()
            .chain(mids)
            .find(|&x| (0..self.terms.len()).all(|t| self.term_membership(t, x) <= 0.0))
    }
}

/// Conjunction operator used to combine condition memberships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TNorm {
    #[default]
    Product,
    Minimum,
}

impl TNorm {
    #[inline]
    pub fn conjoin(self, mu1: f64, mu2: f64) -> f64 {
        match self {
            TNorm::Product => mu1 * mu2,
            TNorm::Minimum => mu1.min(mu2),
        }
    }
}

impl std::str::FromStr for TNorm {
    type Err = FgrtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "product" | "prod" => Ok(TNorm::Product),
            "minimum" | "min" => Ok(TNorm::Minimum),
            other => Err(FgrtError::Config(format!("unknown t-norm `{other}`"))),
        }
    }
}

impl std::fmt::Display for TNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TNorm::Product => "product",
            TNorm::Minimum => "minimum",
        })
    }
}

pub fn conjoin(tnorm: TNorm, mu1: f64, mu2: f64) -> f64 {
    tnorm.conjoin(mu1, mu2)
}

/// One `(feature, term)` condition of a rule, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub term: usize,
}

impl Condition {
    pub fn new(feature: usize, term: usize) -> Self {
        Condition { feature, term }
    }
}

/// Firing strength of a conjunction of conditions on `x`.
///
/// `partitions` is indexed by feature; `None` marks a feature without a
/// partition (dropped as degenerate). An empty condition list fires at 1.
pub fn rule_membership(
    conditions: &[Condition],
    partitions: &[Option<FeaturePartition>],
    x: &[f64],
    tnorm: TNorm,
) -> Result<f64> {
    let mut mu = 1.0;
    for (i, cond) in conditions.iter().enumerate() {
        if conditions[..i].iter().any(|c| c.feature == cond.feature) {
            return Err(FgrtError::MalformedRule(format!(
                "feature {} appears twice",
                cond.feature
            )));
        }
        let partition = partitions
            .get(cond.feature)
            .and_then(Option::as_ref)
            .ok_or_else(|| {
                FgrtError::MalformedRule(format!("no partition for feature {}", cond.feature))
            })?;
        if cond.term >= partition.len() {
            return Err(FgrtError::MalformedRule(format!(
                "term {} out of range for feature `{}`",
                cond.term, partition.feature_name
            )));
        }
        let value = *x.get(cond.feature).ok_or(FgrtError::ArityMismatch {
            expected: partitions.len(),
            actual: x.len(),
        })?;
        mu = tnorm.conjoin(mu, partition.term_membership(cond.term, value));
    }
    Ok(mu)
}
