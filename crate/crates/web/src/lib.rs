//! Browser bindings for the demo page. Every call takes and returns plain
//! values or JSON strings; the state between calls is one trained model.

use fgrt::data::{parse_csv, Dataset};
use fgrt::eval::{checkerboard, gaussian_classes};
use fgrt::model::build_partitions;
use fgrt::{classify, fit, FgrtModel, FitConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const WINE_CSV: &str = include_str!("../../../data/wine.csv");
const CURVE_SAMPLES: usize = 200;

#[derive(Debug, Serialize)]
pub struct Curves {
    pub feature: String,
    pub features: Vec<String>,
    pub terms: Vec<String>,
    /// Evaluation grid in raw feature units.
    pub grid: Vec<f64>,
    /// `quantile[t][i]`: membership of term `t` at `grid[i]`.
    pub quantile: Vec<Vec<f64>>,
    pub optimized: Vec<Vec<f64>>,
    pub si_before: f64,
    pub si_after: f64,
    pub evaluations: usize,
    /// Training values with their class ids, for a strip plot.
    pub samples: Vec<(f64, usize)>,
    pub classes: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Trained {
    pub rules: Vec<String>,
    pub classes: Vec<String>,
    pub points: Vec<(f64, f64, usize)>,
    pub bounds: [f64; 4],
    pub resolution: usize,
    /// Row-major predicted classes over the bounds, first row at the bottom.
    pub grid: Vec<usize>,
    pub training_accuracy: f64,
    pub conditions_per_rule: f64,
}

#[derive(Debug, Serialize)]
pub struct Explained {
    pub class: String,
    pub scores: Vec<f64>,
    pub fallback: bool,
    pub explanation: String,
}

fn wine() -> Result<Dataset, String> {
    parse_csv(WINE_CSV, "wine", None).map_err(|e| e.to_string())
}

/// Membership curves of one wine feature before and after separability
/// tuning.
pub fn wine_curves(feature: usize) -> Result<Curves, String> {
    let ds = wine()?;
    if feature >= ds.n_features() {
        return Err(format!(
            "feature index {feature} out of range 0..{}",
            ds.n_features()
        ));
    }
    let config = FitConfig {
        optimize_partitions: true,
        ..Default::default()
    };
    let set = build_partitions(&ds, &config).map_err(|e| e.to_string())?;
    let stats = set.normalizer.stats[feature];
    let report = set.reports[feature]
        .as_ref()
        .ok_or_else(|| format!("feature `{}` is constant", ds.feature_names[feature]))?;
    let quantile = fgrt::partition::quantile_partition_unsorted(
        &ds.feature_names[feature],
        &ds.x
            .iter()
            .map(|r| stats.apply(r[feature]))
            .collect::<Vec<_>>(),
        config.terms_per_feature,
    )
    .map_err(|e| e.to_string())?;
    let optimized = &report.partition;

    let column = ds.column(feature);
    let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (hi - lo);
    let grid: Vec<f64> = (0..CURVE_SAMPLES)
        .map(|i| lo - pad + (hi - lo + 2.0 * pad) * i as f64 / (CURVE_SAMPLES - 1) as f64)
        .collect();
    let curves = |p: &fgrt::FeaturePartition| -> Vec<Vec<f64>> {
        (0..p.len())
            .map(|t| {
                grid.iter()
                    .map(|&v| p.term_membership(t, stats.apply(v)))
                    .collect()
            })
            .collect()
    };
    Ok(Curves {
        feature: ds.feature_names[feature].clone(),
        features: ds.feature_names.clone(),
        terms: optimized.terms.iter().map(|t| t.label.clone()).collect(),
        quantile: curves(&quantile),
        optimized: curves(optimized),
        grid,
        si_before: report.si_before,
        si_after: report.si_after,
        evaluations: report.evaluations,
        samples: column.into_iter().zip(ds.y.iter().copied()).collect(),
        classes: ds.class_names.clone(),
    })
}

fn synthetic(kind: &str, n: usize, seed: u64) -> Result<Dataset, String> {
    match kind {
        "checkerboard" => Ok(checkerboard(n, 2, seed)),
        "blobs" => Ok(gaussian_classes(n, 2, 3, 1.8, seed)),
        other => Err(format!(
            "unknown dataset `{other}` (expected checkerboard or blobs)"
        )),
    }
}

#[wasm_bindgen]
#[derive(Default)]
pub struct Demo {
    model: Option<FgrtModel>,
}

impl Demo {
    pub fn train_native(
        &mut self,
        kind: &str,
        n: usize,
        max_rules: usize,
        optimize: bool,
        seed: u64,
    ) -> Result<Trained, String> {
        let ds = synthetic(kind, n, seed)?;
        let mut config = FitConfig {
            optimize_partitions: optimize,
            ..Default::default()
        };
        config.tree.max_rules = max_rules;
        let model = fit(&ds, &config, seed).map_err(|e| e.to_string())?;

        let (mut bounds, resolution) = (
            [
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ],
            60,
        );
        for row in &ds.x {
            bounds[0] = bounds[0].min(row[0]);
            bounds[1] = bounds[1].max(row[0]);
            bounds[2] = bounds[2].min(row[1]);
            bounds[3] = bounds[3].max(row[1]);
        }
        let mut grid = Vec::with_capacity(resolution * resolution);
        for j in 0..resolution {
            let y = bounds[2] + (bounds[3] - bounds[2]) * (j as f64 + 0.5) / resolution as f64;
            for i in 0..resolution {
                let x = bounds[0] + (bounds[1] - bounds[0]) * (i as f64 + 0.5) / resolution as f64;
                grid.push(
                    classify(&model, &[x, y])
                        .map_err(|e| e.to_string())?
                        .predicted_class,
                );
            }
        }
        let mut correct = 0;
        for (row, &y) in ds.x.iter().zip(&ds.y) {
            correct += usize::from(
                classify(&model, row)
                    .map_err(|e| e.to_string())?
                    .predicted_class
                    == y,
            );
        }
        let trained = Trained {
            rules: model.rules.iter().map(|r| model.rule_text(r)).collect(),
            classes: model.class_names.clone(),
            points: ds
                .x
                .iter()
                .zip(&ds.y)
                .map(|(r, &y)| (r[0], r[1], y))
                .collect(),
            bounds,
            resolution,
            grid,
            training_accuracy: correct as f64 / ds.n_samples() as f64,
            conditions_per_rule: model.conditions_per_rule(),
        };
        self.model = Some(model);
        Ok(trained)
    }

    pub fn explain_native(&self, x: f64, y: f64) -> Result<Explained, String> {
        let model = self.model.as_ref().ok_or("train a model first")?;
        let p = classify(model, &[x, y]).map_err(|e| e.to_string())?;
        Ok(Explained {
            class: model.class_names[p.predicted_class].clone(),
            scores: p.class_scores.clone(),
            fallback: p.fallback_used,
            explanation: fgrt::inference::render_explanation(model, &p),
        })
    }
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        Demo::default()
    }

    /// Fits a rule tree on a 2-D synthetic set; returns rules, points and
    /// a decision map as JSON.
    pub fn train(
        &mut self,
        kind: &str,
        n: usize,
        max_rules: usize,
        optimize: bool,
        seed: u32,
    ) -> Result<String, JsError> {
        to_json(self.train_native(kind, n, max_rules, optimize, u64::from(seed)))
    }

    /// Classifies one point with the last trained model and explains it.
    pub fn explain(&self, x: f64, y: f64) -> Result<String, JsError> {
        to_json(self.explain_native(x, y))
    }
}

/// Quantile and tuned membership curves of a wine feature, as JSON.
#[wasm_bindgen]
pub fn partition_curves(feature: usize) -> Result<String, JsError> {
    to_json(wine_curves(feature))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_cover_every_grid_point() {
        let c = wine_curves(6).unwrap();
        assert_eq!(c.feature, "flavanoids");
        assert_eq!(c.quantile.len(), 3);
        for i in 0..c.grid.len() {
            let q: f64 = c.quantile.iter().map(|t| t[i]).sum();
            let o: f64 = c.optimized.iter().map(|t| t[i]).sum();
            assert!(q > 0.0 && o > 0.0);
        }
        assert!(c.si_after >= c.si_before);
        assert!(wine_curves(99).is_err());
    }

    #[test]
    fn train_then_explain() {
        let mut demo = Demo::new();
        assert!(demo.explain_native(0.0, 0.0).is_err());
        let t = demo.train_native("blobs", 300, 10, false, 3).unwrap();
        assert!(!t.rules.is_empty() && t.rules.len() <= 10);
        assert_eq!(t.grid.len(), t.resolution * t.resolution);
        assert!(t.training_accuracy > 0.8, "{}", t.training_accuracy);
        let (x, y, _) = t.points[0];
        let e = demo.explain_native(x, y).unwrap();
        assert_eq!(e.scores.len(), 3);
        assert!(!e.explanation.is_empty());
        assert!(demo.train_native("spiral", 10, 5, false, 0).is_err());
    }

    #[test]
    fn balanced_parity_still_trains() {
        // no single condition separates a balanced checkerboard, so greedy
        // growth may stop at the root; the map must still be complete
        let mut demo = Demo::new();
        let t = demo
            .train_native("checkerboard", 400, 15, false, 1)
            .unwrap();
        assert_eq!(t.grid.len(), t.resolution * t.resolution);
        assert!(t.grid.iter().all(|&c| c < 2));
    }
}
