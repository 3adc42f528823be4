//! Cross-validated evaluation, hyperparameter sweeps and runtime scaling.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{stratified_kfold, Dataset};
use crate::error::{FgrtError, Result};
use crate::inference::classify;
use crate::model::{build_partitions, fit, FitConfig, FORMAT_VERSION};
use crate::tree::grow_tree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_test: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub num_rules: usize,
    pub conditions_per_rule: f64,
    /// Total conditions in the rulebase.
    pub rulebase_size: usize,
    pub train_ms: f64,
    pub predict_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub cell: String,
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    pub num_rules: f64,
    pub conditions_per_rule: f64,
    /// `num_rules × conditions_per_rule` of the fold means.
    pub rulebase_size: f64,
    pub train_ms: f64,
    pub predict_ms: f64,
    pub config: FitConfig,
    pub seed: u64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Label used for a configuration in reports.
pub fn cell_key(config: &FitConfig) -> String {
    format!(
        "max_rules={};coverage={};theta={};optimize={}",
        config.tree.max_rules,
        config.tree.coverage_threshold,
        config.tree.min_gain_theta,
        u8::from(config.optimize_partitions)
    )
}

/// Stratified k-fold evaluation. Normalization, partitions and partition
/// tuning see the training rows of each fold only. Folds run in parallel.
pub fn cross_validate(
    dataset: &Dataset,
    config: &FitConfig,
    folds: usize,
    seed: u64,
) -> Result<EvalReport> {
    config.validate()?;
    let plan = stratified_kfold(&dataset.y, folds, seed)?;
    let results: Vec<Result<FoldResult>> = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let train = dataset.subset(&plan.train_indices(fold));
            let test = dataset.subset(&plan.test_indices(fold));
            let started = Instant::now();
            let model = fit(&train, config, seed)?;
            let train_ms = started.elapsed().as_secs_f64() * 1e3;
            let started = Instant::now();
            let mut correct = 0;
            for (row, &y) in test.x.iter().zip(&test.y) {
                if classify(&model, row)?.predicted_class == y {
                    correct += 1;
                }
            }
            let predict_ms = started.elapsed().as_secs_f64() * 1e3;
            Ok(FoldResult {
                fold,
                n_test: test.n_samples(),
                correct,
                accuracy: correct as f64 / test.n_samples() as f64,
                num_rules: model.rules.len(),
                conditions_per_rule: model.conditions_per_rule(),
                rulebase_size: model.total_conditions(),
                train_ms,
                predict_ms,
            })
        })
        .collect();
    let folds = results.into_iter().collect::<Result<Vec<_>>>()?;
    let num_rules = mean(folds.iter().map(|f| f.num_rules as f64));
    let conditions_per_rule = mean(folds.iter().map(|f| f.conditions_per_rule));
    Ok(EvalReport {
        dataset: dataset.name.clone(),
        cell: cell_key(config),
        mean_accuracy: mean(folds.iter().map(|f| f.accuracy)),
        num_rules,
        conditions_per_rule,
        rulebase_size: num_rules * conditions_per_rule,
        train_ms: mean(folds.iter().map(|f| f.train_ms)),
        predict_ms: mean(folds.iter().map(|f| f.predict_ms)),
        folds,
        config: config.clone(),
        seed,
    })
}

pub const REPORT_HEADER: &str =
    "dataset,cell,fold,n_test,accuracy,num_rules,conditions_per_rule,rulebase_size";

/// Writes fold rows and one `mean` row per report. Wall times are left out
/// so identical runs give identical files.
pub fn write_report<W: Write>(out: &mut W, reports: &[EvalReport]) -> std::io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in reports {
        for f in &r.folds {
            writeln!(
                out,
                "{},{},{},{},{:.6},{},{:.6},{}",
                r.dataset,
                r.cell,
                f.fold,
                f.n_test,
                f.accuracy,
                f.num_rules,
                f.conditions_per_rule,
                f.rulebase_size
            )?;
        }
        let n_test: usize = r.folds.iter().map(|f| f.n_test).sum();
        writeln!(
            out,
            "{},{},mean,{},{:.6},{:.6},{:.6},{:.6}",
            r.dataset,
            r.cell,
            n_test,
            r.mean_accuracy,
            r.num_rules,
            r.conditions_per_rule,
            r.rulebase_size
        )?;
    }
    Ok(())
}

/// Companion record of how a report was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    pub datasets: Vec<String>,
    pub folds: usize,
    pub seed: u64,
    pub config: FitConfig,
}

impl RunManifest {
    pub fn new(
        command: &str,
        datasets: Vec<String>,
        folds: usize,
        seed: u64,
        config: FitConfig,
    ) -> Self {
        RunManifest {
            format_version: FORMAT_VERSION,
            command: command.to_string(),
            datasets,
            folds,
            seed,
            config,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub max_rules: Vec<usize>,
    pub coverage_threshold: Vec<f64>,
    pub min_gain_theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Vary one axis at a time around the base configuration.
    #[default]
    PerAxis,
    /// Every combination of the axis values.
    Cartesian,
}

/// Configurations visited by a sweep, in report order.
pub fn sweep_cells(base: &FitConfig, axes: &SweepAxes, mode: SweepMode) -> Result<Vec<FitConfig>> {
    let with = |max_rules: Option<usize>, coverage: Option<f64>, theta: Option<f64>| {
        let mut c = base.clone();
        if let Some(v) = max_rules {
            c.tree.max_rules = v;
        }
        if let Some(v) = coverage {
            c.tree.coverage_threshold = v;
        }
        if let Some(v) = theta {
            c.tree.min_gain_theta = v;
        }
        c
    };
    let mut cells = Vec::new();
    match mode {
        SweepMode::PerAxis => {
            cells.extend(axes.max_rules.iter().map(|&v| with(Some(v), None, None)));
            cells.extend(
                axes.coverage_threshold
                    .iter()
                    .map(|&v| with(None, Some(v), None)),
            );
            cells.extend(
                axes.min_gain_theta
                    .iter()
                    .map(|&v| with(None, None, Some(v))),
            );
        }
        SweepMode::Cartesian => {
            let opt = |v: &[f64]| -> Vec<Option<f64>> {
                if v.is_empty() {
                    vec![None]
                } else {
                    v.iter().copied().map(Some).collect()
                }
            };
            let rules: Vec<Option<usize>> = if axes.max_rules.is_empty() {
                vec![None]
            } else {
                axes.max_rules.iter().copied().map(Some).collect()
            };
            for &r in &rules {
                for &c in &opt(&axes.coverage_threshold) {
                    for &t in &opt(&axes.min_gain_theta) {
                        cells.push(with(r, c, t));
                    }
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(FgrtError::Config("sweep has no axis values".into()));
    }
    for c in &cells {
        c.validate()?;
    }
    Ok(cells)
}

/// One cross-validation per sweep cell.
pub fn sweep(
    dataset: &Dataset,
    base: &FitConfig,
    axes: &SweepAxes,
    mode: SweepMode,
    folds: usize,
    seed: u64,
) -> Result<Vec<EvalReport>> {
    sweep_cells(base, axes, mode)?
        .par_iter()
        .map(|c| cross_validate(dataset, c, folds, seed))
        .collect()
}

/// Gaussian class clusters: class `c` is centred at a random point drawn
/// with per-coordinate spread `separation`, unit variance around it.
pub fn gaussian_classes(
    n: usize,
    m: usize,
    n_classes: usize,
    separation: f64,
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let centres: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| (0..m).map(|_| separation * unit.sample(&mut rng)).collect())
        .collect();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % n_classes;
        x.push(
            centres[c]
                .iter()
                .map(|mu| mu + unit.sample(&mut rng))
                .collect(),
        );
        y.push(c);
    }
    Dataset {
        name: format!("gauss_n{n}_m{m}_c{n_classes}"),
        feature_names: (0..m).map(|j| format!("x{j}")).collect(),
        x,
        y,
        class_names: (0..n_classes).map(|c| format!("c{c}")).collect(),
    }
}

/// Two-class data whose label is the parity of the signs of the first two
/// features; remaining features are noise. Needs conjunctions.
pub fn checkerboard(n: usize, m: usize, seed: u64) -> Dataset {
    assert!(m >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        y.push(usize::from((row[0] > 0.0) != (row[1] > 0.0)));
        x.push(row);
    }
    Dataset {
        name: format!("checker_n{n}_m{m}"),
        feature_names: (0..m).map(|j| format!("x{j}")).collect(),
        x,
        y,
        class_names: vec!["even".into(), "odd".into()],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub m: usize,
    /// Fastest of the repetitions.
    pub seconds: f64,
    pub rules: usize,
    pub nodes: usize,
}

/// Times tree growth (partitions prebuilt) over an `n × m` grid of
/// synthetic datasets.
pub fn runtime_scaling(
    n_grid: &[usize],
    m_grid: &[usize],
    generator_seed: u64,
    config: &FitConfig,
    repetitions: usize,
) -> Result<Vec<ScalingPoint>> {
    let mut points = Vec::new();
    for &m in m_grid {
        for &n in n_grid {
            let ds = gaussian_classes(n, m, 3, 0.6, generator_seed);
            let set = build_partitions(&ds, config)?;
            let z = set.normalizer.apply(&ds.x);
            let mut best = f64::INFINITY;
            let mut shape = (0, 0);
            for _ in 0..repetitions.max(1) {
                let started = Instant::now();
                let tree = grow_tree(&z, &ds.y, ds.n_classes(), &set.partitions, &config.tree)?;
                best = best.min(started.elapsed().as_secs_f64());
                shape = (tree.rule_nodes().count(), tree.nodes.len());
            }
            points.push(ScalingPoint {
                n,
                m,
                seconds: best.max(1e-9),
                rules: shape.0,
                nodes: shape.1,
            });
        }
    }
    Ok(points)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = mean(logs.iter().map(|p| p.0));
    let my = mean(logs.iter().map(|p| p.1));
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub const SCALING_HEADER: &str = "n,m,seconds,rules,nodes";

pub fn write_scaling<W: Write>(out: &mut W, points: &[ScalingPoint]) -> std::io::Result<()> {
    writeln!(out, "{SCALING_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{:.9},{},{}",
            p.n, p.m, p.seconds, p.rules, p.nodes
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&x| (x, 3.0 * x * x))
            .collect();
        assert!((loglog_slope(&pts) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn per_axis_cell_count() {
        let axes = SweepAxes {
            max_rules: vec![5, 10, 15],
            ..Default::default()
        };
        let cells = sweep_cells(&FitConfig::default(), &axes, SweepMode::PerAxis).unwrap();
        assert_eq!(cells.len(), 3);
        let axes = SweepAxes {
            max_rules: vec![5, 10],
            coverage_threshold: vec![0.0, 0.1],
            min_gain_theta: vec![0.0, 0.01, 0.05],
        };
        assert_eq!(
            sweep_cells(&FitConfig::default(), &axes, SweepMode::Cartesian)
                .unwrap()
                .len(),
            12
        );
        assert_eq!(
            sweep_cells(&FitConfig::default(), &axes, SweepMode::PerAxis)
                .unwrap()
                .len(),
            7
        );
    }

    #[test]
    fn out_of_range_coverage_rejected() {
        let axes = SweepAxes {
            coverage_threshold: vec![0.05, 1.2],
            ..Default::default()
        };
        assert!(matches!(
            sweep_cells(&FitConfig::default(), &axes, SweepMode::PerAxis),
            Err(FgrtError::Config(_))
        ));
    }

    #[test]
    fn generators_are_seeded() {
        assert_eq!(
            gaussian_classes(30, 4, 3, 2.0, 9),
            gaussian_classes(30, 4, 3, 2.0, 9)
        );
        assert_ne!(
            gaussian_classes(30, 4, 3, 2.0, 9).x,
            gaussian_classes(30, 4, 3, 2.0, 10).x
        );
        let cb = checkerboard(200, 3, 1);
        assert!(cb.y.iter().filter(|&&c| c == 1).count() > 50);
    }
}
