//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal invariant violation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{load_for_scoring, load_with_manifest, Dataset};
use crate::error::{FgrtError, Result};
use crate::eval::{
    cross_validate, runtime_scaling, sweep, write_report, write_scaling, EvalReport, RunManifest,
    SweepAxes, SweepMode,
};
use crate::fuzzy::TNorm;
use crate::inference::{classify, render_explanation};
use crate::model::{build_partitions, fit, FgrtModel, FitConfig};
use crate::tree::Aggregation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fgrt",
    version,
    about = "Fuzzy greedy rule trees: compact fuzzy rulebases from tabular data"
)]
pub struct Cli {
    /// Worker threads for folds, sweep cells and per-feature work.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on a CSV file, write the model and print the rulebase.
    Fit(FitArgs),
    /// Score a CSV file with a trained model.
    Predict(PredictArgs),
    /// Stratified k-fold cross-validation.
    Evaluate(EvaluateArgs),
    /// Cross-validation over a grid of tree hyperparameters.
    Sweep(SweepArgs),
    /// Tune the partitions of every feature and dump them, without growing a tree.
    OptimizePartitions(OptimizeArgs),
    /// Time tree growth on synthetic data of increasing size.
    RuntimeScaling(ScalingArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Label column [default: last column, or the one named in <data stem>.manifest.toml].
    #[arg(long)]
    pub label_column: Option<String>,
}

/// Model hyperparameters. Unset flags fall back to `--config`, then to
/// the built-in defaults shown here.
#[derive(Debug, Default, Args)]
pub struct ModelArgs {
    /// TOML file with `[tree]`/`[search]` tables; explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Maximum number of rules [default: 15].
    #[arg(long)]
    pub max_rules: Option<usize>,
    /// Maximum conditions per rule [default: 5].
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Minimum impurity gain for an expansion [default: 0.01].
    #[arg(long)]
    pub min_gain: Option<f64>,
    /// Minimum fraction of root membership mass to expand a node [default: 0.05].
    #[arg(long)]
    pub coverage_threshold: Option<f64>,
    /// Firing strength below which inference falls back to ancestors [default: 0.05].
    #[arg(long)]
    pub firing_threshold: Option<f64>,
    /// Fuzzy AND: product or minimum [default: product].
    #[arg(long)]
    pub tnorm: Option<TNorm>,
    /// Rule aggregation: max or additive [default: max].
    #[arg(long)]
    pub aggregation: Option<Aggregation>,
    /// Linguistic terms per feature [default: 3].
    #[arg(long)]
    pub terms: Option<usize>,
    /// Tune partitions by separability before growing the tree [default: off].
    #[arg(long)]
    pub optimize_partitions: bool,
    /// Search step sizes as fractions of the feature range [default: 0.10,0.05,0.02].
    #[arg(long, value_delimiter = ',')]
    pub step_fractions: Option<Vec<f64>>,
    /// Cycle cap per step size [default: 10].
    #[arg(long)]
    pub max_cycles: Option<usize>,
    /// Critical parameters moved per feature; must equal --terms [default: 3].
    #[arg(long)]
    pub parameters_per_feature: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Where to write the model JSON.
    #[arg(long = "model")]
    pub model_path: PathBuf,
    /// Seed recorded in the model metadata.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// CSV with the model's feature columns (by header name).
    #[arg(long)]
    pub data: PathBuf,
    /// Label column for reporting accuracy [default: the single non-feature column, if any].
    #[arg(long)]
    pub label_column: Option<String>,
    /// Trained model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Where to write the predictions CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Print the fired rules behind each prediction.
    #[arg(long)]
    pub explain: bool,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    /// Input CSV files with a header row; repeat for several datasets.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    /// Label column [default: last column, or the one named in <data stem>.manifest.toml].
    #[arg(long)]
    pub label_column: Option<String>,
    /// Where to write the report CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Where to write the run manifest JSON [default: not written].
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Number of cross-validation folds.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Seed for fold assignment.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub cv: CvArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub cv: CvArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Values for max_rules [default: base value only].
    #[arg(long, value_delimiter = ',')]
    pub max_rules_axis: Vec<usize>,
    /// Values for coverage_threshold [default: base value only].
    #[arg(long, value_delimiter = ',')]
    pub coverage_axis: Vec<f64>,
    /// Values for min_gain [default: base value only].
    #[arg(long, value_delimiter = ',')]
    pub min_gain_axis: Vec<f64>,
    /// Take the Cartesian product of the axes instead of varying one at a time.
    #[arg(long)]
    pub cartesian: bool,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Where to write the partition dump CSV.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sample counts.
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub n_grid: Vec<usize>,
    /// Feature counts.
    #[arg(long, value_delimiter = ',', default_value = "20")]
    pub m_grid: Vec<usize>,
    /// Generator seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Timed repetitions per point; the fastest is kept.
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    /// Where to write the timing CSV.
    #[arg(long)]
    pub output: PathBuf,
}

impl ModelArgs {
    /// Defaults, then the config file, then explicit flags.
    pub fn resolve(&self) -> Result<FitConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| FgrtError::io(path, e))?;
                toml::from_str::<FitConfig>(&text)
                    .map_err(|e| FgrtError::Config(format!("{}: {e}", path.display())))?
            }
            None => FitConfig::default(),
        };
        let tree = &mut config.tree;
        if let Some(v) = self.max_rules {
            tree.max_rules = v;
        }
        if let Some(v) = self.max_depth {
            tree.max_depth = v;
        }
        if let Some(v) = self.min_gain {
            tree.min_gain_theta = v;
        }
        if let Some(v) = self.coverage_threshold {
            tree.coverage_threshold = v;
        }
        if let Some(v) = self.firing_threshold {
            tree.firing_threshold = v;
        }
        if let Some(v) = self.tnorm {
            tree.tnorm = v;
        }
        if let Some(v) = self.aggregation {
            tree.aggregation = v;
        }
        if let Some(v) = self.terms {
            config.terms_per_feature = v;
            // keep the search in step unless set explicitly
            config.search.parameters_per_feature = v;
        }
        if self.optimize_partitions {
            config.optimize_partitions = true;
        }
        if let Some(v) = &self.step_fractions {
            config.search.step_fractions = v.clone();
        }
        if let Some(v) = self.max_cycles {
            config.search.max_cycles = v;
        }
        if let Some(v) = self.parameters_per_feature {
            config.search.parameters_per_feature = v;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<FgrtError> for Failure {
    fn from(e: FgrtError) -> Self {
        let message = e.to_string();
        match e {
            FgrtError::Config(_) => Failure::Usage(message),
            FgrtError::MalformedRule(_)
            | FgrtError::EncodingOrder { .. }
            | FgrtError::DegenerateEncoding
            | FgrtError::InvalidPartition(_) => Failure::Internal(message),
            _ => Failure::Data(message),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_INTERNAL;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::OptimizePartitions(a) => cmd_optimize(a),
        Command::RuntimeScaling(a) => cmd_scaling(a),
    }
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| FgrtError::io(path, e).into())
}

fn write_io(path: &Path, r: std::io::Result<()>) -> std::result::Result<(), Failure> {
    r.map_err(|e| FgrtError::io(path, e).into())
}

fn load_data(path: &Path, label: Option<&str>) -> std::result::Result<Dataset, Failure> {
    Ok(load_with_manifest(path, label)?)
}

fn cmd_fit(a: FitArgs) -> std::result::Result<(), Failure> {
    let config = a.model.resolve()?;
    let ds = load_data(&a.data.data, a.data.label_column.as_deref())?;
    let model = fit(&ds, &config, a.seed)?;
    model.save(&a.model_path)?;

    let mut correct = 0;
    for (row, &y) in ds.x.iter().zip(&ds.y) {
        if classify(&model, row)?.predicted_class == y {
            correct += 1;
        }
    }
    let prior = model
        .default_distribution
        .iter()
        .copied()
        .fold(0.0, f64::max);
    print!("{}", model.rulebase_text());
    println!(
        "training accuracy: {:.4} (root prior: {:.4}, rules: {}, conditions/rule: {:.2})",
        correct as f64 / ds.n_samples() as f64,
        prior,
        model.rules.len(),
        model.conditions_per_rule()
    );
    Ok(())
}

pub const PREDICTION_FIXED_COLUMNS: [&str; 2] = ["sample", "predicted_class"];

fn cmd_predict(a: PredictArgs) -> std::result::Result<(), Failure> {
    let model = FgrtModel::load(&a.model).map_err(|e| Failure::Data(e.to_string()))?;
    let table = load_for_scoring(
        &a.data,
        &model.feature_names,
        &model.class_names,
        a.label_column.as_deref(),
    )?;
    let mut out = create(&a.output)?;
    let mut header: Vec<String> = PREDICTION_FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(model.class_names.iter().map(|c| format!("score_{c}")));
    header.push("winning_rule".into());
    header.push("fallback".into());
    let mut lines = vec![header.join(",")];
    let mut correct = 0;
    let stdout = std::io::stdout();
    let mut console = stdout.lock();
    for (i, row) in table.x.iter().enumerate() {
        let p = classify(&model, row)?;
        let mut cells = vec![i.to_string(), model.class_names[p.predicted_class].clone()];
        cells.extend(p.class_scores.iter().map(|s| format!("{s:.6}")));
        cells.push(p.winning_rule.map_or(String::new(), |r| r.to_string()));
        cells.push(u8::from(p.fallback_used).to_string());
        lines.push(cells.join(","));
        if let Some(y) = &table.y {
            if y[i] == Some(p.predicted_class) {
                correct += 1;
            }
        }
        if a.explain {
            let text = format!(
                "sample {i}: class={}\n{}",
                model.class_names[p.predicted_class],
                render_explanation(&model, &p)
            );
            write_io(Path::new("<stdout>"), console.write_all(text.as_bytes()))?;
        }
    }
    lines.push(String::new());
    write_io(&a.output, out.write_all(lines.join("\n").as_bytes()))?;
    write_io(&a.output, out.flush())?;
    if table.y.is_some() {
        println!(
            "accuracy: {:.4} ({correct}/{})",
            correct as f64 / table.x.len() as f64,
            table.x.len()
        );
    }
    Ok(())
}

fn print_summary(reports: &[EvalReport]) {
    for r in reports {
        println!(
            "{} [{}]: accuracy {:.4}, rules {:.2}, conditions/rule {:.2}, rulebase size {:.2}",
            r.dataset, r.cell, r.mean_accuracy, r.num_rules, r.conditions_per_rule, r.rulebase_size
        );
    }
}

fn finish_cv(
    command: &str,
    cv: &CvArgs,
    config: FitConfig,
    datasets: &[Dataset],
    reports: &[EvalReport],
) -> std::result::Result<(), Failure> {
    let mut out = create(&cv.output)?;
    write_io(&cv.output, write_report(&mut out, reports))?;
    write_io(&cv.output, out.flush())?;
    if let Some(path) = &cv.manifest {
        let manifest = RunManifest::new(
            command,
            datasets.iter().map(|d| d.name.clone()).collect(),
            cv.folds,
            cv.seed,
            config,
        );
        std::fs::write(path, manifest.to_json()?).map_err(|e| FgrtError::io(path, e))?;
    }
    print_summary(reports);
    Ok(())
}

fn load_all(cv: &CvArgs) -> std::result::Result<Vec<Dataset>, Failure> {
    cv.data
        .iter()
        .map(|p| load_data(p, cv.label_column.as_deref()))
        .collect()
}

fn cmd_evaluate(a: EvaluateArgs) -> std::result::Result<(), Failure> {
    let config = a.model.resolve()?;
    let datasets = load_all(&a.cv)?;
    let reports = datasets
        .iter()
        .map(|d| cross_validate(d, &config, a.cv.folds, a.cv.seed))
        .collect::<Result<Vec<_>>>()?;
    finish_cv("evaluate", &a.cv, config, &datasets, &reports)
}

fn cmd_sweep(a: SweepArgs) -> std::result::Result<(), Failure> {
    let config = a.model.resolve()?;
    let axes = SweepAxes {
        max_rules: a.max_rules_axis.clone(),
        coverage_threshold: a.coverage_axis.clone(),
        min_gain_theta: a.min_gain_axis.clone(),
    };
    let mode = if a.cartesian {
        SweepMode::Cartesian
    } else {
        SweepMode::PerAxis
    };
    // validate the grid before loading anything
    crate::eval::sweep_cells(&config, &axes, mode)?;
    let datasets = load_all(&a.cv)?;
    let mut reports = Vec::new();
    for d in &datasets {
        reports.extend(sweep(d, &config, &axes, mode, a.cv.folds, a.cv.seed)?);
    }
    finish_cv("sweep", &a.cv, config, &datasets, &reports)
}

pub const PARTITION_DUMP_HEADER: &str = "feature,term,a,b,c,d,si_before,si_after,evaluations";

fn cmd_optimize(a: OptimizeArgs) -> std::result::Result<(), Failure> {
    let mut config = a.model.resolve()?;
    config.optimize_partitions = true;
    config.validate()?;
    let ds = load_data(&a.data.data, a.data.label_column.as_deref())?;
    let set = build_partitions(&ds, &config)?;
    let mut text = String::from(PARTITION_DUMP_HEADER);
    text.push('\n');
    for (partition, report) in set.partitions.iter().zip(&set.reports) {
        let (Some(p), Some(r)) = (partition, report) else {
            continue;
        };
        for t in &p.terms {
            let s = &t.shape;
            text.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                p.feature_name, t.label, s.a, s.b, s.c, s.d, r.si_before, r.si_after, r.evaluations
            ));
        }
        println!(
            "{}: separability {:.4} -> {:.4} ({} evaluations)",
            p.feature_name, r.si_before, r.si_after, r.evaluations
        );
    }
    for &f in &set.dropped {
        eprintln!(
            "note: `{}` is constant and was skipped",
            ds.feature_names[f]
        );
    }
    std::fs::write(&a.output, text).map_err(|e| FgrtError::io(&a.output, e))?;
    Ok(())
}

fn cmd_scaling(a: ScalingArgs) -> std::result::Result<(), Failure> {
    let config = a.model.resolve()?;
    if a.n_grid.is_empty()
        || a.m_grid.is_empty()
        || a.n_grid.iter().chain(&a.m_grid).any(|&v| v == 0)
    {
        return Err(Failure::Usage(
            "grids must be non-empty and positive".into(),
        ));
    }
    let points = runtime_scaling(&a.n_grid, &a.m_grid, a.seed, &config, a.repetitions)?;
    let mut out = create(&a.output)?;
    write_io(&a.output, write_scaling(&mut out, &points))?;
    write_io(&a.output, out.flush())?;
    for p in &points {
        println!(
            "n={} m={}: {:.6} s ({} rules)",
            p.n, p.m, p.seconds, p.rules
        );
    }
    Ok(())
}
