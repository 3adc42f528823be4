//! Dataset ingestion, z-score normalization and stratified folds.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FgrtError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    /// Row-major samples.
    pub x: Vec<Vec<f64>>,
    /// Dense class ids in `0..class_names.len()`.
    pub y: Vec<usize>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        x: Vec<Vec<f64>>,
        y: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Dataset {
            name: name.into(),
            feature_names,
            x,
            y,
            class_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(FgrtError::EmptyData);
        }
        if self.x.len() != self.y.len() {
            return Err(FgrtError::Config(format!(
                "{} rows but {} labels",
                self.x.len(),
                self.y.len()
            )));
        }
        let m = self.feature_names.len();
        if let Some(row) = self.x.iter().find(|r| r.len() != m) {
            return Err(FgrtError::ArityMismatch {
                expected: m,
                actual: row.len(),
            });
        }
        if let Some(&y) = self.y.iter().find(|&&y| y >= self.class_names.len()) {
            return Err(FgrtError::Config(format!(
                "class id {y} without a class name"
            )));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.x.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.x.iter().map(|r| r[feature]).collect()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Same samples with labels replaced.
    pub fn with_labels(&self, y: Vec<usize>) -> Result<Dataset> {
        Dataset::new(
            self.name.clone(),
            self.feature_names.clone(),
            self.x.clone(),
            y,
            self.class_names.clone(),
        )
    }
}

/// Optional companion file naming the label column and the class order.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(default)]
pub struct Manifest {
    pub name: Option<String>,
    pub label_column: Option<String>,
    pub class_names: Option<Vec<String>>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FgrtError::io(path, e))?;
        toml::from_str(&text).map_err(|e| FgrtError::Config(format!("{}: {e}", path.display())))
    }
}

/// Header plus raw string cells of a delimited file.
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_table(path: &Path) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| FgrtError::io(path, e))?;
    read_table_from(file)
}

pub fn read_table_from<R: std::io::Read>(source: R) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(RawTable { headers, rows })
}

pub(crate) fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(FgrtError::Parse {
            row,
            column: column.to_string(),
            message: if cell.is_empty() {
                "missing value".to_string()
            } else {
                format!("`{cell}` is not a finite number")
            },
        }),
    }
}

/// Loads a headed CSV file. The label column defaults to the last column;
/// class ids follow first appearance unless `class_order` fixes them.
///
/// Row numbers in parse errors are 1-based data rows (the header is row 0).
pub fn load_csv(path: &Path, label_column: Option<&str>) -> Result<Dataset> {
    load_csv_with(path, label_column, None)
}

pub fn load_csv_with(
    path: &Path,
    label_column: Option<&str>,
    class_order: Option<&[String]>,
) -> Result<Dataset> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    dataset_from_table(read_table(path)?, name, label_column, class_order)
}

/// Parses CSV text held in memory, same rules as [`load_csv`].
pub fn parse_csv(text: &str, name: &str, label_column: Option<&str>) -> Result<Dataset> {
    dataset_from_table(
        read_table_from(text.as_bytes())?,
        name.to_string(),
        label_column,
        None,
    )
}

fn dataset_from_table(
    table: RawTable,
    name: String,
    label_column: Option<&str>,
    class_order: Option<&[String]>,
) -> Result<Dataset> {
    let label_idx = match label_column {
        Some(name) => table
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| FgrtError::MissingColumn(name.to_string()))?,
        None => table
            .headers
            .len()
            .checked_sub(1)
            .ok_or_else(|| FgrtError::MissingColumn("<label>".to_string()))?,
    };
    if table.rows.is_empty() {
        return Err(FgrtError::EmptyData);
    }
    let feature_names: Vec<String> = table
        .headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut class_names: Vec<String> = class_order.map(<[String]>::to_vec).unwrap_or_default();
    let mut class_ids: HashMap<String, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();
    let fixed_classes = class_order.is_some();

    let mut x = Vec::with_capacity(table.rows.len());
    let mut y = Vec::with_capacity(table.rows.len());
    for (r, cells) in table.rows.iter().enumerate() {
        let row_no = r + 1;
        let mut row = Vec::with_capacity(feature_names.len());
        for (c, cell) in cells.iter().enumerate() {
            if c == label_idx {
                continue;
            }
            row.push(parse_cell(cell, row_no, &table.headers[c])?);
        }
        let label = &cells[label_idx];
        let id = match class_ids.get(label) {
            Some(&id) => id,
            None if fixed_classes => {
                return Err(FgrtError::Parse {
                    row: row_no,
                    column: table.headers[label_idx].clone(),
                    message: format!("class `{label}` is not listed in the manifest"),
                })
            }
            None => {
                let id = class_names.len();
                class_names.push(label.clone());
                class_ids.insert(label.clone(), id);
                id
            }
        };
        x.push(row);
        y.push(id);
    }
    Dataset::new(name, feature_names, x, y, class_names)
}

/// Loads a CSV, honouring `<stem>.manifest.toml` next to it when present.
/// An explicit `label_column` wins over the manifest.
pub fn load_with_manifest(path: &Path, label_column: Option<&str>) -> Result<Dataset> {
    let manifest_path = path.with_extension("manifest.toml");
    let manifest = if manifest_path.exists() {
        Manifest::load(&manifest_path)?
    } else {
        Manifest::default()
    };
    let label = label_column.or(manifest.label_column.as_deref());
    let mut ds = load_csv_with(path, label, manifest.class_names.as_deref())?;
    if let Some(name) = manifest.name {
        ds.name = name;
    }
    Ok(ds)
}

/// Rows to score with an existing model: feature columns picked by name,
/// plus the label column when the file has one.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringTable {
    pub x: Vec<Vec<f64>>,
    /// Class id per row; `None` where the label is not a known class.
    pub y: Option<Vec<Option<usize>>>,
}

/// Reads `path` for scoring. Columns are matched to `feature_names` by
/// header; the label column is `label_column`, or otherwise the single
/// column that is not a feature, if any.
pub fn load_for_scoring(
    path: &Path,
    feature_names: &[String],
    class_names: &[String],
    label_column: Option<&str>,
) -> Result<ScoringTable> {
    let table = read_table(path)?;
    if table.rows.is_empty() {
        return Err(FgrtError::EmptyData);
    }
    let columns = feature_names
        .iter()
        .map(|f| {
            table
                .headers
                .iter()
                .position(|h| h == f)
                .ok_or_else(|| FgrtError::MissingColumn(f.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let label_idx = match label_column {
        Some(name) => Some(
            table
                .headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| FgrtError::MissingColumn(name.to_string()))?,
        ),
        None => {
            let extra: Vec<usize> = (0..table.headers.len())
                .filter(|i| !columns.contains(i))
                .collect();
            (extra.len() == 1).then(|| extra[0])
        }
    };
    let mut x = Vec::with_capacity(table.rows.len());
    for (r, cells) in table.rows.iter().enumerate() {
        let row = columns
            .iter()
            .map(|&c| parse_cell(&cells[c], r + 1, &table.headers[c]))
            .collect::<Result<Vec<_>>>()?;
        x.push(row);
    }
    let y = label_idx.map(|l| {
        table
            .rows
            .iter()
            .map(|cells| class_names.iter().position(|c| *c == cells[l]))
            .collect()
    });
    Ok(ScoringTable { x, y })
}

/// Per-feature z-score parameters (population standard deviation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: f64,
    pub std: f64,
}

impl FeatureStats {
    pub fn is_degenerate(&self) -> bool {
        !(self.std > 0.0)
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            (v - self.mean) / self.std
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub stats: Vec<FeatureStats>,
}

impl Normalizer {
    /// Fits on the given (training) rows only.
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(FgrtError::EmptyData);
        }
        let m = x[0].len();
        let stats = (0..m)
            .map(|f| {
                let mean = x.iter().map(|r| r[f]).sum::<f64>() / n as f64;
                let var = x.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n as f64;
                let std = var.sqrt();
                // constant columns can leave rounding residue in the variance
                let constant = x.iter().all(|r| r[f] == x[0][f]);
                FeatureStats {
                    mean,
                    std: if constant { 0.0 } else { std },
                }
            })
            .collect();
        Ok(Normalizer { stats })
    }

    pub fn degenerate(&self) -> Vec<usize> {
        self.stats
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_degenerate())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.stats)
            .map(|(&v, s)| s.apply(v))
            .collect()
    }

    pub fn apply(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.apply_row(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Fold index per sample.
    pub assignments: Vec<usize>,
    /// Classes with fewer samples than folds.
    pub sparse_classes: Vec<usize>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Seeded stratified k-fold assignment.
///
/// Samples of each class are shuffled and dealt round-robin; the dealing
/// position carries over between classes so fold sizes stay balanced too.
pub fn stratified_kfold(y: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(FgrtError::Config(format!("k must be at least 2, got {k}")));
    }
    if k > y.len() {
        return Err(FgrtError::Config(format!(
            "{k} folds requested for {} samples",
            y.len()
        )));
    }
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; y.len()];
    let mut sparse_classes = Vec::new();
    let mut position = 0;
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            sparse_classes.push(class);
        }
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignments[i] = position % k;
            position += 1;
        }
    }
    Ok(FoldPlan {
        k,
        seed,
        assignments,
        sparse_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_small_file() {
        let f = write("a,b,label\n1,2,x\n3,.5,y\n5,6,x\n");
        let ds = load_csv(f.path(), None).unwrap();
        assert_eq!((ds.n_samples(), ds.n_features()), (3, 2));
        assert_eq!(ds.y, vec![0, 1, 0]);
        assert_eq!(ds.class_names, vec!["x", "y"]);
        assert_eq!(ds.x[1], vec![3.0, 0.5]);
    }

    #[test]
    fn parse_error_names_row_and_column() {
        let f = write("a,b,label\n1,2,x\n3,oops,y\n");
        match load_csv(f.path(), None) {
            Err(FgrtError::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
        let f = write("a,b,label\n1,,x\n");
        assert!(matches!(
            load_csv(f.path(), None),
            Err(FgrtError::Parse { .. })
        ));
    }

    #[test]
    fn label_column_in_the_middle() {
        let f = write("a,label,b,c\n1,p,2,3\n4,q,5,6\n");
        let ds = load_csv(f.path(), Some("label")).unwrap();
        assert_eq!(ds.feature_names, vec!["a", "b", "c"]);
        assert_eq!(ds.x[1], vec![4.0, 5.0, 6.0]);
        assert!(matches!(
            load_csv(f.path(), Some("nope")),
            Err(FgrtError::MissingColumn(_))
        ));
    }

    #[test]
    fn missing_and_empty_files() {
        assert!(matches!(
            load_csv(Path::new("/definitely/not/here.csv"), None),
            Err(FgrtError::Io { .. })
        ));
        let f = write("a,label\n");
        assert!(matches!(
            load_csv(f.path(), None),
            Err(FgrtError::EmptyData)
        ));
    }

    #[test]
    fn manifest_fixes_classes() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("toy.csv");
        std::fs::write(&csv_path, "cls,a\nyes,1\nno,2\n").unwrap();
        std::fs::write(
            dir.path().join("toy.manifest.toml"),
            "label_column = \"cls\"\nclass_names = [\"no\", \"yes\"]\n",
        )
        .unwrap();
        let ds = load_with_manifest(&csv_path, None).unwrap();
        assert_eq!(ds.y, vec![1, 0]);
        assert_eq!(ds.feature_names, vec!["a"]);
    }

    #[test]
    fn normalization_on_fit_data() {
        let x: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![i as f64 * 0.3 + 2.0, 7.0, (i * i) as f64])
            .collect();
        let norm = Normalizer::fit(&x).unwrap();
        assert_eq!(norm.degenerate(), vec![1]);
        let z = norm.apply(&x);
        for f in [0, 2] {
            let mean = z.iter().map(|r| r[f]).sum::<f64>() / 50.0;
            let var = z.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / 50.0;
            assert!(mean.abs() < 1e-9);
            assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn held_out_rows_use_train_stats() {
        let train: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let test: Vec<Vec<f64>> = (0..10).map(|i| vec![100.0 + 10.0 * i as f64]).collect();
        let norm = Normalizer::fit(&train).unwrap();
        // train: mean 4.5, population std sqrt(8.25)
        let std = 8.25f64.sqrt();
        let z = norm.apply(&test);
        for (row, raw) in z.iter().zip(&test) {
            assert!((row[0] - (raw[0] - 4.5) / std).abs() < 1e-12);
        }
        let own = Normalizer::fit(&test).unwrap();
        assert_ne!(own.stats[0], norm.stats[0]);
    }

    #[test]
    fn balanced_folds() {
        let y: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let plan = stratified_kfold(&y, 5, 42).unwrap();
        for fold in 0..5 {
            let test = plan.test_indices(fold);
            let ones = test.iter().filter(|&&i| y[i] == 1).count();
            assert_eq!((test.len() - ones, ones), (10, 10));
        }
        assert_eq!(plan, stratified_kfold(&y, 5, 42).unwrap());
        assert_ne!(
            plan.assignments,
            stratified_kfold(&y, 5, 43).unwrap().assignments
        );
    }

    #[test]
    fn sparse_class_spread_over_folds() {
        let mut y = vec![0; 20];
        y.extend([1, 1, 1]);
        let plan = stratified_kfold(&y, 5, 7).unwrap();
        assert_eq!(plan.sparse_classes, vec![1]);
        let mut folds: Vec<usize> = (20..23).map(|i| plan.assignments[i]).collect();
        folds.sort();
        folds.dedup();
        assert_eq!(folds.len(), 3);
    }

    #[test]
    fn too_many_folds() {
        assert!(stratified_kfold(&[0, 1, 0], 5, 1).is_err());
        assert!(stratified_kfold(&[0, 1, 0], 1, 1).is_err());
    }
}
