//! Tabular data ingestion, sensitive-attribute encoding and fold planning.
//!
//! The response is centered when a [`Dataset`] is built, so every downstream
//! least-squares formula can assume a zero response mean. The subtracted mean
//! is kept in [`Dataset::response_mean`] and added back at prediction time.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{FairMarsError, Result};

/// Cells treated as missing values.
const MISSING_TOKENS: &[&str] = &["", "?", "NA", "na", "N/A", "nan", "NaN"];

/// Options for [`load_csv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub response_col: String,
    pub sensitive_col: String,
    /// Predictor columns. `None` uses every column except the response
    /// (and the sensitive column when `include_sensitive` is false).
    pub feature_cols: Option<Vec<String>>,
    /// Also expose the sensitive attribute as a predictor.
    pub include_sensitive: bool,
    pub delimiter: u8,
}

impl CsvOptions {
    pub fn new(response_col: impl Into<String>, sensitive_col: impl Into<String>) -> Self {
        CsvOptions {
            response_col: response_col.into(),
            sensitive_col: sensitive_col.into(),
            feature_cols: None,
            include_sensitive: true,
            delimiter: b',',
        }
    }

    pub fn with_feature_cols(mut self, cols: Vec<String>) -> Self {
        self.feature_cols = Some(cols);
        self
    }

    pub fn with_include_sensitive(mut self, include: bool) -> Self {
        self.include_sensitive = include;
        self
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }
}

/// How a feature column is derived from a CSV record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSpec {
    Numeric { source: String },
    /// Indicator of `source == level`.
    OneHot { source: String, level: String },
}

impl FeatureSpec {
    pub fn source(&self) -> &str {
        match self {
            FeatureSpec::Numeric { source } | FeatureSpec::OneHot { source, .. } => source,
        }
    }
}

/// Feature matrix, centered response and subgroup labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    feature_specs: Vec<FeatureSpec>,
    response: Vec<f64>,
    response_mean: f64,
    groups: Vec<usize>,
    column_names: Vec<String>,
    group_names: Vec<String>,
    sensitive_column: String,
}

impl Dataset {
    /// Builds a dataset from raw (uncentered) values.
    ///
    /// Groups must be contiguous ids `0..group_names.len()` and every group
    /// must own at least one row.
    pub fn new(
        features: DMatrix<f64>,
        raw_response: Vec<f64>,
        groups: Vec<usize>,
        column_names: Vec<String>,
        group_names: Vec<String>,
        sensitive_column: impl Into<String>,
    ) -> Result<Self> {
        let n = raw_response.len();
        if n == 0 {
            return Err(FairMarsError::Data("dataset has no rows".into()));
        }
        if features.nrows() != n || groups.len() != n {
            return Err(FairMarsError::Data(format!(
                "row count mismatch: {} feature rows, {} responses, {} group labels",
                features.nrows(),
                n,
                groups.len()
            )));
        }
        if features.ncols() != column_names.len() {
            return Err(FairMarsError::Data(format!(
                "{} feature columns but {} column names",
                features.ncols(),
                column_names.len()
            )));
        }
        if let Some(i) = raw_response.iter().position(|v| !v.is_finite()) {
            return Err(FairMarsError::Data(format!("non-finite response at row {i}")));
        }
        if let Some(idx) = features.iter().position(|v| !v.is_finite()) {
            let (row, col) = (idx % n, idx / n);
            return Err(FairMarsError::Data(format!(
                "non-finite feature '{}' at row {row}",
                column_names[col]
            )));
        }
        let mut sizes = vec![0usize; group_names.len()];
        for (row, &g) in groups.iter().enumerate() {
            match sizes.get_mut(g) {
                Some(s) => *s += 1,
                None => {
                    return Err(FairMarsError::Data(format!(
                        "group id {g} at row {row} has no group name"
                    )))
                }
            }
        }
        if let Some(g) = sizes.iter().position(|&s| s == 0) {
            return Err(FairMarsError::Data(format!(
                "group '{}' has no rows",
                group_names[g]
            )));
        }

        let response_mean = raw_response.iter().sum::<f64>() / n as f64;
        let response = raw_response.iter().map(|y| y - response_mean).collect();
        let feature_specs = column_names
            .iter()
            .map(|c| FeatureSpec::Numeric { source: c.clone() })
            .collect();
        Ok(Dataset {
            features,
            feature_specs,
            response,
            response_mean,
            groups,
            column_names,
            group_names,
            sensitive_column: sensitive_column.into(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.response.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    /// Contiguous view of feature column `j`.
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n_rows();
        &self.features.as_slice()[j * n..(j + 1) * n]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    /// Centered response.
    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn response_mean(&self) -> f64 {
        self.response_mean
    }

    /// Response on its original scale.
    pub fn raw_response(&self) -> Vec<f64> {
        self.response.iter().map(|y| y + self.response_mean).collect()
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn n_groups(&self) -> usize {
        self.group_names.len()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_groups()];
        for &g in &self.groups {
            sizes[g] += 1;
        }
        sizes
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn sensitive_column(&self) -> &str {
        &self.sensitive_column
    }

    /// Recipe for rebuilding each feature column from raw CSV records.
    pub fn feature_specs(&self) -> &[FeatureSpec] {
        &self.feature_specs
    }

    /// Rows `rows` as a new dataset, re-centered on their own response mean.
    ///
    /// Group names are kept even when a group has no row in the subset, so
    /// group ids stay comparable across folds.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let d = self.n_features();
        let features = DMatrix::from_fn(rows.len(), d, |i, j| self.features[(rows[i], j)]);
        let raw: Vec<f64> = rows
            .iter()
            .map(|&r| self.response[r] + self.response_mean)
            .collect();
        let n = raw.len().max(1);
        let response_mean = raw.iter().sum::<f64>() / n as f64;
        Dataset {
            features,
            feature_specs: self.feature_specs.clone(),
            response: raw.iter().map(|y| y - response_mean).collect(),
            response_mean,
            groups: rows.iter().map(|&r| self.groups[r]).collect(),
            column_names: self.column_names.clone(),
            group_names: self.group_names.clone(),
            sensitive_column: self.sensitive_column.clone(),
        }
    }

    /// SHA-256 over shape, features, raw response and group labels.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_rows() as u64).to_le_bytes());
        h.update((self.n_features() as u64).to_le_bytes());
        for v in self.features.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        for y in self.raw_response() {
            h.update(y.to_bits().to_le_bytes());
        }
        for &g in &self.groups {
            h.update((g as u64).to_le_bytes());
        }
        for name in &self.column_names {
            h.update(name.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }
}

/// Reads a CSV file into a [`Dataset`].
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| FairMarsError::io(path, e))?;
    load_csv_reader(file, opts)
}

/// Reads CSV text from any reader. Row numbers in errors are 1-based data
/// rows (the header is not counted).
pub fn load_csv_reader<R: Read>(reader: R, opts: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim_matches('"').to_string())
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(FairMarsError::Data("empty file: no header row".into()));
    }
    let index_of = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| FairMarsError::Config(format!("column '{name}' not found in header")))
    };
    let response_idx = index_of(&opts.response_col)?;
    let sensitive_idx = index_of(&opts.sensitive_col)?;

    let feature_idx: Vec<usize> = match &opts.feature_cols {
        Some(cols) => {
            let mut idx = Vec::with_capacity(cols.len() + 1);
            for c in cols {
                let i = index_of(c)?;
                if i == response_idx {
                    return Err(FairMarsError::Config(format!(
                        "response column '{c}' cannot also be a feature"
                    )));
                }
                if i != sensitive_idx || opts.include_sensitive {
                    idx.push(i);
                }
            }
            if opts.include_sensitive && !idx.contains(&sensitive_idx) {
                idx.push(sensitive_idx);
            }
            idx
        }
        None => (0..header.len())
            .filter(|&i| i != response_idx && (i != sensitive_idx || opts.include_sensitive))
            .collect(),
    };

    let mut records: Vec<Vec<String>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() == 1 && rec.get(0).is_some_and(str::is_empty) {
            continue;
        }
        if rec.len() != header.len() {
            return Err(FairMarsError::Data(format!(
                "row {} has {} fields, header has {}",
                records.len() + 1,
                rec.len(),
                header.len()
            )));
        }
        records.push(rec.iter().map(|s| s.trim_matches('"').to_string()).collect());
    }
    if records.is_empty() {
        return Err(FairMarsError::Data("empty file: no data rows".into()));
    }
    let n = records.len();

    for (row, rec) in records.iter().enumerate() {
        for &j in feature_idx
            .iter()
            .chain([response_idx, sensitive_idx].iter())
        {
            if MISSING_TOKENS.contains(&rec[j].as_str()) {
                return Err(FairMarsError::Data(format!(
                    "missing value in column '{}' at row {}",
                    header[j],
                    row + 1
                )));
            }
        }
    }

    let mut response = Vec::with_capacity(n);
    for (row, rec) in records.iter().enumerate() {
        let cell = &rec[response_idx];
        let v: f64 = cell.parse().map_err(|_| FairMarsError::Parse {
            row: row + 1,
            column: header[response_idx].clone(),
            message: format!("'{cell}' is not numeric"),
        })?;
        if !v.is_finite() {
            return Err(FairMarsError::Parse {
                row: row + 1,
                column: header[response_idx].clone(),
                message: format!("'{cell}' is not finite"),
            });
        }
        response.push(v);
    }

    let (groups, group_names) = encode_first_appearance(records.iter().map(|r| r[sensitive_idx].as_str()));

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut specs: Vec<FeatureSpec> = Vec::new();
    for &j in &feature_idx {
        let parsed: Option<Vec<f64>> = records
            .iter()
            .map(|r| r[j].parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        match parsed {
            Some(col) => {
                columns.push(col);
                names.push(header[j].clone());
                specs.push(FeatureSpec::Numeric {
                    source: header[j].clone(),
                });
            }
            None => {
                let (codes, levels) = encode_first_appearance(records.iter().map(|r| r[j].as_str()));
                for (level_id, level) in levels.iter().enumerate() {
                    columns.push(
                        codes
                            .iter()
                            .map(|&c| if c == level_id { 1.0 } else { 0.0 })
                            .collect(),
                    );
                    names.push(format!("{}_{}", header[j], level));
                    specs.push(FeatureSpec::OneHot {
                        source: header[j].clone(),
                        level: level.clone(),
                    });
                }
            }
        }
    }
    let d = columns.len();
    let features = DMatrix::from_fn(n, d, |i, j| columns[j][i]);
    let mut ds = Dataset::new(
        features,
        response,
        groups,
        names,
        group_names,
        header[sensitive_idx].clone(),
    )?;
    ds.feature_specs = specs;
    Ok(ds)
}

/// Builds a feature matrix from CSV text following `specs`. Other columns
/// (including a response, if present) are ignored.
pub fn encode_features<R: Read>(reader: R, specs: &[FeatureSpec], delimiter: u8) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim_matches('"').to_string())
        .collect();
    let mut source_idx = Vec::with_capacity(specs.len());
    for spec in specs {
        let i = header
            .iter()
            .position(|h| h == spec.source())
            .ok_or_else(|| FairMarsError::Config(format!("column '{}' not found in header", spec.source())))?;
        source_idx.push(i);
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() == 1 && rec.get(0).is_some_and(str::is_empty) {
            continue;
        }
        let row_no = rows.len() + 1;
        let mut row = Vec::with_capacity(specs.len());
        for (spec, &i) in specs.iter().zip(&source_idx) {
            let cell = rec.get(i).map(|c| c.trim_matches('"')).unwrap_or("");
            if MISSING_TOKENS.contains(&cell) {
                return Err(FairMarsError::Data(format!(
                    "missing value in column '{}' at row {row_no}",
                    spec.source()
                )));
            }
            let v = match spec {
                FeatureSpec::Numeric { source } => cell
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| FairMarsError::Parse {
                        row: row_no,
                        column: source.clone(),
                        message: format!("'{cell}' is not numeric"),
                    })?,
                FeatureSpec::OneHot { level, .. } => f64::from(u8::from(cell == level)),
            };
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(FairMarsError::Data("empty file: no data rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), specs.len(), |i, j| rows[i][j]))
}

/// Contiguous ids in order of first appearance.
fn encode_first_appearance<'a>(values: impl Iterator<Item = &'a str>) -> (Vec<usize>, Vec<String>) {
    let mut lookup: HashMap<&str, usize> = HashMap::new();
    let mut names = Vec::new();
    let codes = values
        .map(|v| {
            *lookup.entry(v).or_insert_with(|| {
                names.push(v.to_string());
                names.len() - 1
            })
        })
        .collect();
    (codes, names)
}

/// Deterministic k-fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    /// Shuffles `0..n` with a seeded ChaCha stream and deals rows round-robin,
    /// so fold sizes differ by at most one and lower folds take the remainder.
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k < 2 || k > n {
            return Err(FairMarsError::Config(format!(
                "fold count {k} must satisfy 2 <= k <= n = {n}"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let mut assignments = vec![0; n];
        for (pos, &row) in order.iter().enumerate() {
            assignments[row] = pos % k;
        }
        Ok(FoldPlan {
            k,
            seed,
            assignments,
        })
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let plan: FoldPlan = serde_json::from_str(s)?;
        if plan.k < 2 || plan.assignments.iter().any(|&a| a >= plan.k) {
            return Err(FairMarsError::Data("fold plan has out-of-range fold ids".into()));
        }
        Ok(plan)
    }
}

/// Fold plan over the rows of `ds`.
pub fn make_folds(ds: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    FoldPlan::new(ds.n_rows(), k, seed)
}
