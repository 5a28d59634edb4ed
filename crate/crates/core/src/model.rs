//! The fitted artifact: pruned bases, coefficients, persistence and rule export.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backward::{run_backward, PruneConfig, PruneTrace};
use crate::basis::{design_column, BasisFunction};
use crate::dataset::{Dataset, FeatureSpec};
use crate::error::{FairMarsError, Result};
use crate::fairness::{disparity, subgroup_weights};
use crate::forward::{run_forward, ForwardConfig, ForwardState};
use crate::least_squares::build_system;

/// Model file schema understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Everything that controls a fit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    #[serde(flatten)]
    pub forward: ForwardConfig,
    /// Refit the surviving bases with subgroup-balanced weights.
    pub faircoef: bool,
    /// GCV cost per knot; `None` picks 3, or 2 for additive models.
    pub gcv_penalty: Option<f64>,
    /// λ used while pruning; `None` reuses the knot-search λ.
    pub backward_lambda: Option<f64>,
    /// Recorded for provenance (fold shuffling seed in the harness).
    pub seed: u64,
}

impl FitConfig {
    pub fn prune_config(&self) -> PruneConfig {
        PruneConfig {
            lambda: self.backward_lambda.unwrap_or_else(|| self.forward.knot_lambda()),
            gcv_penalty: self
                .gcv_penalty
                .unwrap_or_else(|| PruneConfig::default_penalty(self.forward.max_degree)),
            parallel: self.forward.parallel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.forward.validate()?;
        if let Some(d) = self.gcv_penalty {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(FairMarsError::Config(format!("GCV penalty must be non-negative, got {d}")));
            }
        }
        if let Some(l) = self.backward_lambda {
            crate::fairness::check_lambda(l)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_hash: String,
    /// SHA-256 of the forward log as JSON lines.
    pub fit_log_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub n_rows: usize,
    /// Residual sum of squares of the final coefficients on the training rows.
    pub lof: f64,
    pub disparity: f64,
    pub gcv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairMarsModel {
    bases: Vec<BasisFunction>,
    coefficients: Vec<f64>,
    response_mean: f64,
    column_names: Vec<String>,
    feature_specs: Vec<FeatureSpec>,
    group_names: Vec<String>,
    sensitive_column: String,
    config: FitConfig,
    provenance: Provenance,
    /// Forward bases removed by pruning.
    pruned_bases: Vec<BasisFunction>,
    training: TrainingSummary,
}

/// A fitted model together with the intermediate search results.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: FairMarsModel,
    pub forward: ForwardState,
    pub trace: PruneTrace,
}

/// Forward pass, pruning, then the final (optionally weighted) refit.
pub fn fit(ds: &Dataset, cfg: &FitConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    let forward = run_forward(ds, &cfg.forward)?;
    let prune = cfg.prune_config();
    let trace = run_backward(&forward, ds, &prune)?;
    let best = trace.best();
    let bases: Vec<BasisFunction> = best
        .active
        .iter()
        .map(|&id| forward.bases[id].clone())
        .collect();
    let pruned_bases: Vec<BasisFunction> = forward
        .bases
        .iter()
        .filter(|b| !best.active.contains(&b.id))
        .cloned()
        .collect();

    let coefficients = if cfg.faircoef {
        fit_faircoef(&bases, ds)?
    } else {
        forward.system().select(&best.active)?.solve_span().coefficients.iter().copied().collect()
    };

    let design = design_matrix(&bases, ds);
    let resid = crate::least_squares::residuals(&design, ds.response(), &DVector::from_column_slice(&coefficients));
    let lof: f64 = resid.iter().map(|r| r * r).sum();
    let training = TrainingSummary {
        n_rows: ds.n_rows(),
        lof,
        disparity: disparity(&resid, ds.groups(), ds.n_groups()).disparity,
        gcv: best.gcv,
    };
    let log = forward.log_json_lines()?;
    let provenance = Provenance {
        dataset_hash: ds.content_hash(),
        fit_log_digest: hex::encode(Sha256::digest(log.as_bytes())),
    };
    let model = FairMarsModel {
        bases,
        coefficients,
        response_mean: ds.response_mean(),
        column_names: ds.column_names().to_vec(),
        feature_specs: ds.feature_specs().to_vec(),
        group_names: ds.group_names().to_vec(),
        sensitive_column: ds.sensitive_column().to_string(),
        config: cfg.clone(),
        provenance,
        pruned_bases,
        training,
    };
    model.check()?;
    Ok(FitOutcome {
        model,
        forward,
        trace,
    })
}

fn design_matrix(bases: &[BasisFunction], ds: &Dataset) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(ds.n_rows(), bases.len());
    for (j, b) in bases.iter().enumerate() {
        m.set_column(j, &DVector::from_vec(design_column(ds, b)));
    }
    m
}

/// Weighted least squares over fixed bases with weights `n / n_g`.
pub fn fit_faircoef(bases: &[BasisFunction], ds: &Dataset) -> Result<Vec<f64>> {
    if bases.first().is_none_or(|b| !b.is_intercept()) {
        return Err(FairMarsError::Precondition("bases must start with the intercept".into()));
    }
    let weights = subgroup_weights(ds.groups(), ds.n_groups())?;
    let design = design_matrix(bases, ds);
    let sys = build_system(&design, ds.response(), Some(&weights), true)?;
    Ok(sys.solve()?.coefficients.iter().copied().collect())
}

impl FairMarsModel {
    /// Assembles a model from parts; used for hand-built models and tests.
    pub fn from_parts(
        bases: Vec<BasisFunction>,
        coefficients: Vec<f64>,
        response_mean: f64,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let model = FairMarsModel {
            feature_specs: column_names
                .iter()
                .map(|c| FeatureSpec::Numeric { source: c.clone() })
                .collect(),
            bases,
            coefficients,
            response_mean,
            column_names,
            group_names: Vec::new(),
            sensitive_column: String::new(),
            config: FitConfig {
                forward: ForwardConfig {
                    max_degree: usize::MAX,
                    ..Default::default()
                },
                ..Default::default()
            },
            provenance: Provenance {
                dataset_hash: String::new(),
                fit_log_digest: String::new(),
            },
            pruned_bases: Vec::new(),
            training: TrainingSummary {
                n_rows: 0,
                lof: 0.0,
                disparity: 0.0,
                gcv: 0.0,
            },
        };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        if self.bases.is_empty() || !self.bases[0].is_intercept() {
            return Err(FairMarsError::Model("first basis must be the intercept".into()));
        }
        if self.bases.len() != self.coefficients.len() {
            return Err(FairMarsError::Model(format!(
                "{} bases but {} coefficients",
                self.bases.len(),
                self.coefficients.len()
            )));
        }
        if self.feature_specs.len() != self.column_names.len() {
            return Err(FairMarsError::Model("feature recipe does not match columns".into()));
        }
        if !self.response_mean.is_finite() || self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(FairMarsError::Model("non-finite coefficient".into()));
        }
        for b in self.bases.iter().chain(&self.pruned_bases) {
            b.validate(self.column_names.len(), self.config.forward.max_degree)
                .map_err(|e| FairMarsError::Model(e.to_string()))?;
        }
        Ok(())
    }

    pub fn bases(&self) -> &[BasisFunction] {
        &self.bases
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn response_mean(&self) -> f64 {
        self.response_mean
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn feature_specs(&self) -> &[FeatureSpec] {
        &self.feature_specs
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn sensitive_column(&self) -> &str {
        &self.sensitive_column
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn pruned_bases(&self) -> &[BasisFunction] {
        &self.pruned_bases
    }

    pub fn training(&self) -> &TrainingSummary {
        &self.training
    }

    pub fn n_features(&self) -> usize {
        self.column_names.len()
    }

    /// Hash of the basis structure, independent of the coefficients.
    pub fn structure_hash(&self) -> String {
        let mut h = Sha256::new();
        for b in &self.bases {
            for (v, k, plus, lin) in b.structure_key() {
                h.update((v as u64).to_le_bytes());
                h.update(k.to_le_bytes());
                h.update([u8::from(plus), u8::from(lin)]);
            }
            h.update([0xff]);
        }
        hex::encode(h.finalize())
    }

    /// `Σ β_m B_m(x) + response_mean`.
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features() {
            return Err(FairMarsError::Dimension {
                expected: self.n_features(),
                got: row.len(),
            });
        }
        let s: f64 = self
            .bases
            .iter()
            .zip(&self.coefficients)
            .map(|(b, c)| c * b.eval(row))
            .sum();
        Ok(s + self.response_mean)
    }

    /// Predictions for every row of an `n × d` matrix.
    pub fn predict_matrix(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(FairMarsError::Dimension {
                expected: self.n_features(),
                got: x.ncols(),
            });
        }
        (0..x.nrows())
            .map(|i| {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                self.predict(&row)
            })
            .collect()
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        self.predict_matrix(ds.features())
    }

    /// Copy with the coefficients refit by subgroup-weighted least squares.
    pub fn with_faircoef(&self, ds: &Dataset) -> Result<FairMarsModel> {
        let mut m = self.clone();
        m.coefficients = fit_faircoef(&self.bases, ds)?;
        m.response_mean = ds.response_mean();
        m.config.faircoef = true;
        m.check()?;
        Ok(m)
    }

    /// One line per basis: coefficient to two decimals, then the basis. The
    /// intercept line carries the response mean. Pruned bases are listed in
    /// forward order with a `pruned` marker when requested.
    pub fn export_rules(&self, include_pruned: bool) -> String {
        let mut rows: Vec<(usize, String, String)> = self
            .bases
            .iter()
            .zip(&self.coefficients)
            .map(|(b, &c)| {
                let c = if b.is_intercept() { c + self.response_mean } else { c };
                (b.id, two_decimals(c), b.render(&self.column_names))
            })
            .collect();
        if include_pruned {
            rows.extend(
                self.pruned_bases
                    .iter()
                    .map(|b| (b.id, "pruned".to_string(), b.render(&self.column_names))),
            );
            rows.sort_by_key(|r| r.0);
        }
        let mut out = String::new();
        for (_, coef, basis) in rows {
            let _ = writeln!(out, "{coef}  {basis}");
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFileRef {
            schema_version: SCHEMA_VERSION,
            model: self,
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| FairMarsError::Model(format!("corrupted model file: {e}")))?;
        let version = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| FairMarsError::Model("corrupted model file: missing schema_version".into()))?;
        if version != u64::from(SCHEMA_VERSION) {
            return Err(FairMarsError::Version {
                found: u32::try_from(version).unwrap_or(u32::MAX),
                expected: SCHEMA_VERSION,
            });
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| FairMarsError::Model(format!("corrupted model file: {e}")))?;
        file.model.check()?;
        Ok(file.model)
    }

    /// Writes through a temporary file in the target directory and renames it.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| FairMarsError::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize)]
struct ModelFileRef<'a> {
    schema_version: u32,
    model: &'a FairMarsModel,
}

#[derive(Deserialize)]
struct ModelFile {
    #[allow(dead_code)]
    schema_version: u32,
    model: FairMarsModel,
}

fn two_decimals(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Writes `bytes` to `path` via a sibling temporary file and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| FairMarsError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| FairMarsError::io(path, e))?;
    tmp.persist(path).map_err(|e| FairMarsError::io(path, e.error))?;
    Ok(())
}
