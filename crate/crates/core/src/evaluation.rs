//! K-fold cross-validation, test metrics and λ sweeps.
//!
//! Reports are deterministic: fold results are assembled in fold order and
//! wall-clock timings are kept out of the serialized output.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FoldPlan};
use crate::error::{FairMarsError, Result};
use crate::fairness::{check_lambda, disparity, DisparityReport};
use crate::model::{fit, FairMarsModel, FitConfig};

/// The λ grid searched by the cross-validation protocol.
pub const LAMBDA_GRID: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "mars")]
    Mars,
    #[serde(rename = "fairknot")]
    FairKnot,
    #[serde(rename = "faircoef")]
    FairCoef,
    #[serde(rename = "fairknot+faircoef")]
    FairKnotFairCoef,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Mars,
        Variant::FairKnot,
        Variant::FairCoef,
        Variant::FairKnotFairCoef,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Mars => "mars",
            Variant::FairKnot => "fairknot",
            Variant::FairCoef => "faircoef",
            Variant::FairKnotFairCoef => "fairknot+faircoef",
        }
    }

    pub fn uses_fair_knot(self) -> bool {
        matches!(self, Variant::FairKnot | Variant::FairKnotFairCoef)
    }

    pub fn uses_faircoef(self) -> bool {
        matches!(self, Variant::FairCoef | Variant::FairKnotFairCoef)
    }

    /// `base` with this variant's toggles; plain-knot variants run at λ = 0.
    pub fn apply(self, base: &FitConfig, lambda: f64) -> FitConfig {
        let mut cfg = base.clone();
        cfg.faircoef = self.uses_faircoef();
        cfg.forward.use_fair_knot = self.uses_fair_knot();
        cfg.forward.lambda = if self.uses_fair_knot() { lambda } else { 0.0 };
        cfg
    }
}

impl std::str::FromStr for Variant {
    type Err = FairMarsError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| FairMarsError::Config(format!("unknown variant '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    /// `None` when the evaluation response has zero variance.
    pub r2: Option<f64>,
    pub disparity: DisparityReport,
}

/// Test-set MSE, R² and subgroup disparity.
pub fn metrics(y_true: &[f64], y_pred: &[f64], groups: &[usize], n_groups: usize) -> Result<Metrics> {
    if y_true.len() != y_pred.len() || y_true.len() != groups.len() {
        return Err(FairMarsError::Precondition(format!(
            "length mismatch: {} targets, {} predictions, {} groups",
            y_true.len(),
            y_pred.len(),
            groups.len()
        )));
    }
    if y_true.is_empty() {
        return Err(FairMarsError::Precondition("no rows to evaluate".into()));
    }
    let n = y_true.len() as f64;
    let resid: Vec<f64> = y_true.iter().zip(y_pred).map(|(y, p)| y - p).collect();
    let sse: f64 = resid.iter().map(|r| r * r).sum();
    let mean = y_true.iter().sum::<f64>() / n;
    let sst: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    Ok(Metrics {
        mse: sse / n,
        r2: (sst > 0.0).then(|| 1.0 - sse / sst),
        disparity: disparity(&resid, groups, n_groups),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub mse: f64,
    pub r2: Option<f64>,
    pub disparity: DisparityReport,
    pub n_bases: usize,
    pub structure_hash: String,
    /// Wall-clock seconds for the fit; not serialized.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: Variant,
    pub lambda: f64,
    pub folds: Vec<FoldResult>,
    pub mean_mse: f64,
    /// Mean over folds with a defined R².
    pub mean_r2: Option<f64>,
    pub mean_disparity: f64,
    /// Per-group gap averaged over the folds where it is defined.
    pub mean_group_gaps: Vec<Option<f64>>,
    pub group_names: Vec<String>,
    /// (fold, group) entries omitted because the group was absent from a test fold.
    pub omitted_group_entries: usize,
    /// Disparity-minimizing λ within its variant's grid.
    pub selected: bool,
    pub config: FitConfig,
}

impl EvalReport {
    fn assemble(variant: Variant, lambda: f64, folds: Vec<FoldResult>, group_names: &[String], config: FitConfig) -> Self {
        let k = folds.len() as f64;
        let r2s: Vec<f64> = folds.iter().filter_map(|f| f.r2).collect();
        let g = group_names.len();
        let mut mean_group_gaps = Vec::with_capacity(g);
        let mut omitted = 0;
        for j in 0..g {
            let vals: Vec<f64> = folds
                .iter()
                .filter_map(|f| f.disparity.group_gaps.get(j).copied().flatten())
                .collect();
            omitted += folds.len() - vals.len();
            mean_group_gaps.push((!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64));
        }
        EvalReport {
            variant,
            lambda,
            mean_mse: folds.iter().map(|f| f.mse).sum::<f64>() / k,
            mean_r2: (!r2s.is_empty()).then(|| r2s.iter().sum::<f64>() / r2s.len() as f64),
            mean_disparity: folds.iter().map(|f| f.disparity.disparity).sum::<f64>() / k,
            mean_group_gaps,
            group_names: group_names.to_vec(),
            omitted_group_entries: omitted,
            selected: false,
            folds,
            config,
        }
    }

    pub fn total_seconds(&self) -> f64 {
        self.folds.iter().map(|f| f.seconds).sum()
    }
}

/// One structure fit on a training fold, with the faircoef refit of the same bases.
struct FoldFits {
    plain: FairMarsModel,
    weighted: Option<FairMarsModel>,
    seconds: f64,
    weighted_seconds: f64,
}

fn fit_fold(train: &Dataset, cfg: &FitConfig, with_faircoef: bool) -> Result<FoldFits> {
    let t = Instant::now();
    let mut c = cfg.clone();
    c.faircoef = false;
    let plain = fit(train, &c)?.model;
    let seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let weighted = if with_faircoef {
        Some(plain.with_faircoef(train)?)
    } else {
        None
    };
    Ok(FoldFits {
        plain,
        weighted,
        seconds,
        weighted_seconds: seconds + t.elapsed().as_secs_f64(),
    })
}

fn evaluate_fold(model: &FairMarsModel, test: &Dataset, fold: usize, n_train: usize, seconds: f64) -> Result<FoldResult> {
    let pred = model.predict_dataset(test)?;
    let m = metrics(&test.raw_response(), &pred, test.groups(), test.n_groups())?;
    Ok(FoldResult {
        fold,
        n_train,
        n_test: test.n_rows(),
        mse: m.mse,
        r2: m.r2,
        disparity: m.disparity,
        n_bases: model.bases().len(),
        structure_hash: model.structure_hash(),
        seconds,
    })
}

fn check_plan(ds: &Dataset, plan: &FoldPlan) -> Result<()> {
    if plan.assignments.len() != ds.n_rows() {
        return Err(FairMarsError::Config(format!(
            "fold plan covers {} rows, dataset has {}",
            plan.assignments.len(),
            ds.n_rows()
        )));
    }
    Ok(())
}

/// Cross-validates `variants` at a single λ. The faircoef variants reuse the
/// basis structure of their plain counterparts, fold by fold.
pub fn cross_validate(
    ds: &Dataset,
    cfg: &FitConfig,
    plan: &FoldPlan,
    variants: &[Variant],
    lambda: f64,
) -> Result<Vec<EvalReport>> {
    check_lambda(lambda)?;
    check_plan(ds, plan)?;
    cfg.validate()?;
    let structures: Vec<bool> = [false, true]
        .into_iter()
        .filter(|&fk| variants.iter().any(|v| v.uses_fair_knot() == fk))
        .collect();
    let jobs: Vec<(usize, bool)> = (0..plan.k)
        .flat_map(|f| structures.iter().map(move |&s| (f, s)))
        .collect();
    let run = |&(fold, fair_knot): &(usize, bool)| -> Result<(usize, bool, FoldFits)> {
        let train = ds.subset(&plan.train_rows(fold));
        let variant = if fair_knot { Variant::FairKnot } else { Variant::Mars };
        let c = variant.apply(cfg, lambda);
        let want_weighted = variants.iter().any(|v| v.uses_fair_knot() == fair_knot && v.uses_faircoef());
        Ok((fold, fair_knot, fit_fold(&train, &c, want_weighted)?))
    };
    let results: Vec<Result<(usize, bool, FoldFits)>> = if cfg.forward.parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };
    let mut fits = Vec::with_capacity(results.len());
    for r in results {
        fits.push(r?);
    }

    let mut reports = Vec::with_capacity(variants.len());
    for &variant in variants {
        let mut folds = Vec::with_capacity(plan.k);
        for (fold, fk, ff) in &fits {
            if *fk != variant.uses_fair_knot() {
                continue;
            }
            let test = ds.subset(&plan.test_rows(*fold));
            let n_train = ds.n_rows() - test.n_rows();
            let (model, secs) = if variant.uses_faircoef() {
                (ff.weighted.as_ref().expect("weighted fit requested"), ff.weighted_seconds)
            } else {
                (&ff.plain, ff.seconds)
            };
            folds.push(evaluate_fold(model, &test, *fold, n_train, secs)?);
        }
        let lam = if variant.uses_fair_knot() { lambda } else { 0.0 };
        reports.push(EvalReport::assemble(
            variant,
            lam,
            folds,
            ds.group_names(),
            variant.apply(cfg, lambda),
        ));
    }
    Ok(reports)
}

/// Full protocol: plain MARS and faircoef once, the fair-knot variants at every
/// grid λ, with the disparity-minimizing λ flagged per fair-knot variant.
pub fn cross_validate_grid(ds: &Dataset, cfg: &FitConfig, plan: &FoldPlan, lambdas: &[f64]) -> Result<Vec<EvalReport>> {
    if lambdas.is_empty() {
        return Err(FairMarsError::Config("λ grid is empty".into()));
    }
    for &l in lambdas {
        check_lambda(l)?;
    }
    let mut reports = cross_validate(ds, cfg, plan, &[Variant::Mars, Variant::FairCoef], 0.0)?;
    let per_lambda: Vec<Result<Vec<EvalReport>>> = lambdas
        .iter()
        .map(|&l| cross_validate(ds, cfg, plan, &[Variant::FairKnot, Variant::FairKnotFairCoef], l))
        .collect();
    let mut fair = Vec::new();
    for r in per_lambda {
        fair.extend(r?);
    }
    for variant in [Variant::FairKnot, Variant::FairKnotFairCoef] {
        let best = fair
            .iter()
            .enumerate()
            .filter(|(_, r)| r.variant == variant)
            .min_by(|a, b| a.1.mean_disparity.total_cmp(&b.1.mean_disparity))
            .map(|(i, _)| i);
        if let Some(i) = best {
            fair[i].selected = true;
        }
    }
    reports.extend(fair);
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    pub lambda: f64,
    pub mse: f64,
    pub r2: Option<f64>,
    pub disparity: DisparityReport,
    pub n_bases: usize,
    /// Rule listing with pruned entries marked.
    pub rules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub fold: usize,
    pub group_names: Vec<String>,
    /// One row per λ, then the faircoef refit of the λ = 0 structure.
    pub rows: Vec<SweepRow>,
}

/// Fits one model per λ on a shared training fold and scores it on the held-out fold.
pub fn lambda_sweep(ds: &Dataset, cfg: &FitConfig, lambdas: &[f64], plan: &FoldPlan, fold: usize) -> Result<SweepTable> {
    check_plan(ds, plan)?;
    if lambdas.first() != Some(&0.0) {
        return Err(FairMarsError::Config("λ sweep must start at 0".into()));
    }
    for w in lambdas.windows(2) {
        if !(w[0] < w[1]) {
            return Err(FairMarsError::Config("λ values must be strictly ascending".into()));
        }
    }
    for &l in lambdas {
        check_lambda(l)?;
    }
    if fold >= plan.k {
        return Err(FairMarsError::Config(format!("fold {fold} out of range for {} folds", plan.k)));
    }
    let train = ds.subset(&plan.train_rows(fold));
    let test = ds.subset(&plan.test_rows(fold));

    let run = |&l: &f64| -> Result<FairMarsModel> {
        let variant = if l == 0.0 { Variant::Mars } else { Variant::FairKnot };
        Ok(fit(&train, &variant.apply(cfg, l))?.model)
    };
    let models: Vec<Result<FairMarsModel>> = if cfg.forward.parallel {
        lambdas.par_iter().map(run).collect()
    } else {
        lambdas.iter().map(run).collect()
    };
    let mut rows = Vec::with_capacity(lambdas.len() + 1);
    let mut base: Option<FairMarsModel> = None;
    for (&l, m) in lambdas.iter().zip(models) {
        let m = m?;
        let label = if l == 0.0 { "mars".to_string() } else { format!("fairknot λ={l}") };
        rows.push(sweep_row(&m, &test, label, l)?);
        if l == 0.0 {
            base = Some(m);
        }
    }
    let weighted = base.expect("λ = 0 present").with_faircoef(&train)?;
    rows.push(sweep_row(&weighted, &test, "faircoef".into(), 0.0)?);
    Ok(SweepTable {
        fold,
        group_names: ds.group_names().to_vec(),
        rows,
    })
}

fn sweep_row(model: &FairMarsModel, test: &Dataset, label: String, lambda: f64) -> Result<SweepRow> {
    let pred = model.predict_dataset(test)?;
    let m = metrics(&test.raw_response(), &pred, test.groups(), test.n_groups())?;
    Ok(SweepRow {
        label,
        lambda,
        mse: m.mse,
        r2: m.r2,
        disparity: m.disparity,
        n_bases: model.bases().len(),
        rules: model.export_rules(true).lines().map(str::to_string).collect(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"))
}

/// Aligned text table, one row per report.
pub fn render_cv_text(reports: &[EvalReport]) -> String {
    let groups = reports.first().map(|r| r.group_names.clone()).unwrap_or_default();
    let mut out = String::new();
    let _ = write!(out, "{:<20} {:>7} {:>9} {:>9} {:>10}", "variant", "lambda", "MSE", "R2", "disparity");
    for g in &groups {
        let _ = write!(out, " {:>12}", format!("gap[{g}]"));
    }
    out.push_str("  selected\n");
    for r in reports {
        let _ = write!(
            out,
            "{:<20} {:>7.2} {:>9.4} {:>9} {:>10.4}",
            r.variant.name(),
            r.lambda,
            r.mean_mse,
            opt(r.mean_r2),
            r.mean_disparity
        );
        for g in &r.mean_group_gaps {
            let _ = write!(out, " {:>12}", opt(*g));
        }
        out.push_str(if r.selected { "  *\n" } else { "\n" });
    }
    out
}

pub fn render_cv_csv(reports: &[EvalReport]) -> Result<String> {
    let groups = reports.first().map(|r| r.group_names.clone()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["variant".to_string(), "lambda".into(), "fold".into(), "mse".into(), "r2".into(), "disparity".into()];
    header.extend(groups.iter().map(|g| format!("gap_{g}")));
    header.push("selected".into());
    w.write_record(&header)?;
    for r in reports {
        let mut push = |fold: String, mse: f64, r2: Option<f64>, disp: f64, gaps: &[Option<f64>]| -> Result<()> {
            let mut rec = vec![
                r.variant.name().to_string(),
                r.lambda.to_string(),
                fold,
                mse.to_string(),
                r2.map_or_else(String::new, |v| v.to_string()),
                disp.to_string(),
            ];
            rec.extend(gaps.iter().map(|g| g.map_or_else(String::new, |v| v.to_string())));
            rec.push(r.selected.to_string());
            w.write_record(&rec)?;
            Ok(())
        };
        for f in &r.folds {
            push(f.fold.to_string(), f.mse, f.r2, f.disparity.disparity, &f.disparity.group_gaps)?;
        }
        push("mean".into(), r.mean_mse, r.mean_r2, r.mean_disparity, &r.mean_group_gaps)?;
    }
    csv_string(w)
}

/// λ sweep as a text table followed by each column's rule listing.
pub fn render_sweep_text(table: &SweepTable) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<22} {:>9} {:>9} {:>10}", "model", "MSE", "R2", "disparity");
    for g in &table.group_names {
        let _ = write!(out, " {:>12}", format!("gap[{g}]"));
    }
    out.push('\n');
    for r in &table.rows {
        let _ = write!(out, "{:<22} {:>9.4} {:>9} {:>10.4}", r.label, r.mse, opt(r.r2), r.disparity.disparity);
        for g in &r.disparity.group_gaps {
            let _ = write!(out, " {:>12}", opt(*g));
        }
        out.push('\n');
    }
    for r in &table.rows {
        let _ = writeln!(out, "\n[{}]", r.label);
        for line in &r.rules {
            let _ = writeln!(out, "  {line}");
        }
    }
    out
}

pub fn render_sweep_csv(table: &SweepTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["model".to_string(), "lambda".into(), "mse".into(), "r2".into(), "disparity".into()];
    header.extend(table.group_names.iter().map(|g| format!("gap_{g}")));
    header.push("n_bases".into());
    w.write_record(&header)?;
    for r in &table.rows {
        let mut rec = vec![
            r.label.clone(),
            r.lambda.to_string(),
            r.mse.to_string(),
            r.r2.map_or_else(String::new, |v| v.to_string()),
            r.disparity.disparity.to_string(),
        ];
        rec.extend(r.disparity.group_gaps.iter().map(|g| g.map_or_else(String::new, |v| v.to_string())));
        rec.push(r.n_bases.to_string());
        w.write_record(&rec)?;
    }
    csv_string(w)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| FairMarsError::Data(format!("csv output: {e}")))?;
    String::from_utf8(bytes).map_err(|e| FairMarsError::Data(format!("csv output: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::make_folds;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn synth(seed: u64, n: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let g: Vec<usize> = (0..n).map(|i| usize::from(i % 3 == 0)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| (x[i] - 0.5).abs() + if g[i] == 1 { rng.random_range(-0.4..0.4) } else { rng.random_range(-0.1..0.1) })
            .collect();
        Dataset::new(
            DMatrix::from_fn(n, 1, |i, _| x[i]),
            y,
            g,
            vec!["x".into()],
            vec!["a".into(), "b".into()],
            "s",
        )
        .unwrap()
    }

    #[test]
    fn perfect_and_mean_predictions() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let g = [0, 1, 0, 1];
        let m = metrics(&y, &y, &g, 2).unwrap();
        assert_eq!((m.mse, m.r2, m.disparity.disparity), (0.0, Some(1.0), 0.0));
        let m = metrics(&y, &[2.5; 4], &g, 2).unwrap();
        assert_eq!(m.r2, Some(0.0));
        assert_eq!(metrics(&[1.0, 1.0], &[1.0, 2.0], &[0, 0], 1).unwrap().r2, None);
        assert!(metrics(&y, &y[..3], &g, 2).is_err());
    }

    #[test]
    fn metrics_recompute() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(5..60);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g: Vec<usize> = (0..n).map(|i| i % 2).collect();
            let m = metrics(&y, &p, &g, 2).unwrap();
            let mse = y.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
            let my = y.iter().sum::<f64>() / n as f64;
            let var = y.iter().map(|a| (a - my).powi(2)).sum::<f64>() / n as f64;
            assert!((m.mse - mse).abs() < 1e-12);
            assert!((m.r2.unwrap() - (1.0 - mse / var)).abs() < 1e-10);
        }
    }

    #[test]
    fn mars_equals_fairknot_at_zero() {
        let ds = synth(1, 120);
        let plan = make_folds(&ds, 4, 9).unwrap();
        let r = cross_validate(&ds, &FitConfig::default(), &plan, &[Variant::Mars, Variant::FairKnot], 0.0).unwrap();
        assert_eq!(
            serde_json::to_string(&r[0].folds).unwrap(),
            serde_json::to_string(&r[1].folds).unwrap()
        );
        assert_eq!(r[0].mean_mse, r[1].mean_mse);
    }

    #[test]
    fn faircoef_shares_structure_and_reports_are_deterministic() {
        let ds = synth(2, 150);
        let plan = make_folds(&ds, 5, 1).unwrap();
        let a = cross_validate(&ds, &FitConfig::default(), &plan, &Variant::ALL, 0.5).unwrap();
        let b = cross_validate(&ds, &FitConfig::default(), &plan, &Variant::ALL, 0.5).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for (x, y) in [(0, 2), (1, 3)] {
            for (f, g) in a[x].folds.iter().zip(&a[y].folds) {
                assert_eq!(f.structure_hash, g.structure_hash);
            }
        }
        let mean: f64 = a[0].folds.iter().map(|f| f.mse).sum::<f64>() / 5.0;
        assert_eq!(a[0].mean_mse, mean);
    }

    #[test]
    fn grid_flags_one_per_fair_variant() {
        let ds = synth(3, 100);
        let plan = make_folds(&ds, 3, 2).unwrap();
        let r = cross_validate_grid(&ds, &FitConfig::default(), &plan, &[0.2, 0.8]).unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(r.iter().filter(|x| x.selected).count(), 2);
        assert!(render_cv_text(&r).contains("fairknot+faircoef"));
        assert!(render_cv_csv(&r).unwrap().starts_with("variant,lambda,fold"));
    }

    #[test]
    fn sweep_shape_and_preconditions() {
        let ds = synth(4, 100);
        let plan = make_folds(&ds, 5, 3).unwrap();
        let t = lambda_sweep(&ds, &FitConfig::default(), &[0.0, 0.5], &plan, 0).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[0].label, "mars");
        let mars = cross_validate(&ds, &FitConfig::default(), &plan, &[Variant::Mars], 0.0).unwrap();
        assert_eq!(t.rows[0].mse, mars[0].folds[0].mse);
        assert!(lambda_sweep(&ds, &FitConfig::default(), &[0.1, 0.5], &plan, 0).unwrap_err().is_config());
        assert!(lambda_sweep(&ds, &FitConfig::default(), &[0.0, 0.5, 0.2], &plan, 0).unwrap_err().is_config());
        assert!(render_sweep_text(&t).contains("[faircoef]"));
    }

    #[test]
    fn absent_group_counted() {
        let base = synth(5, 60);
        // group b only in the first five rows, all held out by fold 1
        let ds = Dataset::new(
            base.features().clone(),
            base.raw_response(),
            (0..60).map(|i| usize::from(i < 5)).collect(),
            base.column_names().to_vec(),
            base.group_names().to_vec(),
            "s",
        )
        .unwrap();
        let plan = FoldPlan {
            k: 2,
            seed: 0,
            assignments: (0..60).map(|i| usize::from(i < 30)).collect(),
        };
        let r = cross_validate(&ds, &FitConfig::default(), &plan, &[Variant::Mars], 0.0).unwrap();
        assert_eq!(r[0].folds[0].disparity.group_gaps, vec![None, None]);
        assert_eq!(r[0].omitted_group_entries, 2);
        assert!(r[0].mean_group_gaps[1].is_some());
    }
}
