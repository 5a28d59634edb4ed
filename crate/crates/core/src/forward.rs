//! Forward stepwise selection with a fairness-penalized knot search.
//!
//! Every iteration sweeps each eligible (parent, variable) pair over its
//! candidate knots in descending order. A trial model is the current basis set
//! plus `parent·x_v` and `parent·[x_v − k]_+`; its coefficients come from the
//! normal equations, with the hinge entry of the c-vector carried across knots
//! by the fast update. The trial is scored by `lof + λ·disparity` and the best
//! candidate is committed as the mirrored pair `parent·[±(x_v − k)]_+`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{design_column, BasisFunction, HingeTerm};
use crate::dataset::Dataset;
use crate::error::{FairMarsError, Result};
use crate::fairness::{check_lambda, disparity_value, penalize};
use crate::least_squares::{build_system, lof, residuals, KnotSweep, NormalSystem};

/// Early-stop threshold relative to `Σy²`.
const IMPROVEMENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForwardConfig {
    /// Largest basis count; pairs are added while `bases + 1 <= max_terms`.
    pub max_terms: usize,
    /// Interaction order cap.
    pub max_degree: usize,
    /// Fairness weight λ.
    pub lambda: f64,
    /// Groups smaller than this are still averaged in, but counted in the report.
    pub min_group_size: usize,
    /// Score knots with `lof + λ·disparity` instead of `lof`.
    pub use_fair_knot: bool,
    /// Only stop at `max_terms`; disables the improvement threshold.
    pub strict_paper_mode: bool,
    /// Keep every `min_span`-th candidate knot (0 or 1 keeps all).
    pub min_span: usize,
    /// Drop this many extreme candidate knots at each end of the support.
    pub end_span: usize,
    /// Evaluate (parent, variable) sweeps on the rayon pool.
    pub parallel: bool,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig {
            max_terms: 21,
            max_degree: 1,
            lambda: 0.0,
            min_group_size: 1,
            use_fair_knot: true,
            strict_paper_mode: false,
            min_span: 0,
            end_span: 0,
            parallel: true,
        }
    }
}

impl ForwardConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.max_terms < 3 {
            return Err(FairMarsError::Config(format!(
                "max_terms must be at least 3, got {}",
                self.max_terms
            )));
        }
        if self.max_degree < 1 {
            return Err(FairMarsError::Config("max_degree must be at least 1".into()));
        }
        Ok(())
    }

    /// λ actually applied to knot scoring.
    pub fn knot_lambda(&self) -> f64 {
        if self.use_fair_knot {
            self.lambda
        } else {
            0.0
        }
    }
}

/// One scored trial model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Index of the parent in the current basis list.
    pub parent_id: usize,
    pub variable: usize,
    pub knot: f64,
    pub objective: f64,
    pub lof: f64,
    pub disparity: f64,
    /// Current bases, then the linear term, then the hinge.
    pub coefficients: Vec<f64>,
    /// Some trial column was linearly dependent and got a zero coefficient.
    pub degenerate: bool,
}

/// One committed forward iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    /// Basis count after the commit.
    #[serde(rename = "M")]
    pub m: usize,
    pub parent: usize,
    pub v: usize,
    pub k: f64,
    pub lof: f64,
    pub disparity: f64,
    pub objective: f64,
    /// Committed columns found linearly dependent (zero coefficient).
    pub dependent_columns: usize,
    /// Number of trials scored in this iteration.
    pub candidates: usize,
    /// Best objective over this iteration's trials.
    pub best_trial_objective: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ForwardReport {
    pub trials: usize,
    pub degenerate_trials: usize,
    pub non_finite_trials: usize,
    /// Refits of committed models that had a dependent column.
    pub dependent_refits: usize,
    /// Groups with fewer rows than `min_group_size`.
    pub small_groups: usize,
    pub stop_reason: String,
}

/// Incrementally grown forward model.
#[derive(Debug, Clone)]
pub struct ForwardState {
    pub bases: Vec<BasisFunction>,
    columns: DMatrix<f64>,
    system: NormalSystem,
    pub coefficients: Vec<f64>,
    pub lof: f64,
    pub disparity: f64,
    pub objective: f64,
    /// Dependent columns in the current model.
    pub dependent_columns: usize,
    pub log: Vec<IterationLog>,
    pub report: ForwardReport,
    lambda: f64,
}

impl ForwardState {
    /// Intercept-only model.
    pub fn new(ds: &Dataset, cfg: &ForwardConfig) -> Result<Self> {
        let n = ds.n_rows();
        let columns = DMatrix::from_element(n, 1, 1.0);
        let mut state = ForwardState {
            bases: vec![BasisFunction::intercept()],
            system: build_system(&columns, ds.response(), None, true)?,
            columns,
            coefficients: Vec::new(),
            lof: 0.0,
            disparity: 0.0,
            objective: 0.0,
            dependent_columns: 0,
            log: Vec::new(),
            report: ForwardReport::default(),
            lambda: cfg.knot_lambda(),
        };
        state.refit(ds)?;
        Ok(state)
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn system(&self) -> &NormalSystem {
        &self.system
    }

    pub fn total_sum_of_squares(&self) -> f64 {
        self.system.yty
    }

    fn refit(&mut self, ds: &Dataset) -> Result<()> {
        // dependent twins get a zero coefficient
        let sol = self.system.solve_span();
        self.lof = lof(&self.system, &sol.coefficients);
        let r = residuals(&self.columns, ds.response(), &sol.coefficients);
        let mut sq = vec![0.0; ds.n_groups()];
        let mut sizes = vec![0; ds.n_groups()];
        self.disparity = disparity_value(&r, ds.groups(), &mut sq, &mut sizes);
        self.objective = penalize(self.lof, self.disparity, self.lambda);
        self.dependent_columns = sol.dropped.len();
        if !sol.dropped.is_empty() {
            self.report.dependent_refits += 1;
        }
        self.coefficients = sol.coefficients.iter().copied().collect();
        Ok(())
    }

    fn commit(&mut self, ds: &Dataset, best: &TrialResult) -> Result<()> {
        let parent = self.bases[best.parent_id].clone();
        let id = self.bases.len();
        let plus = BasisFunction::extend(&parent, HingeTerm::plus(best.variable, best.knot), id)?;
        let minus = BasisFunction::extend(&parent, HingeTerm::minus(best.variable, best.knot), id + 1)?;
        let (n, m) = self.columns.shape();
        let mut cols = self.columns.clone().resize_horizontally(m + 2, 0.0);
        cols.set_column(m, &DVector::from_vec(design_column(ds, &plus)));
        cols.set_column(m + 1, &DVector::from_vec(design_column(ds, &minus)));
        debug_assert_eq!(cols.nrows(), n);
        self.bases.push(plus);
        self.bases.push(minus);
        self.system = build_system(&cols, ds.response(), None, true)?;
        self.columns = cols;
        self.refit(ds)
    }

    /// Bases that may take another factor.
    fn parents(&self, cfg: &ForwardConfig) -> Vec<usize> {
        (0..self.bases.len())
            .filter(|&m| self.bases[m].degree() < cfg.max_degree)
            .collect()
    }

    /// Writes the fit log as JSON lines.
    pub fn log_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for rec in &self.log {
            out.push_str(&serde_json::to_string(rec)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Distinct `x_v` over rows where `parent` is strictly positive, descending.
pub fn eligible_knots(ds: &Dataset, parent: &BasisFunction, v: usize) -> Result<Vec<f64>> {
    if parent.uses_variable(v) {
        return Err(FairMarsError::Precondition(format!(
            "variable {v} already used by the parent basis"
        )));
    }
    let p = design_column(ds, parent);
    let x = ds.column(v);
    let mut knots: Vec<f64> = x
        .iter()
        .zip(&p)
        .filter(|(_, &b)| b > 0.0)
        .map(|(&x, _)| x)
        .collect();
    knots.sort_by(|a, b| b.total_cmp(a));
    knots.dedup();
    Ok(knots)
}

fn filter_knots(knots: Vec<f64>, cfg: &ForwardConfig) -> Vec<f64> {
    let mut knots = knots;
    if cfg.end_span > 0 {
        if knots.len() <= 2 * cfg.end_span {
            return Vec::new();
        }
        knots = knots[cfg.end_span..knots.len() - cfg.end_span].to_vec();
    }
    if cfg.min_span > 1 {
        knots = knots.into_iter().step_by(cfg.min_span).collect();
    }
    knots
}

/// Per-sweep data shared by every knot of one (parent, variable) pair.
struct TrialContext<'a> {
    ds: &'a Dataset,
    parent_id: usize,
    variable: usize,
    parent: Vec<f64>,
    /// Current columns plus the linear column `parent·x_v`.
    base_cols: DMatrix<f64>,
    base_gram: DMatrix<f64>,
    base_means: Vec<f64>,
    base_c: Vec<f64>,
    /// Support rows sorted by descending x (ties by row index).
    support_desc: Vec<usize>,
    lambda: f64,
    fair: bool,
    yty: f64,
    y_sum: f64,
}

impl<'a> TrialContext<'a> {
    fn new(ds: &'a Dataset, state: &ForwardState, parent_id: usize, variable: usize, cfg: &ForwardConfig) -> Self {
        let n = ds.n_rows();
        let m = state.columns.ncols();
        let parent: Vec<f64> = state.columns.column(parent_id).iter().copied().collect();
        let x = ds.column(variable);
        let y = ds.response();
        let linear: Vec<f64> = parent.iter().zip(x).map(|(p, x)| p * x).collect();

        let mut base_cols = state.columns.clone().resize_horizontally(m + 1, 0.0);
        base_cols.set_column(m, &DVector::from_column_slice(&linear));

        let lin_mean = linear.iter().sum::<f64>() / n as f64;
        let mut base_means: Vec<f64> = state.system.col_means.iter().copied().collect();
        base_means.push(lin_mean);
        let mut base_c: Vec<f64> = state.system.cvec.iter().copied().collect();
        base_c.push(linear.iter().zip(y).map(|(l, y)| l * y).sum());

        let mut base_gram = state.system.gram.clone().resize(m + 1, m + 1, 0.0);
        for j in 0..m {
            let cj = state.columns.column(j);
            let mj = base_means[j];
            let mut s = 0.0;
            for q in 0..n {
                s += (linear[q] - lin_mean) * (cj[q] - mj);
            }
            base_gram[(m, j)] = s;
            base_gram[(j, m)] = s;
        }
        base_gram[(m, m)] = linear.iter().map(|l| (l - lin_mean) * (l - lin_mean)).sum();

        let mut support_desc: Vec<usize> = (0..n).filter(|&q| parent[q] > 0.0).collect();
        support_desc.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));

        let lambda = cfg.knot_lambda();
        TrialContext {
            ds,
            parent_id,
            variable,
            parent,
            base_cols,
            base_gram,
            base_means,
            base_c,
            support_desc,
            lambda,
            fair: cfg.use_fair_knot && lambda > 0.0,
            yty: state.system.yty,
            y_sum: state.system.weighted_y_sum,
        }
    }

    /// Number of leading support rows with `x > k`.
    fn active_prefix(&self, k: f64, start: usize) -> usize {
        let x = self.ds.column(self.variable);
        let mut end = start;
        while end < self.support_desc.len() && x[self.support_desc[end]] > k {
            end += 1;
        }
        end
    }

    /// Scores knot `k` given the hinge c-entry and the `x > k` support prefix.
    fn score(&self, k: f64, c_hinge: f64, prefix: usize) -> TrialResult {
        let ds = self.ds;
        let n = ds.n_rows();
        let x = ds.column(self.variable);
        let mb = self.base_cols.ncols();
        let rows = &self.support_desc[..prefix];

        let mut h_sum = 0.0;
        let mut h_sq = 0.0;
        let mut cross = vec![0.0; mb];
        for &q in rows {
            let h = self.parent[q] * (x[q] - k);
            h_sum += h;
            h_sq += h * h;
            for (j, c) in cross.iter_mut().enumerate() {
                *c += h * self.base_cols[(q, j)];
            }
        }
        let h_mean = h_sum / n as f64;

        let dim = mb + 1;
        let mut gram = self.base_gram.clone().resize(dim, dim, 0.0);
        for j in 0..mb {
            let v = cross[j] - n as f64 * h_mean * self.base_means[j];
            gram[(mb, j)] = v;
            gram[(j, mb)] = v;
        }
        gram[(mb, mb)] = h_sq - n as f64 * h_mean * h_mean;
        let mut means = self.base_means.clone();
        means.push(h_mean);
        let mut cvec = self.base_c.clone();
        cvec.push(c_hinge);

        let sys = NormalSystem {
            gram,
            cvec: DVector::from_vec(cvec),
            col_means: DVector::from_vec(means),
            intercept: true,
            total_weight: n as f64,
            weighted_y_sum: self.y_sum,
            yty: self.yty,
        };
        let sol = sys.solve_span();
        let lof_value = lof(&sys, &sol.coefficients);

        let disparity = if self.fair {
            let beta = &sol.coefficients;
            let mut r = residuals(&self.base_cols, ds.response(), &beta.rows(0, mb).into_owned());
            let bh = beta[mb];
            if bh != 0.0 {
                for &q in rows {
                    r[q] -= bh * self.parent[q] * (x[q] - k);
                }
            }
            let mut sq = vec![0.0; ds.n_groups()];
            let mut sizes = vec![0; ds.n_groups()];
            disparity_value(&r, ds.groups(), &mut sq, &mut sizes)
        } else {
            0.0
        };

        TrialResult {
            parent_id: self.parent_id,
            variable: self.variable,
            knot: k,
            objective: penalize(lof_value, disparity, self.lambda),
            lof: lof_value,
            disparity,
            coefficients: sol.coefficients.iter().copied().collect(),
            degenerate: !sol.dropped.is_empty(),
        }
    }
}

/// Scores every candidate knot of one (parent, variable) pair using the
/// descending fast c-vector update.
pub fn sweep_candidate(
    ds: &Dataset,
    state: &ForwardState,
    parent_id: usize,
    variable: usize,
    cfg: &ForwardConfig,
) -> Result<Vec<TrialResult>> {
    let parent = &state.bases[parent_id];
    if parent.uses_variable(variable) {
        return Ok(Vec::new());
    }
    let ctx = TrialContext::new(ds, state, parent_id, variable, cfg);
    let mut sweep = KnotSweep::new(ds.column(variable), &ctx.parent, ds.response());
    let knots = filter_knots(sweep.knots(), cfg);
    let mut out = Vec::with_capacity(knots.len());
    let mut prefix = 0;
    for k in knots {
        let c = sweep.advance(k)?;
        prefix = ctx.active_prefix(k, prefix);
        out.push(ctx.score(k, c, prefix));
    }
    Ok(out)
}

/// Scores a single knot with a direct c-vector computation.
pub fn score_knot(
    ds: &Dataset,
    state: &ForwardState,
    parent_id: usize,
    variable: usize,
    knot: f64,
    cfg: &ForwardConfig,
) -> Result<TrialResult> {
    let parent = state
        .bases
        .get(parent_id)
        .ok_or_else(|| FairMarsError::Precondition(format!("no basis {parent_id}")))?;
    let knots = eligible_knots(ds, parent, variable)?;
    if !knots.contains(&knot) {
        return Err(FairMarsError::Precondition(format!(
            "knot {knot} is not an eligible knot for variable {variable}"
        )));
    }
    let ctx = TrialContext::new(ds, state, parent_id, variable, cfg);
    let x = ds.column(variable);
    let y = ds.response();
    let c: f64 = (0..ds.n_rows())
        .map(|q| y[q] * ctx.parent[q] * (x[q] - knot).max(0.0))
        .sum();
    let prefix = ctx.active_prefix(knot, 0);
    Ok(ctx.score(knot, c, prefix))
}

/// Every trial of one forward iteration, in (parent, variable, knot-descending) order.
pub fn scan_candidates(ds: &Dataset, state: &ForwardState, cfg: &ForwardConfig) -> Result<Vec<TrialResult>> {
    let pairs: Vec<(usize, usize)> = state
        .parents(cfg)
        .into_iter()
        .flat_map(|m| (0..ds.n_features()).map(move |v| (m, v)))
        .filter(|&(m, v)| !state.bases[m].uses_variable(v))
        .collect();
    let per_pair: Vec<Result<Vec<TrialResult>>> = if cfg.parallel {
        pairs
            .par_iter()
            .map(|&(m, v)| sweep_candidate(ds, state, m, v, cfg))
            .collect()
    } else {
        pairs
            .iter()
            .map(|&(m, v)| sweep_candidate(ds, state, m, v, cfg))
            .collect()
    };
    let mut all = Vec::new();
    for r in per_pair {
        all.extend(r?);
    }
    Ok(all)
}

/// Minimum objective; ties go to the lower variable, then the lower knot,
/// then the lower parent. Non-finite objectives never win.
pub fn best_candidate(trials: &[TrialResult]) -> Option<&TrialResult> {
    trials
        .iter()
        .filter(|t| t.objective.is_finite())
        .min_by(|a, b| {
            a.objective
                .total_cmp(&b.objective)
                .then(a.variable.cmp(&b.variable))
                .then(a.knot.total_cmp(&b.knot))
                .then(a.parent_id.cmp(&b.parent_id))
        })
}

/// Runs the forward pass from the intercept-only model.
pub fn run_forward(ds: &Dataset, cfg: &ForwardConfig) -> Result<ForwardState> {
    cfg.validate()?;
    if ds.n_rows() < 2 * cfg.max_degree + 2 {
        return Err(FairMarsError::Config(format!(
            "need at least {} rows for max_degree {}, got {}",
            2 * cfg.max_degree + 2,
            cfg.max_degree,
            ds.n_rows()
        )));
    }
    let mut state = ForwardState::new(ds, cfg)?;
    state.report.small_groups = ds
        .group_sizes()
        .iter()
        .filter(|&&s| s < cfg.min_group_size)
        .count();
    let threshold = IMPROVEMENT_TOLERANCE * state.total_sum_of_squares();

    state.report.stop_reason = "max_terms reached".into();
    while state.bases.len() < cfg.max_terms {
        let trials = scan_candidates(ds, &state, cfg)?;
        state.report.trials += trials.len();
        state.report.degenerate_trials += trials.iter().filter(|t| t.degenerate).count();
        state.report.non_finite_trials += trials.iter().filter(|t| !t.objective.is_finite()).count();
        let Some(best) = best_candidate(&trials) else {
            state.report.stop_reason = "no valid candidate".into();
            break;
        };
        let improvement = state.objective - best.objective;
        if !cfg.strict_paper_mode && !(improvement > threshold) {
            state.report.stop_reason = "improvement below threshold".into();
            break;
        }
        let best = best.clone();
        state.commit(ds, &best)?;
        state.log.push(IterationLog {
            m: state.bases.len(),
            parent: best.parent_id,
            v: best.variable,
            k: best.knot,
            lof: state.lof,
            disparity: state.disparity,
            objective: state.objective,
            dependent_columns: state.dependent_columns,
            candidates: trials.len(),
            best_trial_objective: best.objective,
        });
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(x: Vec<Vec<f64>>, y: Vec<f64>, groups: Vec<usize>) -> Dataset {
        let n = y.len();
        let d = x.len();
        let m = DMatrix::from_fn(n, d, |i, j| x[j][i]);
        let k = groups.iter().max().unwrap() + 1;
        Dataset::new(
            m,
            y,
            groups,
            (0..d).map(|j| format!("x{j}")).collect(),
            (0..k).map(|g| format!("g{g}")).collect(),
            "s",
        )
        .unwrap()
    }

    fn random_ds(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
        let x: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..n).map(|_| (rng.random_range(0..20) as f64) / 4.0).collect())
            .collect();
        let g: Vec<usize> = (0..n).map(|i| if i < 2 { i } else { rng.random_range(0..2) }).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| (x[0][i] - 2.0).max(0.0) + 0.5 * g[i] as f64 + rng.random_range(-0.5..0.5))
            .collect();
        dataset(x, y, g)
    }

    /// Refits the trial design from scratch with nalgebra's SVD least squares.
    fn oracle_trial_lof(ds: &Dataset, state: &ForwardState, parent: usize, v: usize, k: f64) -> f64 {
        let n = ds.n_rows();
        let m = state.columns().ncols();
        let p = state.columns().column(parent);
        let x = ds.column(v);
        let mut design = state.columns().clone().resize_horizontally(m + 2, 0.0);
        for q in 0..n {
            design[(q, m)] = p[q] * x[q];
            design[(q, m + 1)] = p[q] * (x[q] - k).max(0.0);
        }
        let y = DVector::from_column_slice(ds.response());
        let svd = design.clone().svd(true, true);
        let beta = svd.solve(&y, 1e-10).unwrap();
        let r = y - design * beta;
        r.dot(&r)
    }

    #[test]
    fn eligible_knots_support() {
        let ds = dataset(
            vec![vec![1.0, 2.0, 2.0, 3.0, 4.0], vec![0.0, 0.0, 1.0, 1.0, 1.0]],
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            vec![0, 1, 0, 1, 0],
        );
        let knots = eligible_knots(&ds, &BasisFunction::intercept(), 0).unwrap();
        assert_eq!(knots, vec![4.0, 3.0, 2.0, 1.0]);
        let parent = BasisFunction {
            id: 1,
            terms: vec![HingeTerm::plus(1, 0.0)],
        };
        let knots = eligible_knots(&ds, &parent, 0).unwrap();
        assert_eq!(knots, vec![4.0, 3.0, 2.0]);
        assert!(eligible_knots(&ds, &parent, 1).is_err());
    }

    #[test]
    fn sweep_equals_direct_scoring_and_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let ds = random_ds(&mut rng, 30, 3);
            let cfg = ForwardConfig {
                lambda: 0.7,
                max_degree: 2,
                parallel: false,
                ..Default::default()
            };
            let mut state = ForwardState::new(&ds, &cfg).unwrap();
            let first = best_candidate(&scan_candidates(&ds, &state, &cfg).unwrap()).unwrap().clone();
            state.commit(&ds, &first).unwrap();
            for parent in 0..state.bases.len() {
                for v in 0..3 {
                    let trials = sweep_candidate(&ds, &state, parent, v, &cfg).unwrap();
                    for t in &trials {
                        let direct = score_knot(&ds, &state, parent, v, t.knot, &cfg).unwrap();
                        let scale = state.total_sum_of_squares();
                        assert!((t.lof - direct.lof).abs() <= 1e-9 * scale);
                        assert!((t.objective - direct.objective).abs() <= 1e-9 * scale);
                        let oracle = oracle_trial_lof(&ds, &state, parent, v, t.knot);
                        assert!(
                            (t.lof - oracle).abs() <= 1e-8 * scale,
                            "lof {} vs oracle {oracle}",
                            t.lof
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn zero_lambda_objective_is_lof() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ds = random_ds(&mut rng, 25, 2);
        let cfg = ForwardConfig {
            lambda: 0.0,
            ..Default::default()
        };
        let state = ForwardState::new(&ds, &cfg).unwrap();
        for t in scan_candidates(&ds, &state, &cfg).unwrap() {
            assert_eq!(t.objective, t.lof);
        }
    }

    #[test]
    fn tie_policy() {
        let mk = |obj: f64, v: usize, k: f64, p: usize| TrialResult {
            parent_id: p,
            variable: v,
            knot: k,
            objective: obj,
            lof: obj,
            disparity: 0.0,
            coefficients: vec![],
            degenerate: false,
        };
        let single = [mk(3.0, 2, 1.0, 0)];
        assert_eq!(best_candidate(&single).unwrap().variable, 2);
        let trials = [mk(1.0, 2, 0.5, 0), mk(1.0, 1, 0.9, 3), mk(1.0, 1, 0.4, 2), mk(1.0, 1, 0.4, 1), mk(f64::NAN, 0, 0.0, 0)];
        let b = best_candidate(&trials).unwrap();
        assert_eq!((b.variable, b.knot, b.parent_id), (1, 0.4, 1));
        assert!(best_candidate(&[mk(f64::NAN, 0, 0.0, 0)]).is_none());
    }

    #[test]
    fn constant_response_stays_intercept_only() {
        let ds = dataset(vec![(0..20).map(|i| i as f64).collect()], vec![3.0; 20], vec![0; 20]);
        let state = run_forward(&ds, &ForwardConfig::default()).unwrap();
        assert_eq!(state.bases.len(), 1);
        assert_eq!(state.coefficients, vec![0.0]);
    }

    #[test]
    fn recovers_abs_knot_on_grid() {
        let x: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let y: Vec<f64> = x.iter().map(|v| (v - 0.5).abs()).collect();
        let ds = dataset(vec![x], y, vec![0; 101]);
        let cfg = ForwardConfig {
            max_terms: 5,
            ..Default::default()
        };
        let state = run_forward(&ds, &cfg).unwrap();
        let k = state.log[0].k;
        assert!((k - 0.5).abs() <= 0.01 + 1e-12, "knot {k}");
        assert!(state.lof < 1e-10, "lof {}", state.lof);
    }

    #[test]
    fn committed_objective_non_increasing_and_argmin() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let ds = random_ds(&mut rng, 40, 3);
            let cfg = ForwardConfig {
                lambda: 2.0,
                max_terms: 9,
                max_degree: 2,
                ..Default::default()
            };
            let state = run_forward(&ds, &cfg).unwrap();
            let mut prev = f64::INFINITY;
            for rec in &state.log {
                assert!(rec.objective <= prev + 1e-9 * state.total_sum_of_squares());
                assert!((rec.objective - rec.best_trial_objective).abs() <= 1e-8 * state.total_sum_of_squares());
                prev = rec.objective;
            }
            for b in &state.bases {
                b.validate(ds.n_features(), cfg.max_degree).unwrap();
            }
        }
    }

    #[test]
    fn parallel_and_serial_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let ds = random_ds(&mut rng, 50, 4);
        let base = ForwardConfig {
            lambda: 0.5,
            max_degree: 2,
            ..Default::default()
        };
        let par = run_forward(&ds, &base).unwrap();
        let ser = run_forward(&ds, &ForwardConfig { parallel: false, ..base }).unwrap();
        assert_eq!(par.bases, ser.bases);
        assert_eq!(par.coefficients, ser.coefficients);
    }

    #[test]
    fn span_filters() {
        let knots: Vec<f64> = (0..10).rev().map(|i| i as f64).collect();
        let cfg = ForwardConfig {
            end_span: 2,
            min_span: 3,
            ..Default::default()
        };
        assert_eq!(filter_knots(knots, &cfg), vec![7.0, 4.0]);
    }

    #[test]
    fn rejects_bad_config() {
        let ds = dataset(vec![vec![1.0, 2.0, 3.0, 4.0]], vec![1.0, 2.0, 3.0, 4.0], vec![0; 4]);
        let bad = ForwardConfig {
            lambda: -1.0,
            ..Default::default()
        };
        assert!(run_forward(&ds, &bad).unwrap_err().is_config());
        let deep = ForwardConfig {
            max_degree: 2,
            ..Default::default()
        };
        assert!(run_forward(&ds, &deep).unwrap_err().is_config());
    }
}
