//! Greedy backward elimination scored by the penalized objective, with the
//! final size chosen by generalized cross-validation.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::fairness::{check_lambda, disparity_value, penalize};
use crate::forward::ForwardState;
use crate::least_squares::{lof, NormalSystem};

/// Deletion objectives within this fraction of `Σy²` count as tied.
pub const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    /// λ in the deletion objective and the GCV numerator.
    pub lambda: f64,
    /// Cost per knot `d` in `C(M) = M + d·(M − 1)/2`.
    pub gcv_penalty: f64,
    pub parallel: bool,
}

impl PruneConfig {
    /// `d = 3`, or 2 for additive models.
    pub fn default_penalty(max_degree: usize) -> f64 {
        if max_degree <= 1 {
            2.0
        } else {
            3.0
        }
    }
}

/// Generalized cross-validation score; infinite when `C(M) ≥ n`.
pub fn gcv(lof_value: f64, n: usize, m: usize, d: f64, lambda: f64, disparity_value: f64) -> f64 {
    let n = n as f64;
    let cost = m as f64 + d * (m as f64 - 1.0) / 2.0;
    if cost >= n {
        return f64::INFINITY;
    }
    let numer = (lof_value + lambda * disparity_value * n) / n;
    let shrink = 1.0 - cost / n;
    numer / (shrink * shrink)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneSnapshot {
    /// Basis id deleted to reach this snapshot; `None` for the full model.
    pub removed: Option<usize>,
    /// Surviving basis ids, intercept first.
    pub active: Vec<usize>,
    pub gcv: f64,
    pub lof: f64,
    pub disparity: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneTrace {
    pub snapshots: Vec<PruneSnapshot>,
    pub best_index: usize,
}

impl PruneTrace {
    pub fn best(&self) -> &PruneSnapshot {
        &self.snapshots[self.best_index]
    }
}

struct Evaluated {
    lof: f64,
    disparity: f64,
    objective: f64,
}

fn evaluate(state: &ForwardState, ds: &Dataset, sys: &NormalSystem, active: &[usize], lambda: f64) -> Result<Evaluated> {
    let sub = sys.select(active)?;
    let sol = sub.solve_span();
    let lof_value = lof(&sub, &sol.coefficients);
    let r = subset_residuals(state, ds, active, &sol.coefficients);
    let mut sq = vec![0.0; ds.n_groups()];
    let mut sizes = vec![0; ds.n_groups()];
    let disparity = disparity_value(&r, ds.groups(), &mut sq, &mut sizes);
    Ok(Evaluated {
        lof: lof_value,
        disparity,
        objective: penalize(lof_value, disparity, lambda),
    })
}

fn subset_residuals(state: &ForwardState, ds: &Dataset, active: &[usize], beta: &DVector<f64>) -> Vec<f64> {
    let cols = state.columns();
    let mut r = ds.response().to_vec();
    for (j, &a) in active.iter().enumerate() {
        let b = beta[j];
        if b == 0.0 {
            continue;
        }
        for (rq, &x) in r.iter_mut().zip(cols.column(a).iter()) {
            *rq -= b * x;
        }
    }
    r
}

/// Deletes one basis at a time down to the intercept, recording each step.
pub fn run_backward(state: &ForwardState, ds: &Dataset, cfg: &PruneConfig) -> Result<PruneTrace> {
    check_lambda(cfg.lambda)?;
    let n = ds.n_rows();
    let sys = state.system();
    let tie = TIE_TOLERANCE * sys.yty;
    let mut active: Vec<usize> = (0..state.bases.len()).collect();

    let full = evaluate(state, ds, sys, &active, cfg.lambda)?;
    let mut snapshots = vec![PruneSnapshot {
        removed: None,
        active: ids(state, &active),
        gcv: gcv(full.lof, n, active.len(), cfg.gcv_penalty, cfg.lambda, full.disparity),
        lof: full.lof,
        disparity: full.disparity,
        objective: full.objective,
    }];

    while active.len() > 1 {
        let trial = |pos: usize| -> Result<(usize, Evaluated)> {
            let mut without = active.clone();
            without.remove(pos);
            Ok((pos, evaluate(state, ds, sys, &without, cfg.lambda)?))
        };
        let positions: Vec<usize> = (1..active.len()).collect();
        let results: Vec<Result<(usize, Evaluated)>> = if cfg.parallel {
            positions.par_iter().map(|&p| trial(p)).collect()
        } else {
            positions.iter().map(|&p| trial(p)).collect()
        };
        let mut best: Option<(usize, Evaluated)> = None;
        for r in results {
            let (pos, ev) = r?;
            // positions ascend with basis id, so the first of tied candidates wins
            if best.as_ref().is_none_or(|(_, b)| ev.objective < b.objective - tie) {
                best = Some((pos, ev));
            }
        }
        let (pos, ev) = best.expect("at least one removable basis");
        let removed = state.bases[active[pos]].id;
        active.remove(pos);
        snapshots.push(PruneSnapshot {
            removed: Some(removed),
            active: ids(state, &active),
            gcv: gcv(ev.lof, n, active.len(), cfg.gcv_penalty, cfg.lambda, ev.disparity),
            lof: ev.lof,
            disparity: ev.disparity,
            objective: ev.objective,
        });
    }

    // ties go to the smaller model, i.e. the later snapshot
    let mut best_index = 0;
    for (i, s) in snapshots.iter().enumerate() {
        if s.gcv <= snapshots[best_index].gcv {
            best_index = i;
        }
    }
    Ok(PruneTrace {
        snapshots,
        best_index,
    })
}

fn ids(state: &ForwardState, active: &[usize]) -> Vec<usize> {
    active.iter().map(|&a| state.bases[a].id).collect()
}
