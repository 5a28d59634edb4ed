//! Subgroup error statistics and fairness weights.
//!
//! Disparity is the average over subgroups of the absolute gap between the
//! subgroup's mean squared residual and the mean squared residual of all rows
//! outside it. With two groups this is simply `|mse_0 − mse_1|`.

use serde::{Deserialize, Serialize};

use crate::error::{FairMarsError, Result};
use crate::least_squares::WeightVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityReport {
    /// Mean squared residual within each group; `None` for an empty group.
    pub group_mse: Vec<Option<f64>>,
    /// Mean squared residual over the rows outside each group.
    pub complement_mse: Vec<Option<f64>>,
    /// `|group_mse − complement_mse|` per group.
    pub group_gaps: Vec<Option<f64>>,
    /// Mean of the defined gaps.
    pub disparity: f64,
    pub group_sizes: Vec<usize>,
    /// Groups left out of the average because they (or their complement) had no rows.
    pub excluded_groups: usize,
}

/// Disparity of `residuals` over `n_groups` subgroups.
pub fn disparity(residuals: &[f64], groups: &[usize], n_groups: usize) -> DisparityReport {
    debug_assert_eq!(residuals.len(), groups.len());
    let mut sq = vec![0.0; n_groups];
    let mut sizes = vec![0usize; n_groups];
    for (r, &g) in residuals.iter().zip(groups) {
        sq[g] += r * r;
        sizes[g] += 1;
    }
    let n = residuals.len();
    let mut group_mse = Vec::with_capacity(n_groups);
    let mut complement_mse = Vec::with_capacity(n_groups);
    let mut group_gaps = Vec::with_capacity(n_groups);
    let mut gap_sum = 0.0;
    let mut counted = 0usize;
    for g in 0..n_groups {
        let own = (sizes[g] > 0).then(|| sq[g] / sizes[g] as f64);
        let rest = (n > sizes[g]).then(|| complement_sum(&sq, g) / (n - sizes[g]) as f64);
        let gap = match (own, rest) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        };
        if let Some(v) = gap {
            gap_sum += v;
            counted += 1;
        }
        group_mse.push(own);
        complement_mse.push(rest);
        group_gaps.push(gap);
    }
    DisparityReport {
        group_mse,
        complement_mse,
        group_gaps,
        disparity: if counted > 0 { gap_sum / counted as f64 } else { 0.0 },
        group_sizes: sizes,
        excluded_groups: n_groups - counted,
    }
}

/// Disparity value only; same arithmetic as [`disparity`] without the report.
pub(crate) fn disparity_value(residuals: &[f64], groups: &[usize], sq: &mut [f64], sizes: &mut [usize]) -> f64 {
    sq.iter_mut().for_each(|v| *v = 0.0);
    sizes.iter_mut().for_each(|v| *v = 0);
    for (r, &g) in residuals.iter().zip(groups) {
        sq[g] += r * r;
        sizes[g] += 1;
    }
    let n = residuals.len();
    let mut gap_sum = 0.0;
    let mut counted = 0usize;
    for g in 0..sq.len() {
        if sizes[g] > 0 && n > sizes[g] {
            let own = sq[g] / sizes[g] as f64;
            let rest = complement_sum(sq, g) / (n - sizes[g]) as f64;
            gap_sum += (own - rest).abs();
            counted += 1;
        }
    }
    if counted > 0 {
        gap_sum / counted as f64
    } else {
        0.0
    }
}

/// Squared-residual mass outside group `g`, summed group by group so that with
/// two groups the complement of one is bit-identical to the other.
fn complement_sum(sq: &[f64], g: usize) -> f64 {
    sq.iter()
        .enumerate()
        .filter(|&(h, _)| h != g)
        .map(|(_, v)| v)
        .sum()
}

/// `lof + λ·disparity`.
pub fn penalized_objective(lof_value: f64, report: &DisparityReport, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(penalize(lof_value, report.disparity, lambda))
}

#[inline]
pub(crate) fn penalize(lof_value: f64, disparity: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        lof_value
    } else {
        lof_value + lambda * disparity
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(FairMarsError::Config(format!(
            "fairness weight λ must be a finite non-negative number, got {lambda}"
        )));
    }
    Ok(())
}

/// Inverse group-proportion weights `w_i = n / n_{g(i)}`, rescaled to mean one.
pub fn subgroup_weights(groups: &[usize], n_groups: usize) -> Result<WeightVector> {
    if groups.is_empty() || n_groups == 0 {
        return Err(FairMarsError::Precondition("no rows to weight".into()));
    }
    let mut sizes = vec![0usize; n_groups];
    for &g in groups {
        sizes[g] += 1;
    }
    let n = groups.len() as f64;
    let raw: Vec<f64> = groups.iter().map(|&g| n / sizes[g] as f64).collect();
    WeightVector::new(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn two_group_hand_example() {
        let r = disparity(&[1.0, 1.0, 3.0, 3.0], &[0, 0, 1, 1], 2);
        assert_eq!(r.group_mse, vec![Some(1.0), Some(9.0)]);
        assert_eq!(r.disparity, 8.0);
    }

    #[test]
    fn identical_groups_have_no_disparity() {
        let r = disparity(&[1.0, -2.0, -1.0, 2.0], &[0, 0, 1, 1], 2);
        assert_eq!(r.disparity, 0.0);
    }

    #[test]
    fn three_groups_complement() {
        let r = disparity(&[1.0, 2.0, 3.0], &[0, 1, 2], 3);
        assert_eq!(r.complement_mse, vec![Some(6.5), Some(5.0), Some(2.5)]);
        assert_relative_eq!(r.disparity, 13.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn empty_group_is_excluded() {
        let r = disparity(&[1.0, 3.0], &[0, 2], 3);
        assert_eq!(r.excluded_groups, 1);
        assert_eq!(r.group_mse[1], None);
        assert_eq!(r.disparity, 8.0);
        let mut sq = vec![0.0; 3];
        let mut sizes = vec![0; 3];
        assert_eq!(disparity_value(&[1.0, 3.0], &[0, 2], &mut sq, &mut sizes), 8.0);
    }

    #[test]
    fn objective() {
        let r = disparity(&[1.0, 1.0, 3.0, 3.0], &[0, 0, 1, 1], 2);
        assert_eq!(penalized_objective(10.0, &r, 0.0).unwrap(), 10.0);
        assert_eq!(penalized_objective(10.0, &r, 0.5).unwrap(), 14.0);
        assert!(penalized_objective(10.0, &r, -0.1).unwrap_err().is_config());
    }

    #[test]
    fn weights() {
        let one = subgroup_weights(&[0, 0, 0], 1).unwrap();
        assert_eq!(one.as_slice(), &[1.0, 1.0, 1.0]);
        let even = subgroup_weights(&[0, 1, 1, 0], 2).unwrap();
        assert_eq!(even.as_slice(), &[1.0; 4]);
        let skew = subgroup_weights(&[0, 0, 0, 1], 2).unwrap();
        let w = skew.as_slice();
        for v in &w[..3] {
            assert_relative_eq!(*v, 2.0 / 3.0, max_relative = 1e-15);
        }
        assert_relative_eq!(w[3], 2.0, max_relative = 1e-15);
    }

    fn residuals_and_groups() -> impl Strategy<Value = (Vec<f64>, Vec<usize>)> {
        (2usize..5).prop_flat_map(|k| {
            prop::collection::vec((-10.0f64..10.0, 0..k), 4..40).prop_map(move |rows| {
                let (mut r, mut g): (Vec<f64>, Vec<usize>) = rows.into_iter().unzip();
                // every group present
                for j in 0..k {
                    r.push(j as f64 * 0.3 - 0.5);
                    g.push(j);
                }
                (r, g)
            })
        })
    }

    proptest! {
        #[test]
        fn relabeling_invariance((r, g) in residuals_and_groups(), shift in 1usize..4) {
            let k = g.iter().max().unwrap() + 1;
            let relabeled: Vec<usize> = g.iter().map(|&x| (x + shift) % k).collect();
            let a = disparity(&r, &g, k).disparity;
            let b = disparity(&r, &relabeled, k).disparity;
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn quadratic_scaling((r, g) in residuals_and_groups(), t in 0.1f64..5.0) {
            let k = g.iter().max().unwrap() + 1;
            let scaled: Vec<f64> = r.iter().map(|v| v * t).collect();
            let a = disparity(&r, &g, k).disparity;
            let b = disparity(&scaled, &g, k).disparity;
            prop_assert!((b - t * t * a).abs() <= 1e-9 * b.abs().max(1.0));
        }

        #[test]
        fn two_groups_is_plain_gap(r in prop::collection::vec(-5.0f64..5.0, 4..30)) {
            let g: Vec<usize> = (0..r.len()).map(|i| i % 2).collect();
            let rep = disparity(&r, &g, 2);
            prop_assert_eq!(rep.disparity, (rep.group_mse[0].unwrap() - rep.group_mse[1].unwrap()).abs());
            prop_assert!(rep.disparity >= 0.0);
        }

        #[test]
        fn weight_properties(g in prop::collection::vec(0usize..3, 3..50)) {
            let k = 3;
            let w = subgroup_weights(&g, k).unwrap();
            prop_assert!((w.mean() - 1.0).abs() < 1e-12);
            let mut sizes = vec![0; k];
            for &x in &g { sizes[x] += 1; }
            for i in 0..g.len() {
                for j in 0..g.len() {
                    if g[i] == g[j] {
                        prop_assert_eq!(w.as_slice()[i], w.as_slice()[j]);
                    } else if sizes[g[i]] > sizes[g[j]] {
                        prop_assert!(w.as_slice()[i] < w.as_slice()[j]);
                    }
                }
            }
        }
    }
}
