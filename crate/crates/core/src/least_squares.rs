//! Normal equations for ordinary and weighted least squares.
//!
//! With an intercept, the system holds the column-centered Gram matrix and the
//! intercept coefficient is recovered from the column means after the solve.
//! `cvec` always holds the uncentered products `Σ w_q y_q B_i(x_q)`, so the
//! lack-of-fit identity `Σ w y² − Σ β_i c_i` applies to the full coefficient
//! vector. All sums run in ascending row order.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FairMarsError, Result};

/// Pivots at or below this fraction of the original diagonal count as dependent.
const PIVOT_TOLERANCE: f64 = 1e-11;
/// Ridge jitter is this fraction of the mean diagonal of the Gram matrix.
const RIDGE_SCALE: f64 = 1e-8;

/// Positive observation weights normalized to mean one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(FairMarsError::Precondition("empty weight vector".into()));
        }
        if raw.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(FairMarsError::Precondition(
                "weights must be finite and positive".into(),
            ));
        }
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        Ok(WeightVector {
            weights: raw.iter().map(|w| w / mean).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        WeightVector {
            weights: vec![1.0; n],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.weights.len() as f64
    }
}

/// `V β = c` for a fixed design.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalSystem {
    pub gram: DMatrix<f64>,
    pub cvec: DVector<f64>,
    pub col_means: DVector<f64>,
    /// Column 0 is the constant intercept and `gram` is centered.
    pub intercept: bool,
    /// `Σ w_q`
    pub total_weight: f64,
    /// `Σ w_q y_q`
    pub weighted_y_sum: f64,
    /// `Σ w_q y_q²`
    pub yty: f64,
}

/// Coefficients plus what it took to get them.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub coefficients: DVector<f64>,
    /// Jitter added to the diagonal, 0 when the plain factorization succeeded.
    pub ridge: f64,
    /// Columns treated as dependent by [`NormalSystem::solve_span`].
    pub dropped: Vec<usize>,
}

impl NormalSystem {
    /// Wraps an explicit Gram matrix and right-hand side (no intercept handling).
    pub fn from_parts(gram: DMatrix<f64>, cvec: DVector<f64>) -> Result<Self> {
        if gram.nrows() != gram.ncols() || gram.nrows() != cvec.len() {
            return Err(FairMarsError::Precondition(
                "gram must be square and match cvec".into(),
            ));
        }
        let m = cvec.len();
        Ok(NormalSystem {
            gram,
            cvec,
            col_means: DVector::zeros(m),
            intercept: false,
            total_weight: 0.0,
            weighted_y_sum: 0.0,
            yty: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.cvec.len()
    }

    /// System restricted to the columns `cols`. With an intercept, `cols` must
    /// start with 0; centered entries do not depend on the other columns, so
    /// this equals rebuilding the system from the selected design columns.
    pub fn select(&self, cols: &[usize]) -> Result<NormalSystem> {
        if cols.iter().any(|&c| c >= self.dim()) {
            return Err(FairMarsError::Precondition("column index out of range".into()));
        }
        if self.intercept && cols.first() != Some(&0) {
            return Err(FairMarsError::Precondition(
                "intercept column must be selected first".into(),
            ));
        }
        let m = cols.len();
        Ok(NormalSystem {
            gram: DMatrix::from_fn(m, m, |i, j| self.gram[(cols[i], cols[j])]),
            cvec: DVector::from_fn(m, |i, _| self.cvec[cols[i]]),
            col_means: DVector::from_fn(m, |i, _| self.col_means[cols[i]]),
            intercept: self.intercept,
            total_weight: self.total_weight,
            weighted_y_sum: self.weighted_y_sum,
            yty: self.yty,
        })
    }

    /// Indices of the columns that enter the factorization.
    fn active(&self) -> std::ops::Range<usize> {
        if self.intercept {
            1..self.dim()
        } else {
            0..self.dim()
        }
    }

    /// Reduced system over the non-intercept columns (or the whole system).
    fn reduced(&self) -> (DMatrix<f64>, DVector<f64>) {
        let r = self.active();
        let m = r.len();
        let off = r.start;
        let a = DMatrix::from_fn(m, m, |i, j| self.gram[(i + off, j + off)]);
        let b = DVector::from_fn(m, |i, _| {
            let c = self.cvec[i + off];
            if self.intercept {
                c - self.col_means[i + off] * self.weighted_y_sum
            } else {
                c
            }
        });
        (a, b)
    }

    fn assemble(&self, reduced_beta: &DVector<f64>) -> DVector<f64> {
        if !self.intercept {
            return reduced_beta.clone();
        }
        let mut beta = DVector::zeros(self.dim());
        let mut b0 = if self.total_weight > 0.0 {
            self.weighted_y_sum / self.total_weight
        } else {
            0.0
        };
        for i in 1..self.dim() {
            beta[i] = reduced_beta[i - 1];
            b0 -= beta[i] * self.col_means[i];
        }
        beta[0] = b0;
        beta
    }

    /// Cholesky solve; on failure retries once with ridge `1e-8·trace(V)/M`.
    pub fn solve(&self) -> Result<Solution> {
        let (a, b) = self.reduced();
        let off = self.active().start;
        if a.nrows() == 0 {
            return Ok(Solution {
                coefficients: self.assemble(&DVector::zeros(0)),
                ridge: 0.0,
                dropped: Vec::new(),
            });
        }
        match Cholesky::factor(&a, false) {
            Ok(ch) => Ok(Solution {
                coefficients: self.assemble(&ch.solve(&b)),
                ridge: 0.0,
                dropped: Vec::new(),
            }),
            Err(_) => {
                let m = a.nrows();
                let mut ridge = RIDGE_SCALE * a.trace() / m as f64;
                if !(ridge > 0.0) {
                    ridge = RIDGE_SCALE;
                }
                let mut jittered = a;
                for i in 0..m {
                    jittered[(i, i)] += ridge;
                }
                let ch = Cholesky::factor(&jittered, false)
                    .map_err(|col| FairMarsError::RankDeficient { column: col + off })?;
                Ok(Solution {
                    coefficients: self.assemble(&ch.solve(&b)),
                    ridge,
                    dropped: Vec::new(),
                })
            }
        }
    }

    /// Least-squares solution over the span of the columns: columns that are
    /// numerically dependent on earlier ones get a zero coefficient.
    pub fn solve_span(&self) -> Solution {
        let (a, b) = self.reduced();
        let off = self.active().start;
        let ch = Cholesky::factor(&a, true).expect("dropping factorization cannot fail");
        let beta = ch.solve(&b);
        Solution {
            coefficients: self.assemble(&beta),
            ridge: 0.0,
            dropped: ch.dropped.iter().map(|d| d + off).collect(),
        }
    }
}

/// Lower-triangular factor with optional dependent-column dropping.
pub(crate) struct Cholesky {
    l: DMatrix<f64>,
    dropped: Vec<usize>,
}

impl Cholesky {
    /// `Err(j)` names the first column whose pivot fails when not dropping.
    pub(crate) fn factor(a: &DMatrix<f64>, drop_dependent: bool) -> std::result::Result<Self, usize> {
        let m = a.nrows();
        let mut l = DMatrix::<f64>::zeros(m, m);
        let mut dropped = Vec::new();
        for j in 0..m {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            let scale = a[(j, j)].abs();
            if !(d > PIVOT_TOLERANCE * scale) || !d.is_finite() {
                if !drop_dependent {
                    return Err(j);
                }
                dropped.push(j);
                l[(j, j)] = 1.0;
                continue;
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..m {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { l, dropped })
    }

    pub(crate) fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let m = b.len();
        let mut z = DVector::zeros(m);
        for i in 0..m {
            if self.dropped.contains(&i) {
                continue;
            }
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        let mut x = DVector::zeros(m);
        for i in (0..m).rev() {
            if self.dropped.contains(&i) {
                continue;
            }
            let mut s = z[i];
            for k in (i + 1)..m {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }
}

/// Normal equations for the `n×M` design `columns` against the centered response.
///
/// With `intercept`, column 0 must be the all-ones column and the Gram matrix
/// is centered on the (weighted) column means.
pub fn build_system(
    columns: &DMatrix<f64>,
    y: &[f64],
    weights: Option<&WeightVector>,
    intercept: bool,
) -> Result<NormalSystem> {
    let (n, m) = columns.shape();
    if m == 0 {
        return Err(FairMarsError::Precondition("design has no columns".into()));
    }
    if y.len() != n {
        return Err(FairMarsError::Precondition(format!(
            "design has {n} rows, response has {}",
            y.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(FairMarsError::Precondition(format!(
                "design has {n} rows, weights have {}",
                w.len()
            )));
        }
    }
    if intercept && columns.column(0).iter().any(|&v| v != 1.0) {
        return Err(FairMarsError::Precondition(
            "intercept column must be all ones".into(),
        ));
    }
    let w = |q: usize| weights.map_or(1.0, |w| w.as_slice()[q]);
    let data = columns.as_slice();
    let col = |j: usize| &data[j * n..(j + 1) * n];

    let mut total_weight = 0.0;
    let mut weighted_y_sum = 0.0;
    let mut yty = 0.0;
    for q in 0..n {
        total_weight += w(q);
        weighted_y_sum += w(q) * y[q];
        yty += w(q) * y[q] * y[q];
    }

    let mut col_means = DVector::zeros(m);
    let mut cvec = DVector::zeros(m);
    for j in 0..m {
        let cj = col(j);
        let mut s = 0.0;
        let mut c = 0.0;
        for q in 0..n {
            s += w(q) * cj[q];
            c += w(q) * y[q] * cj[q];
        }
        col_means[j] = if total_weight > 0.0 { s / total_weight } else { 0.0 };
        cvec[j] = c;
    }

    let mut gram = DMatrix::zeros(m, m);
    for i in 0..m {
        let ci = col(i);
        for j in 0..=i {
            let cj = col(j);
            let mut s = 0.0;
            if intercept {
                let (mi, mj) = (col_means[i], col_means[j]);
                for q in 0..n {
                    s += w(q) * (ci[q] - mi) * (cj[q] - mj);
                }
            } else {
                for q in 0..n {
                    s += w(q) * ci[q] * cj[q];
                }
            }
            gram[(i, j)] = s;
            gram[(j, i)] = s;
        }
    }

    Ok(NormalSystem {
        gram,
        cvec,
        col_means,
        intercept,
        total_weight,
        weighted_y_sum,
        yty,
    })
}

/// `Σ w y² − Σ β_i c_i`: the residual sum of squares at the least-squares solution.
pub fn lof(sys: &NormalSystem, beta: &DVector<f64>) -> f64 {
    sys.yty - beta.dot(&sys.cvec)
}

/// `y − Xβ`, summed in column order.
pub fn residuals(columns: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> Vec<f64> {
    let n = y.len();
    let data = columns.as_slice();
    let mut r = y.to_vec();
    for (j, &b) in beta.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        for (rq, &x) in r.iter_mut().zip(&data[j * n..(j + 1) * n]) {
            *rq -= b * x;
        }
    }
    r
}

/// One step of the descending knot sweep for the hinge column `parent·[x − k]_+`:
/// `c(k) = c(u) + Σ_{k ≤ x_q < u} y_q B_q (x_q − k) + (u − k) Σ_{x_q ≥ u} y_q B_q`.
///
/// Sums run over rows in ascending index order.
pub fn fast_update_c(c_u: f64, u: f64, k: f64, x: &[f64], parent: &[f64], y: &[f64]) -> Result<f64> {
    if k > u {
        return Err(FairMarsError::Precondition(format!(
            "knots must be visited in descending order (k={k} > u={u})"
        )));
    }
    if x.len() != parent.len() || x.len() != y.len() {
        return Err(FairMarsError::Precondition("length mismatch".into()));
    }
    let mut c1 = 0.0;
    let mut above = 0.0;
    for q in 0..x.len() {
        if parent[q] < 0.0 {
            return Err(FairMarsError::Precondition("parent column must be nonnegative".into()));
        }
        let xq = x[q];
        if xq >= u {
            above += y[q] * parent[q];
        } else if xq >= k {
            c1 += y[q] * parent[q] * (xq - k);
        }
    }
    Ok(c_u + c1 + (u - k) * above)
}

/// Amortized descending sweep over the support of a parent basis.
///
/// Rows are visited in descending `x` (ties by ascending row index); each row
/// is touched once across the whole sweep.
#[derive(Debug, Clone)]
pub struct KnotSweep {
    /// (x, y·B) over rows with B > 0, sorted by descending x.
    rows: Vec<(f64, f64)>,
    cursor: usize,
    u: f64,
    c: f64,
    above: f64,
}

impl KnotSweep {
    pub fn new(x: &[f64], parent: &[f64], y: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..x.len()).filter(|&q| parent[q] > 0.0).collect();
        idx.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
        let rows: Vec<(f64, f64)> = idx.iter().map(|&q| (x[q], y[q] * parent[q])).collect();
        let u = rows.first().map_or(f64::NEG_INFINITY, |r| r.0);
        let mut sweep = KnotSweep {
            rows,
            cursor: 0,
            u,
            c: 0.0,
            above: 0.0,
        };
        // c(max) = 0 since [x − max]_+ vanishes on the support
        while sweep.cursor < sweep.rows.len() && sweep.rows[sweep.cursor].0 >= u {
            sweep.above += sweep.rows[sweep.cursor].1;
            sweep.cursor += 1;
        }
        sweep
    }

    /// Distinct support values, descending.
    pub fn knots(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &(x, _) in &self.rows {
            if out.last() != Some(&x) {
                out.push(x);
            }
        }
        out
    }

    pub fn current(&self) -> f64 {
        self.c
    }

    /// Moves the sweep to knot `k ≤ u` and returns `c(k)`.
    pub fn advance(&mut self, k: f64) -> Result<f64> {
        if k > self.u {
            return Err(FairMarsError::Precondition(format!(
                "knots must be visited in descending order (k={k} > u={})",
                self.u
            )));
        }
        let mut c1 = 0.0;
        let mut passed = 0.0;
        while self.cursor < self.rows.len() && self.rows[self.cursor].0 >= k {
            let (x, yb) = self.rows[self.cursor];
            c1 += yb * (x - k);
            passed += yb;
            self.cursor += 1;
        }
        self.c += c1 + (self.u - k) * self.above;
        self.above += passed;
        self.u = k;
        Ok(self.c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_design(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, m, |_, j| if j == 0 { 1.0 } else { rng.random_range(-2.0..2.0) })
    }

    fn centered(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| v - mean).collect()
    }

    /// Independent dense least squares via nalgebra's LU on X'WX.
    fn oracle_beta(x: &DMatrix<f64>, y: &[f64], w: Option<&[f64]>) -> DVector<f64> {
        let n = y.len();
        let wv = DVector::from_fn(n, |i, _| w.map_or(1.0, |w| w[i]));
        let xw = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * wv[i]);
        let a = x.transpose() * &xw;
        let b = xw.transpose() * DVector::from_column_slice(y);
        a.lu().solve(&b).unwrap()
    }

    #[test]
    fn intercept_only_c_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = centered(&mut rng, 9);
        let x = DMatrix::from_element(9, 1, 1.0);
        let sys = build_system(&x, &y, None, true).unwrap();
        assert!(sys.cvec[0].abs() < 1e-12);
        let sol = sys.solve().unwrap();
        assert!(sol.coefficients[0].abs() < 1e-15);
        let yy: f64 = y.iter().map(|v| v * v).sum();
        assert_relative_eq!(lof(&sys, &sol.coefficients), yy, max_relative = 1e-12);
    }

    #[test]
    fn select_matches_rebuild() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_design(&mut rng, 15, 5);
        let y = centered(&mut rng, 15);
        let full = build_system(&x, &y, None, true).unwrap();
        let cols = [0, 2, 4];
        let sub = DMatrix::from_fn(15, 3, |i, j| x[(i, cols[j])]);
        let direct = build_system(&sub, &y, None, true).unwrap();
        let picked = full.select(&cols).unwrap();
        assert!((picked.gram - direct.gram).abs().max() < 1e-12);
        assert_eq!(picked.cvec, direct.cvec);
        assert!(full.select(&[1, 2]).is_err());
    }

    #[test]
    fn orthogonal_columns_give_diagonal_gram() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        let sys = build_system(&x, &[1.0, 2.0, 3.0, 4.0], None, false).unwrap();
        assert_eq!(sys.gram[(0, 1)], 0.0);
        assert_eq!(sys.gram[(0, 0)], 2.0);
        assert_eq!(sys.cvec, DVector::from_vec(vec![4.0, 6.0]));
    }

    #[test]
    fn gram_matches_matrix_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_design(&mut rng, 10, 3);
        let y = centered(&mut rng, 10);
        let raw = build_system(&x, &y, None, false).unwrap();
        let xt = x.transpose();
        let direct = &xt * &x;
        assert!((raw.gram.clone() - direct).abs().max() < 1e-12);
        let c = &xt * DVector::from_column_slice(&y);
        assert!((raw.cvec.clone() - c).abs().max() < 1e-12);

        let cen = build_system(&x, &y, None, true).unwrap();
        let means = DVector::from_fn(3, |j, _| x.column(j).mean());
        let xc = DMatrix::from_fn(10, 3, |i, j| x[(i, j)] - means[j]);
        let direct_c = xc.transpose() * &xc;
        assert!((cen.gram.clone() - direct_c).abs().max() < 1e-12);
        assert!((cen.gram.clone() - cen.gram.transpose()).abs().max() == 0.0);
    }

    #[test]
    fn identity_system() {
        let sys = NormalSystem::from_parts(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 2.0])).unwrap();
        let sol = sys.solve().unwrap();
        assert_eq!(sol.coefficients.as_slice(), &[1.0, 2.0]);
        assert_eq!(sol.ridge, 0.0);
    }

    #[test]
    fn duplicated_column_is_ridge_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = random_design(&mut rng, 12, 3);
        let dup: Vec<f64> = x.column(1).iter().copied().collect();
        x.set_column(2, &DVector::from_vec(dup));
        let y = centered(&mut rng, 12);
        let sys = build_system(&x, &y, None, true).unwrap();
        let sol = sys.solve().unwrap();
        assert!(sol.ridge > 0.0);
        // the duplicated pair shares the weight
        assert_relative_eq!(sol.coefficients[1], sol.coefficients[2], max_relative = 1e-6);
        let span = sys.solve_span();
        assert_eq!(span.dropped, vec![2]);
        assert_eq!(span.coefficients[2], 0.0);
    }

    #[test]
    fn zero_matrix_is_rank_deficient() {
        let sys = NormalSystem::from_parts(DMatrix::zeros(2, 2), DVector::zeros(2)).unwrap();
        // trace is zero, ridge falls back to an absolute jitter
        assert!(sys.solve().is_ok());
        let bad = NormalSystem::from_parts(
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]),
            DVector::zeros(2),
        )
        .unwrap();
        match bad.solve() {
            Err(FairMarsError::RankDeficient { column }) => assert_eq!(column, 1),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn random_spd_matches_dense_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let b = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
            let a = &b * b.transpose() + DMatrix::identity(5, 5) * 0.5;
            let c = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let ours = NormalSystem::from_parts(a.clone(), c.clone()).unwrap().solve().unwrap();
            let theirs = a.lu().solve(&c).unwrap();
            assert!((ours.coefficients - theirs).abs().max() < 1e-9);
        }
    }

    #[test]
    fn centered_solve_matches_oracle_and_lof_matches_rss() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.random_range(8..40);
            let m = rng.random_range(1..6).min(n - 1);
            let x = random_design(&mut rng, n, m);
            let y = centered(&mut rng, n);
            let sys = build_system(&x, &y, None, true).unwrap();
            let sol = sys.solve().unwrap();
            let oracle = oracle_beta(&x, &y, None);
            assert!((sol.coefficients.clone() - oracle).abs().max() < 1e-8);
            let r = residuals(&x, &y, &sol.coefficients);
            let rss: f64 = r.iter().map(|v| v * v).sum();
            assert_relative_eq!(lof(&sys, &sol.coefficients), rss, max_relative = 1e-8, epsilon = 1e-12);
            for j in 0..m {
                let dot: f64 = r.iter().zip(x.column(j).iter()).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-8, "residual not orthogonal to column {j}: {dot}");
            }
        }
    }

    #[test]
    fn weighted_matches_oracle_and_uniform_matches_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let n = rng.random_range(10..30);
            let x = random_design(&mut rng, n, 3);
            let y = centered(&mut rng, n);
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
            let w = WeightVector::new(&raw).unwrap();
            assert!((w.mean() - 1.0).abs() < 1e-12);
            let sys = build_system(&x, &y, Some(&w), true).unwrap();
            let sol = sys.solve().unwrap();
            let oracle = oracle_beta(&x, &y, Some(w.as_slice()));
            assert!((sol.coefficients.clone() - oracle).abs().max() < 1e-8);
            let r = residuals(&x, &y, &sol.coefficients);
            let wrss: f64 = r.iter().zip(w.as_slice()).map(|(r, w)| w * r * r).sum();
            assert_relative_eq!(lof(&sys, &sol.coefficients), wrss, max_relative = 1e-8, epsilon = 1e-12);

            let ols = build_system(&x, &y, None, true).unwrap().solve().unwrap();
            let uni = build_system(&x, &y, Some(&WeightVector::uniform(n)), true)
                .unwrap()
                .solve()
                .unwrap();
            assert!((ols.coefficients - uni.coefficients).abs().max() < 1e-12);
        }
    }

    #[test]
    fn lof_non_increasing_when_appending() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let x = random_design(&mut rng, 25, 5);
            let y = centered(&mut rng, 25);
            let mut prev = f64::INFINITY;
            for m in 1..=5 {
                let sub = x.columns(0, m).into_owned();
                let sys = build_system(&sub, &y, None, true).unwrap();
                let l = lof(&sys, &sys.solve().unwrap().coefficients);
                assert!(l <= prev + 1e-10 * prev.abs().max(1.0));
                prev = l;
            }
        }
    }

    #[test]
    fn perfect_fit_has_zero_lof() {
        let x = DMatrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let raw: Vec<f64> = (0..6).map(|i| 3.0 * i as f64 - 1.0).collect();
        let mean = raw.iter().sum::<f64>() / 6.0;
        let y: Vec<f64> = raw.iter().map(|v| v - mean).collect();
        let sys = build_system(&x, &y, None, true).unwrap();
        let l = lof(&sys, &sys.solve().unwrap().coefficients);
        assert!(l.abs() < 1e-8 * sys.yty);
    }

    #[test]
    fn fast_update_trivial_cases() {
        let x = [1.0, 2.0, 3.0];
        let b = [1.0, 1.0, 1.0];
        let y = [0.5, -1.0, 0.5];
        // nothing at or above k
        assert_eq!(fast_update_c(2.5, 10.0, 5.0, &x, &b, &y).unwrap(), 2.5);
        // zero-width step
        assert_eq!(fast_update_c(0.7, 2.0, 2.0, &x, &b, &y).unwrap(), 0.7);
        assert!(fast_update_c(0.0, 1.0, 2.0, &x, &b, &y).is_err());
    }

    #[test]
    fn sweep_matches_direct_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let n = rng.random_range(5..30);
            let x: Vec<f64> = (0..n).map(|_| (rng.random_range(0..12) as f64) * 0.5).collect();
            let parent: Vec<f64> = (0..n)
                .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..2.0) })
                .collect();
            let y = centered(&mut rng, n);
            let mut sweep = KnotSweep::new(&x, &parent, &y);
            let knots = sweep.knots();
            let mut prev: Option<(f64, f64)> = None;
            for &k in &knots {
                let fast = sweep.advance(k).unwrap();
                let direct: f64 = (0..n).map(|q| y[q] * parent[q] * (x[q] - k).max(0.0)).sum();
                let scale: f64 = (0..n).map(|q| (y[q] * parent[q] * (x[q] - k).max(0.0)).abs()).sum();
                assert!((fast - direct).abs() <= 1e-10 * scale.max(1e-300));
                if let Some((u, cu)) = prev {
                    let step = fast_update_c(cu, u, k, &x, &parent, &y).unwrap();
                    assert!((step - direct).abs() <= 1e-10 * scale.max(1e-300));
                }
                prev = Some((k, fast));
            }
        }
    }
}
