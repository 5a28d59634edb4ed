//! Ten-fold cross-validation over every variant and the λ grid, printed as a
//! text table and as CSV.

use fairmars::evaluation::{cross_validate_grid, render_cv_csv, render_cv_text, LAMBDA_GRID};
use fairmars::{make_folds, Dataset, FitConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> fairmars::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let n = 400;
    let mut x = DMatrix::zeros(n, 3);
    let mut y = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    for i in 0..n {
        let g = rng.random_range(0..3);
        for j in 0..3 {
            x[(i, j)] = rng.random::<f64>() + 0.1 * (g * j) as f64;
        }
        y.push((x[(i, 0)] - 0.4).max(0.0) * 2.0 + x[(i, 1)] * x[(i, 2)] + 0.1 * g as f64 + noise.sample(&mut rng));
        groups.push(g);
    }
    let ds = Dataset::new(
        x,
        y,
        groups,
        vec!["a".into(), "b".into(), "c".into()],
        vec!["g0".into(), "g1".into(), "g2".into()],
        "group",
    )?;

    let plan = make_folds(&ds, 10, 0)?;
    let cfg = FitConfig::default();
    let reports = cross_validate_grid(&ds, &cfg, &plan, &LAMBDA_GRID)?;
    print!("{}", render_cv_text(&reports));
    println!();
    print!("{}", render_cv_csv(&reports)?);
    Ok(())
}
