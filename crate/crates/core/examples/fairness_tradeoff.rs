//! Fits plain MARS and fairknot models at several λ on two groups whose
//! responses differ, then compares held-out error and disparity.

use fairmars::{fit, metrics, Dataset, FitConfig, ForwardConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// The minority group sits higher on `x0` and carries an extra bump above 0.6.
fn sample(rng: &mut ChaCha8Rng, n: usize) -> fairmars::Result<Dataset> {
    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut x = DMatrix::zeros(n, 2);
    let mut y = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    for i in 0..n {
        let g = usize::from(rng.random_bool(0.3));
        let x0 = rng.random::<f64>() * 0.8 + 0.2 * g as f64;
        let x1: f64 = rng.random();
        x[(i, 0)] = x0;
        x[(i, 1)] = x1;
        let bump = if g == 1 { 0.5 * (x0 - 0.6).max(0.0) + 0.1 } else { 0.0 };
        y.push((x0 - 0.5).abs() + 0.5 * x1 + bump + noise.sample(rng));
        groups.push(g);
    }
    Dataset::new(
        x,
        y,
        groups,
        vec!["x0".into(), "x1".into()],
        vec!["majority".into(), "minority".into()],
        "group",
    )
}

fn main() -> fairmars::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let train = sample(&mut rng, 600)?;
    let test = sample(&mut rng, 600)?;

    println!("{:>5} {:>10} {:>10} {:>10} {:>6}", "λ", "train gap", "test MSE", "test gap", "bases");
    for lambda in [0.0, 0.2, 0.4, 0.6, 0.8] {
        let cfg = FitConfig {
            forward: ForwardConfig {
                lambda,
                end_span: 5,
                ..ForwardConfig::default()
            },
            ..FitConfig::default()
        };
        let model = fit(&train, &cfg)?.model;
        let fitted = metrics(&train.raw_response(), &model.predict_dataset(&train)?, train.groups(), 2)?;
        let held = metrics(&test.raw_response(), &model.predict_dataset(&test)?, test.groups(), 2)?;
        println!(
            "{lambda:>5.1} {:>10.5} {:>10.5} {:>10.5} {:>6}",
            fitted.disparity.disparity,
            held.mse,
            held.disparity.disparity,
            model.bases().len()
        );
    }
    Ok(())
}
