//! Refits a fitted structure with subgroup-balanced weights and shows how the
//! per-group errors move.

use fairmars::{fit, metrics, subgroup_weights, Dataset, FitConfig, ForwardConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> fairmars::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let n = 500;
    let mut x = DMatrix::zeros(n, 1);
    let mut y = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    for i in 0..n {
        // 10% minority whose slope differs
        let g = usize::from(rng.random_bool(0.1));
        let v: f64 = rng.random();
        x[(i, 0)] = v;
        let slope = if g == 1 { 1.6 } else { 1.0 };
        y.push(slope * (v - 0.3).max(0.0) + noise.sample(&mut rng));
        groups.push(g);
    }
    let ds = Dataset::new(x, y, groups, vec!["x".into()], vec!["majority".into(), "minority".into()], "group")?;

    let w = subgroup_weights(ds.groups(), ds.n_groups())?;
    let weight_of = |g: usize| ds.groups().iter().position(|&h| h == g).map(|i| w.as_slice()[i]);
    println!("row weights: majority {:.3?}, minority {:.3?}", weight_of(0), weight_of(1));

    let cfg = FitConfig {
        forward: ForwardConfig {
            max_terms: 9,
            end_span: 10,
            ..ForwardConfig::default()
        },
        ..FitConfig::default()
    };
    let plain = fit(&ds, &cfg)?.model;
    let balanced = plain.with_faircoef(&ds)?;
    for (label, model) in [("ols", &plain), ("faircoef", &balanced)] {
        let m = metrics(&ds.raw_response(), &model.predict_dataset(&ds)?, ds.groups(), 2)?;
        let mse: Vec<String> = m
            .disparity
            .group_mse
            .iter()
            .map(|v| v.map_or("-".into(), |v| format!("{v:.5}")))
            .collect();
        println!("{label:>9}: MSE {:.5}  group MSE [{}]  disparity {:.5}", m.mse, mse.join(", "), m.disparity.disparity);
    }
    println!("\nfaircoef rules:");
    print!("{}", balanced.export_rules(false));
    Ok(())
}
