//! Prints the rule listing of a degree-2 model, with pruned bases marked.

use fairmars::{fit, Dataset, FitConfig, ForwardConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> fairmars::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 300;
    let mut x = DMatrix::zeros(n, 3);
    let mut y = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..3 {
            x[(i, j)] = rng.random_range(0.0f64..100.0);
        }
        let (score, hours, credits): (f64, f64, f64) = (x[(i, 0)], x[(i, 1)], x[(i, 2)]);
        let g = usize::from(rng.random_bool(0.4));
        y.push(0.05 * (score - 40.0).max(0.0) + 0.001 * (60.0 - hours).max(0.0) * credits + 0.5 * g as f64);
        groups.push(g);
    }
    let ds = Dataset::new(
        x,
        y,
        groups,
        vec!["score".into(), "hours".into(), "credits".into()],
        vec!["male".into(), "female".into()],
        "gender",
    )?;
    let cfg = FitConfig {
        forward: ForwardConfig {
            max_degree: 2,
            lambda: 0.4,
            ..ForwardConfig::default()
        },
        ..FitConfig::default()
    };
    let model = fit(&ds, &cfg)?.model;
    print!("{}", model.export_rules(true));
    Ok(())
}
