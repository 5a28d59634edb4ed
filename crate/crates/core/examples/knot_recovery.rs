//! Recovers the kink of `y = |x - 0.5|` from noisy samples and prints the
//! forward log and the pruned rules.

use fairmars::{fit, Dataset, FitConfig, ForwardConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> fairmars::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let n = 200;
    let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let y: Vec<f64> = x.iter().map(|v| (v - 0.5).abs() + noise.sample(&mut rng)).collect();
    let ds = Dataset::new(
        DMatrix::from_column_slice(n, 1, &x),
        y,
        vec![0; n],
        vec!["x".into()],
        vec!["all".into()],
        "group",
    )?;

    let cfg = FitConfig {
        forward: ForwardConfig {
            max_terms: 7,
            ..ForwardConfig::default()
        },
        ..FitConfig::default()
    };
    let out = fit(&ds, &cfg)?;
    for step in &out.forward.log {
        println!("M={:<2} knot x={:.4}  lof={:.5}", step.m, step.k, step.lof);
    }
    println!("stopped: {}", out.forward.report.stop_reason);
    println!("\nselected model (GCV {:.6}):", out.trace.best().gcv);
    print!("{}", out.model.export_rules(false));
    Ok(())
}
