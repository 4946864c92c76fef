//! Characteristic-function self-test of the symmetric alpha-stable sampler
//! and of the stochastic-convolution increments built from it.
//!
//! ```bash
//! cargo run --release --example noise_self_test
//! ```

use slowfast::harness::{noise_check, ExperimentConfig};

fn main() -> slowfast::Result<()> {
    let cfg = ExperimentConfig::default();
    let rows = noise_check(&cfg, &cfg.noise_check.alphas)?;
    println!("alpha  source       u     empirical  target     z");
    for r in &rows {
        println!(
            "{:<6} {:<12} {:<5} {:<10.5} {:<10.5} {:+.2}",
            r.alpha,
            r.source,
            r.u,
            r.empirical,
            r.target,
            r.z()
        );
    }
    let pass = rows.iter().all(|r| r.passes());
    println!("all within 3 se: {pass}");
    Ok(())
}
