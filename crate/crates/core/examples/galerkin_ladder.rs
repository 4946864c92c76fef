//! Galerkin truncation error of the Nemytskii benchmark against m* = 64 on
//! shared noise paths. Pass `--full` for 400 samples.
//!
//! ```bash
//! cargo run --release --example galerkin_ladder
//! ```

use slowfast::harness::{galerkin_convergence_experiment, ExperimentConfig};

fn main() -> slowfast::Result<()> {
    let mut cfg = ExperimentConfig::default();
    if !std::env::args().any(|a| a == "--full") {
        cfg.galerkin.samples = 64;
    }
    let out = galerkin_convergence_experiment(&cfg)?;
    for r in &out.rows {
        println!("m = {:<3} E|X^m - X^64| = {:.3e} +- {:.1e}", r.m, r.error, r.stderr);
    }
    println!("strictly decreasing: {}", out.strictly_decreasing());
    Ok(())
}
