//! Coupling matters: with independent slow noise the averaged path stops
//! tracking the multiscale one and the error no longer vanishes with epsilon.
//!
//! ```bash
//! cargo run --release --example negative_control
//! ```

use slowfast::harness::{strong_rate_experiment, ExperimentConfig};

fn main() -> slowfast::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.problem.alpha = 1.75;
    cfg.rate.strong_samples = 200;
    for coupled in [true, false] {
        cfg.rate.coupled = coupled;
        let out = strong_rate_experiment(&cfg)?;
        let errs: Vec<String> = out.table.rows.iter().map(|r| format!("{:.4}", r.error)).collect();
        println!("{:<22} {}", out.name, errs.join(" "));
    }
    Ok(())
}
