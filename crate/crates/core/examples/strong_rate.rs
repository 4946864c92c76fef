//! Strong averaging rate on the linear benchmark. Pass `--full` for the
//! N = 2000 run; the default uses 200 samples.
//!
//! ```bash
//! cargo run --release --example strong_rate -- --full
//! ```

use slowfast::harness::{strong_rate_experiment, ExperimentConfig};

fn main() -> slowfast::Result<()> {
    let full = std::env::args().any(|a| a == "--full");
    let mut cfg = ExperimentConfig::default();
    cfg.problem.alpha = 1.75;
    if !full {
        cfg.rate.strong_samples = 200;
    }
    let out = strong_rate_experiment(&cfg)?;
    for r in &out.table.rows {
        println!("eps = {:<12} E|X^eps - Xbar| = {:.5} +- {:.5}", r.epsilon, r.error, r.stderr);
    }
    match &out.fit {
        Ok(f) => println!(
            "slope {:.4} +- {:.4}, theory 1 - 1/alpha = {:.4}",
            f.slope, f.slope_stderr, out.reference_slope
        ),
        Err(e) => println!("no fit: {e}"),
    }
    Ok(())
}
