//! Exponential approach of the frozen fast process to its invariant law,
//! measured on the first coordinate and compared with the proven rate.
//!
//! ```bash
//! cargo run --release --example ergodic_decay
//! ```

use slowfast::harness::{ergodicity_check, ExperimentConfig};

fn main() -> slowfast::Result<()> {
    let cfg = ExperimentConfig::default();
    let r = ergodicity_check(&cfg)?;
    for (t, (g, s)) in r.times.iter().zip(r.gaps.iter().zip(&r.gap_stderr)) {
        println!("t = {t:<6.3} |E Y_1(t) - mu(Y_1)| = {g:.4} +- {s:.4}");
    }
    if let Some(f) = &r.fit {
        println!("fitted rate {:.2} (r2 {:.3}), lower bound {:.2}", f.rate, f.r2, r.bound_rate);
    }
    println!("meets bound: {}", r.meets_bound(cfg.ergodicity.slack));
    Ok(())
}
