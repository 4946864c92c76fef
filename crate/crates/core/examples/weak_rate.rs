//! Weak averaging rate with phi(x) = cos(x_1), compared with the strong rate
//! from the same samples. Pass `--full` for N = 20000 (several minutes);
//! the quick run leaves most rungs at the Monte Carlo noise floor.
//!
//! ```bash
//! cargo run --release --example weak_rate -- --full
//! ```

use slowfast::harness::{run_ladder, weak_dominates_strong, ExperimentConfig, LadderPlan};

fn main() -> slowfast::Result<()> {
    let full = std::env::args().any(|a| a == "--full");
    let mut cfg = ExperimentConfig::default();
    cfg.problem.alpha = 1.75;
    let weak_samples = if full { cfg.rate.weak_samples } else { 2000 };
    let strong_samples = if full { cfg.rate.strong_samples } else { 400 };
    let out = run_ladder(
        &cfg,
        LadderPlan {
            strong_samples,
            weak_samples,
            coupled: true,
        },
    )?;
    let (weak, strong) = (out.weak.expect("weak"), out.strong.expect("strong"));
    for r in &weak.table.rows {
        println!("eps = {:<12} |E phi(X^eps) - E phi(Xbar)| = {:.2e} +- {:.1e}", r.epsilon, r.error, r.stderr);
    }
    for o in [&weak, &strong] {
        match &o.fit {
            Ok(f) => println!("{} slope {:.3} +- {:.3}", o.name, f.slope, f.slope_stderr),
            Err(e) => println!("{}: {e}", o.name),
        }
    }
    println!("weak >= strong - 2 se: {:?}", weak_dominates_strong(&weak, &strong));
    Ok(())
}
