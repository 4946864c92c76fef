//! Ergodic estimate of the averaged drift Bbar(x) from frozen fast chains,
//! against the closed form on the linear benchmark and as the only route on
//! the Nemytskii benchmark.
//!
//! ```bash
//! cargo run --release --example averaged_drift
//! ```

use slowfast::averaging::estimate_bbar;
use slowfast::harness::{bbar_check, CoefficientKind, ExperimentConfig};
use slowfast::rng::SeededStream;

fn main() -> slowfast::Result<()> {
    let cfg = ExperimentConfig::default();
    let c = bbar_check(&cfg)?;
    let analytic = c.analytic.clone().expect("linear benchmark");
    for (k, closed) in analytic.iter().enumerate().take(3) {
        println!(
            "linear   mode {} estimate {:.4} +- {:.4}  closed form {:.4}",
            k + 1,
            c.estimate.value[k],
            c.estimate.stderr[k],
            closed
        );
    }
    println!("passes: {}", c.passes());

    let problem = cfg.problem_with(CoefficientKind::Nemytskii, 8, 1.0)?;
    let params = cfg.bbar_params(&problem);
    let est = estimate_bbar(&problem, &cfg.x0(8)?, &params, &SeededStream::new(1))?;
    for k in 0..3 {
        println!("nemytskii mode {} estimate {:.4} +- {:.4}", k + 1, est.value[k], est.stderr[k]);
    }
    Ok(())
}
