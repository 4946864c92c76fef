//! Pathwise contraction of the frozen equation under common noise, and the
//! first-moment bound E|Y_t| <= e^{-lambda_1 t}|y| + C_1 (1 + |x|).
//!
//! ```bash
//! cargo run --release --example frozen_bounds
//! ```

use slowfast::harness::{contraction_check, frozen_moment_bound_check, problem_of_kind, CoefficientKind, ExperimentConfig};

fn main() -> slowfast::Result<()> {
    let cfg = ExperimentConfig::default();
    for kind in [CoefficientKind::Linear, CoefficientKind::Nemytskii] {
        let p = problem_of_kind(&cfg, kind)?;
        let c = contraction_check(&p, 100, 1.0, 0.01, 2.0, 1e-9, 1)?;
        println!(
            "{kind:?}: {} pairs, {} violations, worst distance / bound {:.3}",
            c.pairs, c.violations, c.worst_ratio
        );
    }
    let p = problem_of_kind(&cfg, CoefficientKind::Linear)?;
    let r = frozen_moment_bound_check(&p, &[0.0, 1.0, 4.0], &[0.0, 1.0, 4.0], &[0.05, 0.2, 1.0], 2000, 0.01, 1)?;
    println!("C_1 = {:.4}", r.c1);
    for q in &r.points {
        println!(
            "|x| = {} |y| = {} t = {:<4} E|Y_t| = {:.4} +- {:.4} <= {:.4}",
            q.x_norm, q.y_norm, q.t, q.mean_norm, q.stderr, q.bound
        );
    }
    println!("violations beyond 2 se: {}", r.violations(2.0));
    Ok(())
}
