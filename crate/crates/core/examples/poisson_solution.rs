//! Time-integral solution Phi(x, y) of the Poisson equation for the frozen
//! generator, by quadrature along frozen paths.
//!
//! ```bash
//! cargo run --release --example poisson_solution
//! ```

use slowfast::harness::{phi_check, ExperimentConfig};

fn main() -> slowfast::Result<()> {
    let cfg = ExperimentConfig::default();
    let c = phi_check(&cfg)?;
    let exact = c.closed_form.clone().expect("linear benchmark");
    for (k, closed) in exact.iter().enumerate().take(3) {
        println!(
            "mode {} Phi = {:.5} +- {:.5}   b1 (y_k - m_k) / (lambda_k + b) = {:.5}",
            k + 1,
            c.estimate.value[k],
            c.estimate.stderr[k],
            closed
        );
    }
    println!("tail bound {:.1e}, passes: {}", c.estimate.truncation_bound, c.passes());
    Ok(())
}
