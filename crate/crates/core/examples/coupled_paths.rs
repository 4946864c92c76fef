//! One multiscale path and its averaged counterpart driven by the same slow
//! noise, for a few values of epsilon.
//!
//! ```bash
//! cargo run --release --example coupled_paths
//! ```

use slowfast::dynamics::{simulate_averaged_with, simulate_multiscale_with, AnalyticBbar};
use slowfast::harness::ExperimentConfig;
use slowfast::rng::SeededStream;
use slowfast::spectral::l2;
use slowfast::stable_noise::{NoiseContext, StreamNoise};

fn main() -> slowfast::Result<()> {
    let cfg = ExperimentConfig::default();
    let (h, t_end) = (cfg.integrator.h, cfg.integrator.t_end);
    let key = SeededStream::new(cfg.run.seed).child(0).key();
    for eps in [0.0625, 0.0078125, 0.001953125] {
        let problem = cfg.problem(eps)?;
        let m = problem.m();
        let ctx = NoiseContext::new(problem.noise(), problem.spectrum())?;
        let (x0, y0) = (cfg.x0(m)?, cfg.y0(m)?);

        let mut averaged = Vec::new();
        let bbar = AnalyticBbar::new(&problem)?;
        simulate_averaged_with(&problem, &bbar, &x0, t_end, h, &mut StreamNoise::new(&ctx, key), |_, x| {
            averaged.push(x.to_vec())
        })?;
        let mut worst: f64 = 0.0;
        simulate_multiscale_with(&problem, &x0, &y0, t_end, h, &mut StreamNoise::new(&ctx, key), |i, x, _| {
            let d: Vec<f64> = x.iter().zip(&averaged[i]).map(|(a, b)| a - b).collect();
            worst = worst.max(l2(&d));
        })?;
        println!(
            "eps = {eps:<11} substeps per step = {:<3} sup_t |X^eps - Xbar| = {worst:.5}",
            problem.fast_substeps(h)
        );
    }
    Ok(())
}
