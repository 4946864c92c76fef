use slowfast::averaging::estimate_phi;
use slowfast::dynamics::{AnalyticBbar, AveragedDrift};
use slowfast::harness::{CoefficientKind, ExperimentConfig};
use slowfast::rng::SeededStream;

// |Phi(x, y)| <= C (1 + |x| + |y|) over a grid, with C calibrated once on
// y = e_1 and y = 8 e_1 at x = 0 (bounded and linear regimes) and frozen.
#[test]
fn poisson_solution_grows_at_most_linearly() {
    for kind in [CoefficientKind::Linear, CoefficientKind::Nemytskii] {
        let mut cfg = ExperimentConfig::default();
        cfg.problem.m = 4;
        cfg.phi.samples = 2000;
        let p = cfg.problem_with(kind, 4, 1.0).unwrap();
        let params = cfg.phi_params(&p);
        let phi = |xn: f64, yn: f64, seed: u64| {
            let (mut x, mut y) = (vec![0.0; 4], vec![0.0; 4]);
            x[0] = xn;
            y[0] = yn;
            let bbar = match kind {
                CoefficientKind::Linear => {
                    let mut b = vec![0.0; 4];
                    AnalyticBbar::new(&p).unwrap().bbar(&x, &mut b).unwrap();
                    b
                }
                CoefficientKind::Nemytskii => {
                    let bp = cfg.bbar_params(&p);
                    slowfast::averaging::estimate_bbar(&p, &x, &bp, &SeededStream::new(seed + 100))
                        .unwrap()
                        .value
                }
            };
            let e = estimate_phi(&p, &x, &y, &bbar, &params, &SeededStream::new(seed)).unwrap();
            let norm = e.value.iter().map(|v| v * v).sum::<f64>().sqrt();
            let slack = e.stderr.iter().map(|s| s * s).sum::<f64>().sqrt() + e.truncation_bound;
            (norm, slack)
        };
        let c = f64::max(phi(0.0, 1.0, 1).0 / 2.0, phi(0.0, 8.0, 2).0 / 9.0);
        let mut seed = 3;
        for xn in [0.0, 2.0, 8.0] {
            for yn in [0.0, 1.0, 8.0] {
                let (v, slack) = phi(xn, yn, seed);
                seed += 1;
                assert!(
                    v <= c * (1.0 + xn + yn) + 3.0 * slack,
                    "{kind:?} |x| = {xn} |y| = {yn}: |Phi| = {v} vs C = {c}, slack {slack}"
                );
            }
        }
    }
}
