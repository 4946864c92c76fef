use std::sync::Arc;

use rayon::prelude::*;

use crate::averaging::{
    estimate_bbar, estimate_phi, measure_ergodic_decay, BbarEstimate, Coordinate, ErgodicityReport, PhiEstimate,
};
use crate::dynamics::{AnalyticBbar, AveragedDrift, FrozenStepper, LinearBenchmark, Problem};
use crate::error::{Error, Result};
use crate::rng::SeededStream;
use crate::spectral::{l2, SpectrumSpec};
use crate::stable_noise::{
    convolution_increment_scale, empirical_cf, NoiseContext, NoiseSource, StableNoiseSpec, StableSampler,
    StreamNoise,
};
use crate::stats::robust_mean;

use super::config::{CoefficientKind, ExperimentConfig};

const NOISE_STREAM: u64 = 10;
const BBAR_CHECK_STREAM: u64 = 11;
const PHI_STREAM: u64 = 12;
const ERGODIC_STREAM: u64 = 13;
const CONTRACTION_STREAM: u64 = 14;
const MOMENT_STREAM: u64 = 15;

/// One characteristic-function comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfRow {
    pub alpha: f64,
    /// `standard` draws or a `convolution` increment.
    pub source: &'static str,
    /// Frequency in units of the sample's scale.
    pub u: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub target: f64,
}

impl CfRow {
    pub fn z(&self) -> f64 {
        if self.stderr > 0.0 {
            (self.empirical - self.target) / self.stderr
        } else if self.empirical == self.target {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn passes(&self) -> bool {
        self.z().abs() <= 3.0
    }
}

/// Empirical CF of standard symmetric stable draws, and of a mode-1
/// convolution increment rescaled by its analytic scale, against
/// `exp(-|u|^alpha)`.
pub fn noise_check(cfg: &ExperimentConfig, alphas: &[f64]) -> Result<Vec<CfRow>> {
    let nc = &cfg.noise_check;
    let root = SeededStream::new(cfg.run.seed).child(NOISE_STREAM);
    let mut rows = Vec::new();
    for (ai, &alpha) in alphas.iter().enumerate() {
        let sampler = StableSampler::new(alpha)?;
        let stream = root.child(ai as u64);
        let draws: Vec<f64> = (0..nc.samples as u64)
            .into_par_iter()
            .map(|i| {
                let (u, e) = stream.child(0).key().uniform_pair([i as u32, (i >> 32) as u32, 0, 0]);
                sampler.from_uniforms(u, e)
            })
            .collect();
        for c in empirical_cf(&draws, &nc.u)? {
            rows.push(CfRow {
                alpha,
                source: "standard",
                u: c.u,
                empirical: c.mean,
                stderr: c.stderr,
                target: (-c.u.abs().powf(alpha)).exp(),
            });
        }
        // slow increment of mode 1 over one macro step
        let spectrum = SpectrumSpec::dirichlet_laplacian_1d(1)?;
        let spec = StableNoiseSpec::new(alpha, vec![1.0], vec![1.0])?;
        let ctx = NoiseContext::new(&spec, &spectrum)?;
        let h = cfg.integrator.h.max(1e-3);
        let scale = convolution_increment_scale(spectrum.lambda1(), h, 1.0, alpha);
        let key = stream.child(1).key();
        let incs: Vec<f64> = (0..nc.samples as u64)
            .into_par_iter()
            .map(|i| {
                let mut out = [0.0];
                StreamNoise::new(&ctx, key).slow_increment(i, h, &mut out);
                out[0] / scale
            })
            .collect();
        for c in empirical_cf(&incs, &nc.u)? {
            rows.push(CfRow {
                alpha,
                source: "convolution",
                u: c.u,
                empirical: c.mean,
                stderr: c.stderr,
                target: (-c.u.abs().powf(alpha)).exp(),
            });
        }
    }
    Ok(rows)
}

/// Ergodic `Bbar(x0)` against the closed form when one exists.
#[derive(Debug, Clone, PartialEq)]
pub struct BbarCheck {
    pub x: Vec<f64>,
    pub estimate: BbarEstimate,
    pub analytic: Option<Vec<f64>>,
    pub target_stderr: f64,
}

impl BbarCheck {
    /// Largest per-mode deviation in standard errors.
    pub fn max_z(&self) -> Option<f64> {
        self.analytic.as_ref().map(|a| {
            a.iter()
                .zip(&self.estimate.value)
                .zip(&self.estimate.stderr)
                .map(|((t, v), s)| if *s > 0.0 { (v - t).abs() / s } else { (v - t).abs() * f64::INFINITY })
                .fold(0.0, f64::max)
        })
    }

    pub fn passes(&self) -> bool {
        self.max_z().is_none_or(|z| z <= 3.0) && self.estimate.max_stderr() <= self.target_stderr
    }
}

pub fn bbar_check(cfg: &ExperimentConfig) -> Result<BbarCheck> {
    cfg.validate()?;
    let problem = cfg.problem(1.0)?;
    let x = cfg.x0(problem.m())?;
    let params = cfg.bbar_params(&problem);
    let stream = SeededStream::new(cfg.run.seed).child(BBAR_CHECK_STREAM);
    let estimate = estimate_bbar(&problem, &x, &params, &stream)?;
    let analytic = if problem.coeffs().has_analytic_bbar() {
        let mut out = vec![0.0; problem.m()];
        AnalyticBbar::new(&problem)?.bbar(&x, &mut out)?;
        Some(out)
    } else {
        None
    };
    Ok(BbarCheck {
        x,
        estimate,
        analytic,
        target_stderr: cfg.bbar.target_stderr,
    })
}

/// `Phi(x, y)` by quadrature, with the closed form for the linear benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiCheck {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub estimate: PhiEstimate,
    /// `b1 (y_k - m_k(x)) / (lambda_k + b)` for the linear benchmark.
    pub closed_form: Option<Vec<f64>>,
}

impl PhiCheck {
    pub fn max_z(&self) -> Option<f64> {
        self.closed_form.as_ref().map(|c| {
            c.iter()
                .zip(&self.estimate.value)
                .zip(&self.estimate.stderr)
                .map(|((t, v), s)| {
                    let tol = s + self.estimate.truncation_bound;
                    if tol > 0.0 {
                        (v - t).abs() / tol
                    } else {
                        (v - t).abs() * f64::INFINITY
                    }
                })
                .fold(0.0, f64::max)
        })
    }

    pub fn passes(&self) -> bool {
        self.max_z().map_or(!self.estimate.underpowered, |z| z <= 3.0)
    }
}

pub fn phi_check(cfg: &ExperimentConfig) -> Result<PhiCheck> {
    cfg.validate()?;
    let problem = cfg.problem(1.0)?;
    let m = problem.m();
    let mut x = cfg.phi.x.clone();
    x.resize(m, 0.0);
    let mut y = cfg.phi.y.clone();
    y.resize(m, 0.0);
    let bbar = match problem.coeffs().has_analytic_bbar() {
        true => {
            let mut out = vec![0.0; m];
            AnalyticBbar::new(&problem)?.bbar(&x, &mut out)?;
            out
        }
        false => {
            let params = cfg.bbar_params(&problem);
            estimate_bbar(&problem, &x, &params, &SeededStream::new(cfg.run.seed).child(PHI_STREAM).child(1))?.value
        }
    };
    let params = cfg.phi_params(&problem);
    let estimate = estimate_phi(
        &problem,
        &x,
        &y,
        &bbar,
        &params,
        &SeededStream::new(cfg.run.seed).child(PHI_STREAM).child(0),
    )?;
    let closed_form = (cfg.problem.coefficients == CoefficientKind::Linear).then(|| {
        let p = &cfg.problem;
        let lin = LinearBenchmark::new(m, p.a, p.b, p.b0, p.b1).expect("validated");
        let mean = lin.frozen_mean(problem.spectrum(), &x);
        problem
            .spectrum()
            .eigenvalues()
            .iter()
            .enumerate()
            .map(|(k, l)| p.b1 * (y[k] - mean[k]) / (l + p.b))
            .collect()
    });
    Ok(PhiCheck {
        x,
        y,
        estimate,
        closed_form,
    })
}

/// Decay of `|E Y_1(t) - mu^0(Y_1)|` from `y = y1_start e_1` at `x = 0`.
pub fn ergodicity_check(cfg: &ExperimentConfig) -> Result<ErgodicityReport> {
    cfg.validate()?;
    let problem = cfg.problem(1.0)?;
    let m = problem.m();
    let e = &cfg.ergodicity;
    let mut y = vec![0.0; m];
    y[0] = e.y1_start;
    let n = (e.t_max / e.dt).round() as usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * e.dt).collect();
    measure_ergodic_decay(
        &Coordinate(0),
        &problem,
        &vec![0.0; m],
        &y,
        &times,
        &cfg.ergodic_params(&problem),
        &SeededStream::new(cfg.run.seed).child(ERGODIC_STREAM),
    )
}

/// Pathwise contraction of the frozen equation under common noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub pairs: usize,
    pub steps: usize,
    /// Saved steps where `|Y1 - Y2| > e^{-(lambda_1 - L_F) t / 2} |y1 - y2| + slack`.
    pub violations: usize,
    /// Largest ratio of the distance to the bound over all saved steps.
    pub worst_ratio: f64,
}

/// `pairs` random initial pairs `(y1, y2)` with standard normal coefficients
/// scaled by `spread`, shared fast noise and a common random `x`.
pub fn contraction_check(
    problem: &Problem,
    pairs: usize,
    t_end: f64,
    h_f: f64,
    spread: f64,
    slack: f64,
    seed: u64,
) -> Result<ContractionReport> {
    let m = problem.m();
    let ctx = NoiseContext::new(problem.noise(), problem.spectrum())?;
    let steps = crate::dynamics::step_count(t_end, h_f)?;
    let rate = problem.dissipativity_gap() / 2.0;
    let root = SeededStream::new(seed).child(CONTRACTION_STREAM);
    let results: Vec<(usize, f64)> = (0..pairs)
        .into_par_iter()
        .map(|i| -> Result<(usize, f64)> {
            let mut init = root.child(i as u64).child(0).rng();
            let x: Vec<f64> = (0..m).map(|_| init.next_normal()).collect();
            let mut y1: Vec<f64> = (0..m).map(|_| spread * init.next_normal()).collect();
            let mut y2: Vec<f64> = (0..m).map(|_| spread * init.next_normal()).collect();
            let d0 = l2(&y1.iter().zip(&y2).map(|(a, b)| a - b).collect::<Vec<_>>());
            let key = root.child(i as u64).child(1).key();
            let mut n1 = StreamNoise::new(&ctx, key);
            let mut n2 = StreamNoise::new(&ctx, key);
            let mut s1 = FrozenStepper::new(problem, h_f)?;
            let mut s2 = FrozenStepper::new(problem, h_f)?;
            let (mut bad, mut worst) = (0usize, 0.0f64);
            for s in 0..steps {
                s1.advance(&x, &mut y1, s as u64, &mut n1)?;
                s2.advance(&x, &mut y2, s as u64, &mut n2)?;
                let t = (s + 1) as f64 * h_f;
                let d = l2(&y1.iter().zip(&y2).map(|(a, b)| a - b).collect::<Vec<_>>());
                let bound = (-rate * t).exp() * d0;
                if d > bound + slack {
                    bad += 1;
                }
                if bound > 0.0 {
                    worst = worst.max(d / bound);
                }
            }
            Ok((bad, worst))
        })
        .collect::<Result<_>>()?;
    Ok(ContractionReport {
        pairs,
        steps,
        violations: results.iter().map(|r| r.0).sum(),
        worst_ratio: results.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

/// One point of the frozen moment-bound grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPoint {
    pub x_norm: f64,
    pub y_norm: f64,
    pub t: f64,
    pub mean_norm: f64,
    pub stderr: f64,
    pub bound: f64,
}

impl MomentPoint {
    /// Estimate above the bound by more than `n_se` standard errors.
    pub fn violates(&self, n_se: f64) -> bool {
        self.mean_norm > self.bound + n_se * self.stderr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentBoundReport {
    /// `C_1` from the calibration point.
    pub c1: f64,
    pub points: Vec<MomentPoint>,
}

impl MomentBoundReport {
    pub fn violations(&self, n_se: f64) -> usize {
        self.points.iter().filter(|p| p.violates(n_se)).count()
    }
}

/// Samples behind `C_1`, as a multiple of the per-point sample count.
const CALIBRATION_FACTOR: usize = 4;

/// `E|Y_t^{x,y}| <= e^{-lambda_1 t}|y| + C_1 (1 + |x|)` over a grid with
/// `x = |x| e_1`, `y = |y| e_1`. `C_1` is fixed before the grid is evaluated
/// as the largest estimate of `E|Y_t|` at `x = y = 0` over every saved step up
/// to the last grid time.
pub fn frozen_moment_bound_check(
    problem: &Problem,
    x_norms: &[f64],
    y_norms: &[f64],
    times: &[f64],
    samples: usize,
    h_f: f64,
    seed: u64,
) -> Result<MomentBoundReport> {
    let m = problem.m();
    let ctx = NoiseContext::new(problem.noise(), problem.spectrum())?;
    let root = SeededStream::new(seed).child(MOMENT_STREAM);
    let idx: Vec<usize> = times.iter().map(|t| crate::dynamics::step_count(*t, h_f)).collect::<Result<_>>()?;
    let last = *idx.iter().max().ok_or_else(|| Error::param("times", "must be nonempty"))?;
    let l1 = problem.spectrum().lambda1();
    // robust mean of |Y| at each step in `steps`
    let estimate = |xn: f64, yn: f64, steps: &[usize], n: usize, stream: &SeededStream| -> Result<Vec<(f64, f64)>> {
        let mut x = vec![0.0; m];
        x[0] = xn;
        let norms: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| -> Result<Vec<f64>> {
                let mut noise = StreamNoise::new(&ctx, stream.child(i as u64).key());
                let mut st = FrozenStepper::new(problem, h_f)?;
                let mut y = vec![0.0; m];
                y[0] = yn;
                let mut out = vec![0.0; steps.len()];
                for s in 0..=last {
                    for (j, &k) in steps.iter().enumerate() {
                        if k == s {
                            out[j] = l2(&y);
                        }
                    }
                    if s < last {
                        st.advance(&x, &mut y, s as u64, &mut noise)?;
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        (0..steps.len())
            .map(|j| {
                let col: Vec<f64> = norms.iter().map(|v| v[j]).collect();
                robust_mean(&col, 16).map(|e| (e.value, e.stderr))
            })
            .collect()
    };
    let all_steps: Vec<usize> = (1..=last).collect();
    let calib = estimate(0.0, 0.0, &all_steps, CALIBRATION_FACTOR * samples, &root.child(0))?;
    let c1 = calib.iter().map(|e| e.0).fold(0.0, f64::max);
    let mut points = Vec::new();
    for (xi, &xn) in x_norms.iter().enumerate() {
        for (yi, &yn) in y_norms.iter().enumerate() {
            let est = estimate(xn, yn, &idx, samples, &root.child(1).child(xi as u64).child(yi as u64))?;
            for (j, &t) in times.iter().enumerate() {
                points.push(MomentPoint {
                    x_norm: xn,
                    y_norm: yn,
                    t,
                    mean_norm: est[j].0,
                    stderr: est[j].1,
                    bound: (-l1 * t).exp() * yn + c1 * (1.0 + xn),
                });
            }
        }
    }
    Ok(MomentBoundReport { c1, points })
}

/// The configured problem with its coefficients swapped for `kind`.
pub fn problem_of_kind(cfg: &ExperimentConfig, kind: CoefficientKind) -> Result<Problem> {
    let m = cfg.problem.m;
    let spectrum = Arc::new(SpectrumSpec::dirichlet_laplacian_1d(m)?);
    Problem::new(spectrum, cfg.coefficients(kind, m)?, cfg.noise_spec(m)?, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.problem.m = 4;
        c
    }

    #[test]
    fn noise_check_small_run_passes() {
        let mut c = cfg();
        c.noise_check.samples = 20_000;
        let rows = noise_check(&c, &[1.5]).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.passes()), "{rows:?}");
    }

    #[test]
    fn contraction_holds_for_both_benchmarks() {
        for kind in [CoefficientKind::Linear, CoefficientKind::Nemytskii] {
            let p = problem_of_kind(&cfg(), kind).unwrap();
            let r = contraction_check(&p, 10, 1.0, 0.01, 2.0, 1e-9, 3).unwrap();
            assert_eq!(r.violations, 0, "{kind:?}: {r:?}");
            assert!(r.worst_ratio <= 1.0);
        }
    }

    #[test]
    fn phi_check_linear_closed_form() {
        let mut c = cfg();
        c.phi.samples = 2000;
        let r = phi_check(&c).unwrap();
        let cf = r.closed_form.clone().unwrap();
        assert!((cf[0] - 1.0 / (std::f64::consts::PI.powi(2) + 1.0)).abs() < 1e-12);
        assert!(r.passes(), "{r:?}");
    }

    #[test]
    fn moment_bound_small_grid() {
        let p = problem_of_kind(&cfg(), CoefficientKind::Linear).unwrap();
        let r = frozen_moment_bound_check(&p, &[0.0, 4.0], &[0.0, 4.0], &[0.1, 0.5], 256, 0.01, 1).unwrap();
        assert!(r.c1 > 0.0);
        assert_eq!(r.points.len(), 8);
        assert_eq!(r.violations(2.0), 0, "{r:?}");
    }
}
