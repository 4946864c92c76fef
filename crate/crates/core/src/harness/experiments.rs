use rayon::prelude::*;

use crate::averaging::BbarOracle;
use crate::dynamics::{
    simulate_averaged_with, simulate_multiscale_with, step_count, AveragedDrift, MultiscaleStepper, Problem,
};
use crate::error::{Error, Result};
use crate::rng::SeededStream;
use crate::spectral::l2;
use crate::stable_noise::{NoiseContext, StreamNoise};
use crate::stats::{fit_loglog, mean_stderr, median_of_block_means, robust_mean, RateFit, RatePoint};

use super::config::{BbarSource, ExperimentConfig, TestFunctionKind};

/// Stream tags under the master seed.
const LADDER_STREAM: u64 = 1;
const UNCOUPLED_STREAM: u64 = 2;
const GALERKIN_STREAM: u64 = 3;
const BBAR_STREAM: u64 = 4;

/// Samples per parallel work unit; units never straddle a strong block.
const UNIT: usize = 8;
/// Units evaluated per parallel wave before their sums are folded in order.
const WAVE: usize = 256;

/// Aborted samples beyond this fraction fail the experiment.
pub const MAX_ABORT_FRACTION: f64 = 0.05;

/// Runs `f` on a pool of `threads` workers (0 = machine default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if threads > 0 {
        builder = builder.num_threads(threads);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("run.threads: cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Weak-error test function.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Cos(Vec<f64>),
    Gauss,
    Constant,
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Cos(v) => x.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().cos(),
            TestFunction::Gauss => (-0.5 * x.iter().map(|a| a * a).sum::<f64>()).exp(),
            TestFunction::Constant => 1.0,
        }
    }
}

/// One rung of a rate ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub epsilon: f64,
    pub error: f64,
    pub stderr: f64,
    pub n_effective: usize,
    pub aborted: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
}

impl RateTable {
    /// Points for the log-log fit, on the scale `error^{1/p}`.
    pub fn points(&self, p: f64) -> Vec<RatePoint> {
        self.rows
            .iter()
            .map(|r| {
                let e = r.error.max(0.0).powf(1.0 / p);
                // delta method for x -> x^{1/p}
                let se = if r.error > 0.0 { r.stderr * e / (p * r.error) } else { r.stderr };
                RatePoint {
                    epsilon: r.epsilon,
                    error: e,
                    stderr: se,
                }
            })
            .collect()
    }

    pub fn total_aborted(&self) -> usize {
        self.rows.iter().map(|r| r.aborted).sum()
    }
}

/// A table, its fit and the theoretical slope it is compared with.
#[derive(Debug, Clone, PartialEq)]
pub struct RateOutcome {
    pub name: &'static str,
    pub table: RateTable,
    pub fit: std::result::Result<RateFit, String>,
    pub reference_slope: f64,
    /// Moment the table is raised to before fitting.
    pub p: f64,
}

impl RateOutcome {
    fn new(name: &'static str, table: RateTable, reference_slope: f64, p: f64) -> Self {
        let fit = fit_loglog(&table.points(p)).map_err(|e| e.to_string());
        Self {
            name,
            table,
            fit,
            reference_slope,
            p,
        }
    }

    /// Fitted slope within `tol` of the reference.
    pub fn slope_within(&self, tol: f64) -> bool {
        matches!(&self.fit, Ok(f) if (f.slope - self.reference_slope).abs() <= tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderOutcome {
    pub strong: Option<RateOutcome>,
    pub weak: Option<RateOutcome>,
}

/// What a ladder run computes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderPlan {
    pub strong_samples: usize,
    pub weak_samples: usize,
    pub coupled: bool,
}

/// Per-unit partial sums, indexed `[eps][t]`.
struct UnitSums {
    strong_block: usize,
    strong: Vec<Vec<f64>>,
    strong_count: Vec<usize>,
    weak: Vec<Vec<f64>>,
    weak_sq: Vec<Vec<f64>>,
    weak_count: Vec<usize>,
    strong_aborted: Vec<usize>,
    weak_aborted: Vec<usize>,
}

fn zeros(e: usize, t: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; t]; e]
}

/// Contiguous sample ranges that never straddle a strong block boundary or
/// the end of the strong range.
fn units(strong_samples: usize, total: usize, blocks: usize) -> Vec<(usize, usize, usize)> {
    let mut cuts: Vec<usize> = (0..=blocks).map(|b| b * strong_samples / blocks).collect();
    cuts.push(total);
    cuts.dedup();
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let block = if hi <= strong_samples {
            (0..blocks).find(|&b| lo >= b * strong_samples / blocks && hi <= (b + 1) * strong_samples / blocks)
                .unwrap_or(usize::MAX)
        } else {
            usize::MAX
        };
        let mut s = lo;
        while s < hi {
            let e = (s + UNIT).min(hi);
            out.push((s, e, block));
            s = e;
        }
    }
    out
}

fn is_abort(e: &Error) -> bool {
    matches!(e, Error::NonFinite { .. })
}

/// Strong and/or weak ladders from one set of coupled samples. Sample `i`
/// drives every epsilon with the same noise streams, and the averaged path is
/// computed once per sample.
pub fn run_ladder(cfg: &ExperimentConfig, plan: LadderPlan) -> Result<LadderOutcome> {
    cfg.validate()?;
    let eps = &cfg.rate.epsilons;
    let problems: Vec<Problem> = eps.iter().map(|&e| cfg.problem(e)).collect::<Result<_>>()?;
    let base = &problems[0];
    let m = base.m();
    let x0 = cfg.x0(m)?;
    let y0 = cfg.y0(m)?;
    let (h, t_end) = (cfg.integrator.h, cfg.integrator.t_end);
    let n_t = step_count(t_end, h)? + 1;
    let p = cfg.rate.p;
    let blocks = cfg.rate.blocks;
    let phi = match cfg.rate.test_function {
        TestFunctionKind::Cos => TestFunction::Cos(cfg.test_vector()?),
        TestFunctionKind::Gauss => TestFunction::Gauss,
        TestFunctionKind::Constant => TestFunction::Constant,
    };
    let root = SeededStream::new(cfg.run.seed);
    let oracle = match cfg.rate.bbar {
        BbarSource::Analytic => BbarOracle::analytic(base)?,
        BbarSource::Ergodic => BbarOracle::ergodic(base, cfg.bbar_params(base), root.child(BBAR_STREAM))?,
    };
    let ctx = NoiseContext::new(base.noise(), base.spectrum())?;
    let total = plan.strong_samples.max(plan.weak_samples);
    let ne = eps.len();

    let run_unit = |&(lo, hi, block): &(usize, usize, usize)| -> Result<UnitSums> {
        let mut u = UnitSums {
            strong_block: block,
            strong: zeros(ne, n_t),
            strong_count: vec![0; ne],
            weak: zeros(ne, n_t),
            weak_sq: zeros(ne, n_t),
            weak_count: vec![0; ne],
            strong_aborted: vec![0; ne],
            weak_aborted: vec![0; ne],
        };
        let mut steppers: Vec<MultiscaleStepper> =
            problems.iter().map(|pr| MultiscaleStepper::new(pr, h)).collect::<Result<_>>()?;
        let mut xbar = vec![0.0; n_t * m];
        let mut phibar = vec![0.0; n_t];
        let mut x = vec![0.0; m];
        let mut y = vec![0.0; m];
        let mut strong_path = vec![0.0; n_t];
        let mut weak_path = vec![0.0; n_t];
        for i in lo..hi {
            let want_strong = i < plan.strong_samples;
            let want_weak = i < plan.weak_samples;
            let key = root.child(LADDER_STREAM).child(i as u64).key();
            let avg_key = if plan.coupled {
                key
            } else {
                root.child(UNCOUPLED_STREAM).child(i as u64).key()
            };
            let avg = simulate_averaged_with(
                base,
                &oracle as &dyn AveragedDrift,
                &x0,
                t_end,
                h,
                &mut StreamNoise::new(&ctx, avg_key),
                |j, xb| {
                    xbar[j * m..(j + 1) * m].copy_from_slice(xb);
                    phibar[j] = phi.eval(xb);
                },
            );
            if let Err(e) = avg {
                if !is_abort(&e) {
                    return Err(e);
                }
                for k in 0..ne {
                    u.strong_aborted[k] += want_strong as usize;
                    u.weak_aborted[k] += want_weak as usize;
                }
                continue;
            }
            for (k, stepper) in steppers.iter_mut().enumerate() {
                let mut noise = StreamNoise::new(&ctx, key);
                x.copy_from_slice(&x0);
                y.copy_from_slice(&y0);
                let mut record = |j: usize, x: &[f64]| {
                    let xb = &xbar[j * m..(j + 1) * m];
                    let d2: f64 = x.iter().zip(xb).map(|(a, b)| (a - b) * (a - b)).sum();
                    strong_path[j] = d2.sqrt().powf(p);
                    weak_path[j] = phi.eval(x) - phibar[j];
                };
                record(0, &x);
                let mut ok = true;
                for s in 0..n_t - 1 {
                    match stepper.advance(&mut x, &mut y, s as u64, &mut noise) {
                        Ok(()) => record(s + 1, &x),
                        Err(e) if is_abort(&e) => {
                            ok = false;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                if !ok {
                    u.strong_aborted[k] += want_strong as usize;
                    u.weak_aborted[k] += want_weak as usize;
                    continue;
                }
                if want_strong {
                    for (a, v) in u.strong[k].iter_mut().zip(&strong_path) {
                        *a += v;
                    }
                    u.strong_count[k] += 1;
                }
                if want_weak {
                    for ((a, q), v) in u.weak[k].iter_mut().zip(u.weak_sq[k].iter_mut()).zip(&weak_path) {
                        *a += v;
                        *q += v * v;
                    }
                    u.weak_count[k] += 1;
                }
            }
        }
        Ok(u)
    };

    let work = units(plan.strong_samples, total, blocks);
    let mut strong_blocks = vec![zeros(ne, n_t); blocks];
    let mut strong_block_count = vec![vec![0usize; ne]; blocks];
    let mut weak = zeros(ne, n_t);
    let mut weak_sq = zeros(ne, n_t);
    let mut weak_count = vec![0usize; ne];
    let mut strong_aborted = vec![0usize; ne];
    let mut weak_aborted = vec![0usize; ne];
    for wave in work.chunks(WAVE) {
        let sums: Vec<UnitSums> = wave.par_iter().map(run_unit).collect::<Result<_>>()?;
        for u in sums {
            for k in 0..ne {
                if u.strong_block < blocks {
                    let b = u.strong_block;
                    for (a, v) in strong_blocks[b][k].iter_mut().zip(&u.strong[k]) {
                        *a += v;
                    }
                    strong_block_count[b][k] += u.strong_count[k];
                }
                for (a, v) in weak[k].iter_mut().zip(&u.weak[k]) {
                    *a += v;
                }
                for (a, v) in weak_sq[k].iter_mut().zip(&u.weak_sq[k]) {
                    *a += v;
                }
                weak_count[k] += u.weak_count[k];
                strong_aborted[k] += u.strong_aborted[k];
                weak_aborted[k] += u.weak_aborted[k];
            }
        }
    }

    let check_aborts = |aborted: &[usize], n: usize| -> Result<()> {
        for (k, &a) in aborted.iter().enumerate() {
            if a as f64 > MAX_ABORT_FRACTION * n as f64 {
                return Err(Error::ExcessiveAborts {
                    epsilon: eps[k],
                    aborted: a,
                    total: n,
                });
            }
        }
        Ok(())
    };

    let strong = if plan.strong_samples > 0 {
        check_aborts(&strong_aborted, plan.strong_samples)?;
        let mut rows = Vec::with_capacity(ne);
        for k in 0..ne {
            let mut best = (f64::NEG_INFINITY, 0.0);
            for j in 0..n_t {
                let means: Vec<f64> = (0..blocks)
                    .filter(|&b| strong_block_count[b][k] > 0)
                    .map(|b| strong_blocks[b][k][j] / strong_block_count[b][k] as f64)
                    .collect();
                let est = median_of_block_means(&means)?;
                if est.value > best.0 {
                    best = (est.value, est.stderr);
                }
            }
            rows.push(RateRow {
                epsilon: eps[k],
                error: best.0,
                stderr: best.1,
                n_effective: plan.strong_samples - strong_aborted[k],
                aborted: strong_aborted[k],
            });
        }
        let name = if plan.coupled { "strong-rate" } else { "strong-rate-uncoupled" };
        Some(RateOutcome::new(name, RateTable { rows }, cfg.strong_reference_slope(), p))
    } else {
        None
    };

    let weak = if plan.weak_samples > 0 {
        check_aborts(&weak_aborted, plan.weak_samples)?;
        let mut rows = Vec::with_capacity(ne);
        for k in 0..ne {
            let n = weak_count[k].max(1) as f64;
            let mut best = (f64::NEG_INFINITY, 0.0);
            for j in 0..n_t {
                let mean = weak[k][j] / n;
                let var = ((weak_sq[k][j] / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
                if mean.abs() > best.0 {
                    best = (mean.abs(), (var / n).sqrt());
                }
            }
            rows.push(RateRow {
                epsilon: eps[k],
                error: best.0,
                stderr: best.1,
                n_effective: weak_count[k],
                aborted: weak_aborted[k],
            });
        }
        Some(RateOutcome::new("weak-rate", RateTable { rows }, 1.0, 1.0))
    } else {
        None
    };
    Ok(LadderOutcome { strong, weak })
}

/// Strong ladder with `rate.strong_samples` samples; coupling per `rate.coupled`.
pub fn strong_rate_experiment(cfg: &ExperimentConfig) -> Result<RateOutcome> {
    let out = run_ladder(
        cfg,
        LadderPlan {
            strong_samples: cfg.rate.strong_samples,
            weak_samples: 0,
            coupled: cfg.rate.coupled,
        },
    )?;
    Ok(out.strong.expect("strong ladder requested"))
}

/// Weak ladder with `rate.weak_samples` coupled samples.
pub fn weak_rate_experiment(cfg: &ExperimentConfig) -> Result<RateOutcome> {
    let out = run_ladder(
        cfg,
        LadderPlan {
            strong_samples: 0,
            weak_samples: cfg.rate.weak_samples,
            coupled: true,
        },
    )?;
    Ok(out.weak.expect("weak ladder requested"))
}

/// Weak fitted slope at least the strong one minus two joint standard
/// errors; `None` when either fit failed.
pub fn weak_dominates_strong(weak: &RateOutcome, strong: &RateOutcome) -> Option<bool> {
    match (&weak.fit, &strong.fit) {
        (Ok(w), Ok(s)) => Some(w.slope >= s.slope - 2.0 * w.slope_stderr.hypot(s.slope_stderr)),
        _ => None,
    }
}

/// One resolution of a Galerkin study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalerkinRow {
    pub m: usize,
    pub error: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinOutcome {
    pub rows: Vec<GalerkinRow>,
    /// Indices `i` where row `i + 1` fails to sit below row `i` by more than
    /// two joint standard errors.
    pub violations: Vec<usize>,
    pub aborted: usize,
}

impl GalerkinOutcome {
    pub fn strictly_decreasing(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `E|X^{m,eps}_T - X^{m*,eps}_T|` over the ladder, with the top rung as the
/// reference and shared mode-indexed noise across resolutions.
pub fn galerkin_convergence_experiment(cfg: &ExperimentConfig) -> Result<GalerkinOutcome> {
    cfg.validate()?;
    let g = &cfg.galerkin;
    let m_star = *g.m_ladder.last().expect("validated ladder");
    let reference = cfg.problem_with(g.coefficients, m_star, g.epsilon)?;
    let problems: Vec<Problem> = g.m_ladder.iter().map(|&m| reference.truncated(m)).collect::<Result<_>>()?;
    let contexts: Vec<NoiseContext> = problems
        .iter()
        .map(|p| NoiseContext::new(p.noise(), p.spectrum()))
        .collect::<Result<_>>()?;
    let x0_full = cfg.x0(m_star.max(cfg.problem.x0.len()))?;
    let y0_full = cfg.y0(m_star.max(cfg.problem.y0.len()))?;
    let (h, t_end) = (cfg.integrator.h, cfg.integrator.t_end);
    let root = SeededStream::new(cfg.run.seed).child(GALERKIN_STREAM);
    let nm = problems.len();

    let per_sample: Vec<Option<Vec<f64>>> = (0..g.samples)
        .into_par_iter()
        .map(|i| -> Result<Option<Vec<f64>>> {
            let key = root.child(i as u64).key();
            let mut finals = Vec::with_capacity(nm);
            for (pr, ctx) in problems.iter().zip(&contexts) {
                let m = pr.m();
                let mut last = vec![0.0; m];
                let r = simulate_multiscale_with(
                    pr,
                    &x0_full[..m],
                    &y0_full[..m],
                    t_end,
                    h,
                    &mut StreamNoise::new(ctx, key),
                    |_, x, _| last.copy_from_slice(x),
                );
                match r {
                    Ok(()) => finals.push(last),
                    Err(e) if is_abort(&e) => return Ok(None),
                    Err(e) => return Err(e),
                }
            }
            let star = finals.last().expect("nonempty ladder");
            Ok(Some(
                finals
                    .iter()
                    .map(|xm| {
                        let mut diff = star.clone();
                        for (d, v) in diff.iter_mut().zip(xm) {
                            *d -= v;
                        }
                        l2(&diff)
                    })
                    .collect(),
            ))
        })
        .collect::<Result<_>>()?;
    let kept: Vec<&Vec<f64>> = per_sample.iter().flatten().collect();
    let aborted = g.samples - kept.len();
    if aborted as f64 > MAX_ABORT_FRACTION * g.samples as f64 {
        return Err(Error::ExcessiveAborts {
            epsilon: g.epsilon,
            aborted,
            total: g.samples,
        });
    }
    let mut rows = Vec::with_capacity(nm);
    for (j, pr) in problems.iter().enumerate() {
        let col: Vec<f64> = kept.iter().map(|v| v[j]).collect();
        let est = if col.iter().all(|&v| v == 0.0) {
            crate::stats::Estimate { value: 0.0, stderr: 0.0 }
        } else {
            robust_mean(&col, cfg.rate.blocks).or_else(|_| mean_stderr(&col))?
        };
        rows.push(GalerkinRow {
            m: pr.m(),
            error: est.value,
            stderr: est.stderr,
        });
    }
    let violations = rows
        .windows(2)
        .enumerate()
        .filter(|(_, w)| {
            let joint = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            w[0].error - w[1].error <= 2.0 * joint
        })
        .map(|(i, _)| i)
        .collect();
    Ok(GalerkinOutcome {
        rows,
        violations,
        aborted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::CoefficientKind;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.problem.m = 4;
        c.integrator.h = 2f64.powi(-6);
        c.integrator.t_end = 0.25;
        c.rate.epsilons = vec![2f64.powi(-2), 2f64.powi(-4), 2f64.powi(-6)];
        c.rate.strong_samples = 160;
        c.rate.weak_samples = 200;
        c
    }

    #[test]
    fn units_respect_block_boundaries() {
        let u = units(100, 130, 16);
        assert_eq!(u.first().unwrap().0, 0);
        assert_eq!(u.last().unwrap().1, 130);
        for w in u.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        for &(lo, hi, b) in &u {
            if hi <= 100 {
                assert!(lo >= b * 100 / 16 && hi <= (b + 1) * 100 / 16);
            } else {
                assert_eq!(b, usize::MAX);
            }
        }
    }

    #[test]
    fn constant_test_function_has_zero_weak_error() {
        let mut c = small();
        c.rate.test_function = TestFunctionKind::Constant;
        let w = weak_rate_experiment(&c).unwrap();
        assert!(w.table.rows.iter().all(|r| r.error == 0.0 && r.stderr == 0.0));
        assert!(w.fit.is_err());
    }

    // B independent of y and F independent of x: the multiscale slow
    // equation is the averaged one, so coupled paths agree to rounding.
    #[test]
    fn decoupled_system_has_no_averaging_error() {
        let mut c = small();
        c.problem.a = 0.0;
        c.problem.b1 = 0.0;
        c.rate.epsilons = vec![1.0, 0.5, 0.25];
        let out = run_ladder(
            &c,
            LadderPlan {
                strong_samples: 64,
                weak_samples: 64,
                coupled: true,
            },
        )
        .unwrap();
        for r in out.strong.unwrap().table.rows.iter().chain(&out.weak.unwrap().table.rows) {
            assert!(r.error < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn ladder_is_deterministic_across_thread_counts() {
        let c = small();
        let a = with_threads(1, || strong_rate_experiment(&c)).unwrap().unwrap();
        let b = with_threads(3, || strong_rate_experiment(&c)).unwrap().unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.table.rows.len(), 3);
        assert!(a.table.rows.iter().all(|r| r.n_effective == 160 && r.aborted == 0));
    }

    #[test]
    fn strong_error_shrinks_with_epsilon_when_coupled() {
        let c = small();
        let s = strong_rate_experiment(&c).unwrap();
        let rows = &s.table.rows;
        assert!(rows[0].error > rows[2].error, "{rows:?}");
        let mut u = c.clone();
        u.rate.coupled = false;
        let s_u = strong_rate_experiment(&u).unwrap();
        assert_eq!(s_u.name, "strong-rate-uncoupled");
        assert!(s_u.table.rows[2].error > rows[0].error);
    }

    #[test]
    fn fit_needs_three_rungs() {
        let mut c = small();
        c.rate.epsilons = vec![0.25];
        let s = strong_rate_experiment(&c).unwrap();
        assert!(s.fit.unwrap_err().contains(">= 3"));
    }

    #[test]
    fn galerkin_top_rung_is_exact_and_noise_off_matches_tail() {
        let mut c = small();
        c.galerkin.coefficients = CoefficientKind::Linear;
        c.galerkin.m_ladder = vec![2, 4, 8];
        c.galerkin.samples = 64;
        let out = galerkin_convergence_experiment(&c).unwrap();
        assert_eq!(out.rows.last().unwrap().error, 0.0);
        // with noise and coupling off each slow mode is pure heat flow, so only
        // the initial-data tail sum_{k>m} x_k^2 e^{-2 lambda_k T} matters
        (c.problem.a, c.problem.b0, c.problem.b1) = (0.0, 0.0, 0.0);
        c.noise.slow_c = 0.0;
        c.noise.fast_c = 0.0;
        c.integrator.t_end = 0.0625;
        c.problem.x0 = (0..8).map(|k| 0.5f64.powi(k)).collect();
        c.problem.m = 8;
        let out = galerkin_convergence_experiment(&c).unwrap();
        for row in &out.rows[..2] {
            let tail: f64 = (row.m..8)
                .map(|k| {
                    let l = std::f64::consts::PI.powi(2) * ((k + 1) as f64).powi(2);
                    0.25f64.powi(k as i32) * (-2.0 * l * 0.0625).exp()
                })
                .sum::<f64>()
                .sqrt();
            assert!((row.error / tail - 1.0).abs() < 1e-9, "m = {}: {} vs {tail}", row.m, row.error);
            assert_eq!(row.stderr, 0.0);
        }
        assert!(out.strictly_decreasing(), "{out:?}");
    }

    #[test]
    fn test_functions() {
        assert_eq!(TestFunction::Constant.eval(&[3.0]), 1.0);
        assert!((TestFunction::Gauss.eval(&[3.0, 4.0]) - (-12.5f64).exp()).abs() < 1e-15);
        assert!((TestFunction::Cos(vec![1.0, 0.0]).eval(&[0.5, 9.0]) - 0.5f64.cos()).abs() < 1e-15);
    }
}
