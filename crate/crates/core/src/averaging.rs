//! Averaged drift, Poisson-equation solution and ergodicity measurements for
//! the frozen equation `dY = [A Y + F(x, Y)] dt + dZ`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::dynamics::{AnalyticBbar, AveragedDrift, FrozenStepper, Problem};
use crate::error::{check_len, Error, Result};
use crate::rng::{splitmix64, SeededStream, StreamKey};
use crate::spectral::l2;
use crate::stable_noise::{NoiseContext, StreamNoise};
use crate::stats::{block_means, bootstrap_mom, linear_fit, mean_stderr, median, robust_mean, Estimate};

const BOOTSTRAP_RESAMPLES: usize = 200;
const BOOTSTRAP_KEY: StreamKey = StreamKey(0x0B00_7575_7A9E_0001);

/// How an ergodic `Bbar` estimate is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbarKind {
    /// Closed form from the coefficients; no simulation.
    Analytic,
    /// Time average of `B(x, Y_t)` over `[T_b, T_b + T_a]` on each chain.
    ErgodicTimeAverage,
    /// `B(x, Y_{T_b})` across chains.
    Ensemble,
}

/// Frozen-chain parameters for `Bbar` estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BbarParams {
    pub kind: BbarKind,
    /// Burn-in `T_b`.
    pub burn_in: f64,
    /// Averaging window `T_a`.
    pub window: f64,
    /// Frozen-equation step `h_f`.
    pub h_f: f64,
    /// Independent chains `N_e`.
    pub chains: usize,
    /// Blocks for the standard error and the agreement check.
    pub blocks: usize,
}

impl BbarParams {
    /// `T_b = 8 / (lambda_1 - L_F)`, `T_a = 100 / (lambda_1 - L_F)`,
    /// `h_f = 0.01`, 1024 chains in 16 blocks.
    pub fn defaults_for(problem: &Problem) -> Self {
        let gap = problem.dissipativity_gap();
        Self {
            kind: BbarKind::ErgodicTimeAverage,
            burn_in: 8.0 / gap,
            window: 100.0 / gap,
            h_f: 0.01,
            chains: 1024,
            blocks: 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        positive("h_f", self.h_f)?;
        if self.burn_in < 0.0 || !self.burn_in.is_finite() {
            return Err(Error::param("burn_in", "must be nonnegative"));
        }
        if self.kind == BbarKind::ErgodicTimeAverage {
            positive("window", self.window)?;
        }
        if self.chains == 0 {
            return Err(Error::param("chains", "must be at least 1"));
        }
        if self.blocks < 2 {
            return Err(Error::param("blocks", "must be at least 2"));
        }
        if self.kind == BbarKind::Ensemble && self.chains < self.blocks {
            return Err(Error::param("chains", "ensemble estimates need at least one chain per block"));
        }
        Ok(())
    }
}

/// `Bbar(x)` per mode with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct BbarEstimate {
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Averaging units (chains, or chain-time blocks) behind the estimate.
    pub samples: usize,
    /// The early and late halves of the blocks disagree by more than 5 joint
    /// standard errors.
    pub non_converged: bool,
}

impl BbarEstimate {
    pub fn max_stderr(&self) -> f64 {
        self.stderr.iter().cloned().fold(0.0, f64::max)
    }
}

/// Combines per-unit values (rows) into a per-mode estimate: plain mean for
/// bounded `B`, median of block means otherwise.
fn combine_units(units: &[Vec<f64>], m: usize, blocks: usize, bounded: bool) -> Result<BbarEstimate> {
    let n = units.len();
    let blocks = blocks.min(n);
    let mut value = vec![0.0; m];
    let mut stderr = vec![0.0; m];
    let mut non_converged = false;
    let mut column = vec![0.0; n];
    for k in 0..m {
        for (c, u) in column.iter_mut().zip(units) {
            *c = u[k];
        }
        let means = block_means(&column, blocks);
        let est = if bounded {
            // jackknife over blocks reduces to the spread of block means
            let e = mean_stderr(&means)?;
            Estimate {
                value: column.iter().sum::<f64>() / n as f64,
                stderr: e.stderr,
            }
        } else {
            bootstrap_mom(&column, blocks, BOOTSTRAP_RESAMPLES, BOOTSTRAP_KEY)?
        };
        // early against late blocks: each half carries about twice the variance
        let half = blocks / 2;
        let centre = |v: &[f64]| {
            if bounded {
                v.iter().sum::<f64>() / v.len() as f64
            } else {
                median(v)
            }
        };
        if half > 0 && (centre(&means[..half]) - centre(&means[half..])).abs() > 5.0 * 2.0 * est.stderr {
            non_converged = true;
        }
        value[k] = est.value;
        stderr[k] = est.stderr;
    }
    Ok(BbarEstimate {
        value,
        stderr,
        samples: n,
        non_converged,
    })
}

/// Ergodic estimate of `Bbar(x)`. Chain `i` draws from `stream.child(i)` and
/// starts at `y = 0`. With fewer than two chains per block each chain's
/// window is split into contiguous time blocks.
pub fn estimate_bbar(problem: &Problem, x: &[f64], params: &BbarParams, stream: &SeededStream) -> Result<BbarEstimate> {
    check_len(problem.m(), x.len())?;
    params.validate()?;
    let m = problem.m();
    if params.kind == BbarKind::Analytic {
        let mut out = vec![0.0; m];
        AnalyticBbar::new(problem)?.bbar(x, &mut out)?;
        return Ok(BbarEstimate {
            value: out,
            stderr: vec![0.0; m],
            samples: 0,
            non_converged: false,
        });
    }
    let ctx = NoiseContext::new(problem.noise(), problem.spectrum())?;
    let h = params.h_f;
    let burn = (params.burn_in / h).round() as usize;
    let (window, per_chain) = match params.kind {
        BbarKind::ErgodicTimeAverage => {
            let per_chain = (2 * params.blocks).div_ceil(params.chains);
            let steps = ((params.window / h).round() as usize).max(per_chain);
            (steps, per_chain)
        }
        _ => (1, 1),
    };
    let units: Vec<Vec<f64>> = (0..params.chains)
        .into_par_iter()
        .map(|i| -> Result<Vec<Vec<f64>>> {
            let mut noise = StreamNoise::new(&ctx, stream.child(i as u64).key());
            let mut stepper = FrozenStepper::new(problem, h)?;
            let mut y = vec![0.0; m];
            let mut b = vec![0.0; m];
            for s in 0..burn {
                stepper.advance(x, &mut y, s as u64, &mut noise)?;
            }
            let mut out = Vec::with_capacity(per_chain);
            let mut acc = vec![0.0; m];
            let mut count = 0usize;
            for s in 0..window {
                let lo_next = (out.len() + 1) * window / per_chain;
                stepper.slow_drift(x, &y, &mut b);
                for (a, v) in acc.iter_mut().zip(&b) {
                    *a += v;
                }
                count += 1;
                if s + 1 == lo_next {
                    out.push(acc.iter().map(|a| a / count as f64).collect());
                    acc.fill(0.0);
                    count = 0;
                }
                if s + 1 < window {
                    stepper.advance(x, &mut y, (burn + s) as u64, &mut noise)?;
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let bounded = problem.coeffs().slow_bound().is_some();
    combine_units(&units, m, params.blocks, bounded)
}

/// Averaged drift for the averaged equation: analytic, or ergodic with a
/// cache keyed by `x` rounded to `1e-6`.
///
/// Ergodic entries draw from a stream derived from the quantized key, so a
/// cached value does not depend on which worker computed it first.
pub struct BbarOracle<'p> {
    problem: &'p Problem,
    params: BbarParams,
    root: SeededStream,
    cache: Mutex<HashMap<Vec<i64>, Arc<BbarEstimate>>>,
}

pub const BBAR_QUANTUM: f64 = 1e-6;

impl<'p> BbarOracle<'p> {
    pub fn analytic(problem: &'p Problem) -> Result<Self> {
        AnalyticBbar::new(problem)?;
        Ok(Self {
            problem,
            params: BbarParams {
                kind: BbarKind::Analytic,
                ..BbarParams::defaults_for(problem)
            },
            root: SeededStream::new(0),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn ergodic(problem: &'p Problem, params: BbarParams, root: SeededStream) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            problem,
            params,
            root,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn kind(&self) -> BbarKind {
        self.params.kind
    }

    pub fn params(&self) -> &BbarParams {
        &self.params
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.lock().map(|c| c.len()).unwrap_or(0)
    }

    fn quantize(x: &[f64]) -> Vec<i64> {
        x.iter().map(|v| (v / BBAR_QUANTUM).round() as i64).collect()
    }

    /// Estimate at `x` with standard errors; zero standard error when analytic.
    pub fn estimate(&self, x: &[f64]) -> Result<Arc<BbarEstimate>> {
        if self.params.kind == BbarKind::Analytic {
            return estimate_bbar(self.problem, x, &self.params, &self.root).map(Arc::new);
        }
        let key = Self::quantize(x);
        if let Some(hit) = self.cache.lock().expect("bbar cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let xq: Vec<f64> = key.iter().map(|&q| q as f64 * BBAR_QUANTUM).collect();
        let tag = key
            .iter()
            .fold(splitmix64(key.len() as u64), |h, &q| splitmix64(h ^ q as u64));
        let est = Arc::new(estimate_bbar(self.problem, &xq, &self.params, &self.root.child(tag))?);
        let mut cache = self.cache.lock().expect("bbar cache poisoned");
        Ok(cache.entry(key).or_insert(est).clone())
    }
}

impl AveragedDrift for BbarOracle<'_> {
    fn bbar(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if self.params.kind == BbarKind::Analytic {
            self.problem.coeffs().analytic_bbar(self.problem.spectrum(), x, out);
            return Ok(());
        }
        out.copy_from_slice(&self.estimate(x)?.value);
        Ok(())
    }
}

/// Parameters for the Poisson-solution quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiParams {
    /// Upper limit of the truncated time integral.
    pub t_max: f64,
    /// Frozen-equation samples.
    pub samples: usize,
    /// Quadrature and solver step.
    pub h_f: f64,
    pub blocks: usize,
    /// Constant `C` in the truncation bound.
    pub truncation_constant: f64,
}

impl PhiParams {
    /// `T_max = 12 / (lambda_1 - L_F)`, 4000 samples, `h_f = 0.01`, and the
    /// truncation constant set to the declared Lipschitz constant of `B`.
    pub fn defaults_for(problem: &Problem) -> Self {
        Self {
            t_max: 12.0 / problem.dissipativity_gap(),
            samples: 4000,
            h_f: 0.01,
            blocks: 16,
            truncation_constant: problem.coeffs().lip_b(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiEstimate {
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Bound on the neglected tail `int_{T_max}^inf`.
    pub truncation_bound: f64,
    /// Some mode's standard error exceeds the magnitude of its estimate.
    pub underpowered: bool,
}

/// `Phi(x, y) = int_0^T_max [E B(x, Y_t^{x,y}) - Bbar(x)] dt` by trapezoidal
/// quadrature along each frozen path; sample `i` uses `stream.child(i)`.
pub fn estimate_phi(
    problem: &Problem,
    x: &[f64],
    y: &[f64],
    bbar: &[f64],
    params: &PhiParams,
    stream: &SeededStream,
) -> Result<PhiEstimate> {
    let m = problem.m();
    check_len(m, x.len())?;
    check_len(m, y.len())?;
    check_len(m, bbar.len())?;
    if !(params.t_max > 0.0) || !(params.h_f > 0.0) {
        return Err(Error::param("t_max", "T_max and h_f must be positive"));
    }
    if params.samples < 2 * params.blocks {
        return Err(Error::param("samples", "need at least two samples per block"));
    }
    let ctx = NoiseContext::new(problem.noise(), problem.spectrum())?;
    let h = params.h_f;
    let steps = (params.t_max / h).round() as usize;
    let per_sample: Vec<Vec<f64>> = (0..params.samples)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut noise = StreamNoise::new(&ctx, stream.child(i as u64).key());
            let mut stepper = FrozenStepper::new(problem, h)?;
            let mut yy = y.to_vec();
            let mut b = vec![0.0; m];
            let mut integral = vec![0.0; m];
            for s in 0..=steps {
                stepper.slow_drift(x, &yy, &mut b);
                let w = if s == 0 || s == steps { 0.5 * h } else { h };
                for k in 0..m {
                    integral[k] += w * (b[k] - bbar[k]);
                }
                if s < steps {
                    stepper.advance(x, &mut yy, s as u64, &mut noise)?;
                }
            }
            Ok(integral)
        })
        .collect::<Result<_>>()?;
    let bounded = problem.coeffs().slow_bound().is_some();
    let est = combine_units(&per_sample, m, params.blocks, bounded)?;
    let rate = problem.dissipativity_gap() / 2.0;
    let truncation_bound =
        params.truncation_constant * (-rate * params.t_max).exp() * (1.0 + l2(x) + l2(y)) / rate;
    let underpowered = est.value.iter().zip(&est.stderr).any(|(v, s)| *s > v.abs());
    Ok(PhiEstimate {
        value: est.value,
        stderr: est.stderr,
        truncation_bound,
        underpowered,
    })
}

/// Real functional on the fast state with a declared Lipschitz constant.
pub trait LipschitzFunctional: Sync {
    fn eval(&self, y: &[f64]) -> f64;
    fn lipschitz(&self) -> f64;
}

/// `G(y) = y_k`.
#[derive(Debug, Clone, Copy)]
pub struct Coordinate(pub usize);

impl LipschitzFunctional for Coordinate {
    fn eval(&self, y: &[f64]) -> f64 {
        y[self.0]
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }
}

/// Log-linear decay fit of the ergodic gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub rate_stderr: f64,
    pub r2: f64,
    /// Indices of the time points above the noise floor.
    pub used: Vec<usize>,
}

/// Decay of `|E G(Y_t^{x,y}) - mu^x(G)|` along a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicityReport {
    pub times: Vec<f64>,
    pub gaps: Vec<f64>,
    pub gap_stderr: Vec<f64>,
    /// Stationary reference `mu^x(G)`.
    pub reference: Estimate,
    pub fit: Option<DecayFit>,
    /// `(lambda_1 - L_F) / 2`.
    pub bound_rate: f64,
    /// Fewer than three gaps clear the noise floor; decay is faster than the
    /// Monte Carlo resolution.
    pub unresolvable: bool,
}

impl ErgodicityReport {
    /// The bound holds when the fitted rate is at least `bound_rate - slack`,
    /// or when the decay is too fast to resolve.
    pub fn meets_bound(&self, slack: f64) -> bool {
        match &self.fit {
            Some(f) => f.rate >= self.bound_rate - slack,
            None => self.unresolvable,
        }
    }
}

/// Parameters for [`measure_ergodic_decay`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicParams {
    pub samples: usize,
    pub h_f: f64,
    pub blocks: usize,
    /// Burn-in and window of the independent stationary reference chains.
    pub reference_burn_in: f64,
    pub reference_window: f64,
}

impl ErgodicParams {
    pub fn defaults_for(problem: &Problem) -> Self {
        let gap = problem.dissipativity_gap();
        Self {
            samples: 4000,
            h_f: 0.005,
            blocks: 16,
            reference_burn_in: 8.0 / gap,
            reference_window: 20.0 / gap,
        }
    }
}

/// Runs `samples` frozen paths from `y`, records `E G(Y_t)` on `times` (which
/// must be multiples of `h_f`), and compares with a stationary reference from
/// independent chains. Gaps below three joint standard errors are excluded
/// from the fit.
pub fn measure_ergodic_decay(
    g: &dyn LipschitzFunctional,
    problem: &Problem,
    x: &[f64],
    y: &[f64],
    times: &[f64],
    params: &ErgodicParams,
    stream: &SeededStream,
) -> Result<ErgodicityReport> {
    let m = problem.m();
    check_len(m, x.len())?;
    check_len(m, y.len())?;
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
        return Err(Error::param("times", "must be nonempty, nonnegative and increasing"));
    }
    let h = params.h_f;
    let idx: Vec<usize> = times
        .iter()
        .map(|t| {
            let n = (t / h).round();
            if (n * h - t).abs() > 1e-9 * t.max(h) {
                Err(Error::param("times", format!("{t} is not a multiple of h_f = {h}")))
            } else {
                Ok(n as usize)
            }
        })
        .collect::<Result<_>>()?;
    let ctx = NoiseContext::new(problem.noise(), problem.spectrum())?;
    let last = *idx.last().expect("nonempty");
    let paths = stream.child(0);
    let values: Vec<Vec<f64>> = (0..params.samples)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut noise = StreamNoise::new(&ctx, paths.child(i as u64).key());
            let mut stepper = FrozenStepper::new(problem, h)?;
            let mut yy = y.to_vec();
            let mut out = Vec::with_capacity(idx.len());
            let mut next = 0;
            for s in 0..=last {
                while next < idx.len() && idx[next] == s {
                    out.push(g.eval(&yy));
                    next += 1;
                }
                if s < last {
                    stepper.advance(x, &mut yy, s as u64, &mut noise)?;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let refs = stream.child(1);
    let burn = (params.reference_burn_in / h).round() as usize;
    let window = ((params.reference_window / h).round() as usize).max(1);
    let reference_units: Vec<f64> = (0..params.samples)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut noise = StreamNoise::new(&ctx, refs.child(i as u64).key());
            let mut stepper = FrozenStepper::new(problem, h)?;
            let mut yy = vec![0.0; m];
            let mut acc = 0.0;
            for s in 0..burn + window {
                if s >= burn {
                    acc += g.eval(&yy);
                }
                stepper.advance(x, &mut yy, s as u64, &mut noise)?;
            }
            Ok(acc / window as f64)
        })
        .collect::<Result<_>>()?;
    let reference = robust_mean(&reference_units, params.blocks)?;

    let mut gaps = Vec::with_capacity(times.len());
    let mut gap_stderr = Vec::with_capacity(times.len());
    let mut column = vec![0.0; params.samples];
    for j in 0..times.len() {
        for (c, v) in column.iter_mut().zip(&values) {
            *c = v[j];
        }
        let e = robust_mean(&column, params.blocks)?;
        gaps.push((e.value - reference.value).abs());
        gap_stderr.push((e.stderr.powi(2) + reference.stderr.powi(2)).sqrt());
    }
    let used: Vec<usize> = (0..times.len())
        .filter(|&j| gaps[j] > 3.0 * gap_stderr[j] && gaps[j] > 0.0)
        .collect();
    let bound_rate = problem.dissipativity_gap() / 2.0;
    let (fit, unresolvable) = if used.len() >= 3 {
        let ts: Vec<f64> = used.iter().map(|&j| times[j]).collect();
        let ls: Vec<f64> = used.iter().map(|&j| gaps[j].ln()).collect();
        let f = linear_fit(&ts, &ls)?;
        (
            Some(DecayFit {
                rate: -f.slope,
                rate_stderr: f.slope_stderr,
                r2: f.r2,
                used,
            }),
            false,
        )
    } else {
        (None, true)
    };
    Ok(ErgodicityReport {
        times: times.to_vec(),
        gaps,
        gap_stderr,
        reference,
        fit,
        bound_rate,
        unresolvable,
    })
}

/// Draws `n` approximately stationary fast states at `x` by running chain `i`
/// of `stream.child(i)` from zero for `burn_in`.
pub fn sample_invariant(
    problem: &Problem,
    x: &[f64],
    n: usize,
    burn_in: f64,
    h_f: f64,
    stream: &SeededStream,
) -> Result<Vec<Vec<f64>>> {
    check_len(problem.m(), x.len())?;
    let ctx = NoiseContext::new(problem.noise(), problem.spectrum())?;
    let steps = (burn_in / h_f).round() as usize;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut noise = StreamNoise::new(&ctx, stream.child(i as u64).key());
            let mut stepper = FrozenStepper::new(problem, h_f)?;
            let mut y = vec![0.0; problem.m()];
            for s in 0..steps {
                stepper.advance(x, &mut y, s as u64, &mut noise)?;
            }
            Ok(y)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{LinearBenchmark, NemytskiiCoefficients};
    use crate::spectral::SpectrumSpec;
    use crate::stable_noise::{DecayModel, StableNoiseSpec};

    fn problem_with(coeffs: Arc<dyn crate::dynamics::Coefficients>, m: usize, alpha: f64) -> Problem {
        let s = Arc::new(SpectrumSpec::dirichlet_laplacian_1d(m).unwrap());
        let noise = StableNoiseSpec::from_decay(
            alpha,
            m,
            DecayModel::PowerLaw { c: 1.0, rho: 2.0 },
            DecayModel::PowerLaw { c: 1.0, rho: 1.0 },
        )
        .unwrap();
        Problem::new(s, coeffs, noise, 0.1).unwrap()
    }

    fn linear(m: usize) -> Problem {
        problem_with(Arc::new(LinearBenchmark::with_defaults(m)), m, 1.5)
    }

    fn e1(m: usize) -> Vec<f64> {
        let mut v = vec![0.0; m];
        v[0] = 1.0;
        v
    }

    #[test]
    fn analytic_kind_matches_formula() {
        let p = linear(4);
        let oracle = BbarOracle::analytic(&p).unwrap();
        let est = oracle.estimate(&e1(4)).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((est.value[0] - (0.5 + 1.0 / (pi2 + 1.0))).abs() < 1e-12);
        assert!((est.value[0] - 0.5920).abs() < 1e-4);
        assert_eq!(est.stderr, vec![0.0; 4]);
        assert_eq!(oracle.cached_entries(), 0);
    }

    #[test]
    fn ergodic_matches_analytic_at_e1() {
        let p = linear(4);
        let params = BbarParams::defaults_for(&p);
        let est = estimate_bbar(&p, &e1(4), &params, &SeededStream::new(21)).unwrap();
        let mut exact = vec![0.0; 4];
        AnalyticBbar::new(&p).unwrap().bbar(&e1(4), &mut exact).unwrap();
        for k in 0..4 {
            assert!(
                (est.value[k] - exact[k]).abs() <= 3.0 * est.stderr[k].max(1e-12),
                "mode {k}: {} vs {} (se {})",
                est.value[k],
                exact[k],
                est.stderr[k]
            );
        }
        assert!(est.max_stderr() <= 1e-2);
        assert!(!est.non_converged);
    }

    #[test]
    fn single_chain_uses_time_blocks() {
        let p = linear(2);
        let params = BbarParams {
            chains: 1,
            ..BbarParams::defaults_for(&p)
        };
        let est = estimate_bbar(&p, &e1(2), &params, &SeededStream::new(4)).unwrap();
        assert_eq!(est.samples, 32);
        assert!((est.value[0] - 0.592).abs() < 0.1);
    }

    #[test]
    fn odd_drift_averages_to_zero_at_origin() {
        let p = problem_with(Arc::new(NemytskiiCoefficients::default_benchmark(4).unwrap()), 4, 1.5);
        let params = BbarParams {
            chains: 64,
            ..BbarParams::defaults_for(&p)
        };
        let est = estimate_bbar(&p, &[0.0; 4], &params, &SeededStream::new(2)).unwrap();
        for k in 0..4 {
            assert!(est.value[k].abs() <= 3.0 * est.stderr[k], "mode {k}: {est:?}");
        }
    }

    #[test]
    fn nemytskii_estimate_is_seed_stable() {
        let p = problem_with(Arc::new(NemytskiiCoefficients::default_benchmark(4).unwrap()), 4, 1.5);
        let params = BbarParams {
            chains: 64,
            ..BbarParams::defaults_for(&p)
        };
        let a = estimate_bbar(&p, &e1(4), &params, &SeededStream::new(100)).unwrap();
        let b = estimate_bbar(&p, &e1(4), &params, &SeededStream::new(200)).unwrap();
        for k in 0..4 {
            let joint = (a.stderr[k].powi(2) + b.stderr[k].powi(2)).sqrt();
            assert!((a.value[k] - b.value[k]).abs() <= 3.0 * joint, "mode {k}");
        }
        assert!(a.value[0] > 0.1);
    }

    #[test]
    fn oracle_cache_is_keyed_by_quantized_state() {
        let p = problem_with(Arc::new(NemytskiiCoefficients::default_benchmark(2).unwrap()), 2, 1.5);
        let params = BbarParams {
            chains: 16,
            window: 1.0,
            ..BbarParams::defaults_for(&p)
        };
        let oracle = BbarOracle::ergodic(&p, params, SeededStream::new(1)).unwrap();
        let a = oracle.estimate(&[0.3, 0.1]).unwrap();
        let b = oracle.estimate(&[0.3 + 1e-9, 0.1]).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(oracle.cached_entries(), 1);
        oracle.estimate(&[0.3 + 1e-5, 0.1]).unwrap();
        assert_eq!(oracle.cached_entries(), 2);
        let fresh = BbarOracle::ergodic(&p, params, SeededStream::new(1)).unwrap();
        assert_eq!(*fresh.estimate(&[0.3, 0.1]).unwrap(), *a);
    }

    #[test]
    fn bbar_is_lipschitz_on_random_pairs() {
        let p = problem_with(Arc::new(NemytskiiCoefficients::default_benchmark(3).unwrap()), 3, 1.5);
        let params = BbarParams {
            chains: 32,
            ..BbarParams::defaults_for(&p)
        };
        let lip = p.coeffs().lip_b();
        let cap = lip * (1.0 + lip / p.dissipativity_gap());
        let mut rng = SeededStream::new(77).rng();
        for trial in 0..6 {
            let x1: Vec<f64> = (0..3).map(|_| 2.0 * rng.next_normal()).collect();
            let x2: Vec<f64> = x1.iter().map(|v| v + 0.5 * rng.next_normal()).collect();
            let common = SeededStream::new(500 + trial);
            let a = estimate_bbar(&p, &x1, &params, &common).unwrap();
            let b = estimate_bbar(&p, &x2, &params, &common).unwrap();
            let dx = l2(&x1.iter().zip(&x2).map(|(u, v)| u - v).collect::<Vec<_>>());
            let db: Vec<f64> = a.value.iter().zip(&b.value).map(|(u, v)| u - v).collect();
            let se = (a.max_stderr().powi(2) + b.max_stderr().powi(2)).sqrt() * 3.0_f64.sqrt();
            assert!(l2(&db) <= cap * dx + 3.0 * se, "trial {trial}: {} > {}", l2(&db), cap * dx);
        }
    }

    #[test]
    fn phi_linear_closed_form() {
        let p = linear(3);
        let lin = LinearBenchmark::with_defaults(3);
        let x = [0.0; 3];
        let y = e1(3);
        let mut bbar = vec![0.0; 3];
        AnalyticBbar::new(&p).unwrap().bbar(&x, &mut bbar).unwrap();
        let params = PhiParams::defaults_for(&p);
        let est = estimate_phi(&p, &x, &y, &bbar, &params, &SeededStream::new(6)).unwrap();
        let l1 = std::f64::consts::PI.powi(2);
        let exact = lin.b1 / (l1 + lin.b);
        assert!((exact - 0.0920).abs() < 1e-4);
        // the trapezoid-on-Euler-mean bias at h_f = 0.01 is about 4e-4
        let tol = 3.0 * est.stderr[0] + 1e-3;
        assert!((est.value[0] - exact).abs() <= tol, "{} vs {exact}", est.value[0]);
        assert!(est.truncation_bound < 1e-2);
        assert!(!est.underpowered || est.value[1].abs() < est.stderr[1]);
    }

    #[test]
    fn phi_centered_under_invariant_law() {
        let p = linear(2);
        let x = e1(2);
        let mut bbar = vec![0.0; 2];
        AnalyticBbar::new(&p).unwrap().bbar(&x, &mut bbar).unwrap();
        let ys = sample_invariant(&p, &x, 256, 2.0, 0.01, &SeededStream::new(3)).unwrap();
        let params = PhiParams {
            samples: 32,
            ..PhiParams::defaults_for(&p)
        };
        let phis: Vec<f64> = ys
            .iter()
            .enumerate()
            .map(|(i, y)| estimate_phi(&p, &x, y, &bbar, &params, &SeededStream::new(1000 + i as u64)).unwrap().value[0])
            .collect();
        let e = robust_mean(&phis, 16).unwrap();
        assert!(e.value.abs() <= 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn decay_rate_matches_mean_flow() {
        let p = linear(4);
        let mut y = vec![0.0; 4];
        y[0] = 5.0;
        let times: Vec<f64> = (0..=16).map(|i| i as f64 * 0.025).collect();
        let params = ErgodicParams::defaults_for(&p);
        let r = measure_ergodic_decay(&Coordinate(0), &p, &[0.0; 4], &y, &times, &params, &SeededStream::new(8)).unwrap();
        let fit = r.fit.clone().unwrap();
        let exact = std::f64::consts::PI.powi(2) + 1.0;
        assert!((fit.rate - exact).abs() < 4.0 * fit.rate_stderr + 0.5, "{fit:?}");
        assert!(fit.r2 > 0.95);
        assert!(r.meets_bound(0.5));
        assert!((r.gaps[0] - (5.0 - r.reference.value).abs()).abs() < 1e-12);
    }

    #[test]
    fn stationary_start_shows_no_gap() {
        let p = linear(2);
        let times: Vec<f64> = (0..=4).map(|i| i as f64 * 0.1).collect();
        let params = ErgodicParams {
            samples: 2000,
            ..ErgodicParams::defaults_for(&p)
        };
        let r = measure_ergodic_decay(&Coordinate(0), &p, &[0.0; 2], &[0.0; 2], &times, &params, &SeededStream::new(12)).unwrap();
        for (g, s) in r.gaps.iter().zip(&r.gap_stderr).skip(1) {
            assert!(*g <= 4.0 * s, "{g} vs {s}");
        }
    }

    #[test]
    fn parameter_validation() {
        let p = linear(2);
        let mut params = BbarParams::defaults_for(&p);
        params.h_f = 0.0;
        assert!(estimate_bbar(&p, &[0.0; 2], &params, &SeededStream::new(0)).is_err());
        assert!(estimate_bbar(&p, &[0.0; 3], &BbarParams::defaults_for(&p), &SeededStream::new(0)).is_err());
        let times = [0.0, 0.0123];
        assert!(measure_ergodic_decay(
            &Coordinate(0),
            &p,
            &[0.0; 2],
            &[0.0; 2],
            &times,
            &ErgodicParams::defaults_for(&p),
            &SeededStream::new(0)
        )
        .is_err());
    }
}
