//! Exponential Euler schemes. The stiff linear part and the stochastic
//! convolution are integrated exactly (the latter in law); only the drift is
//! frozen over a step.
//!
//! Multiscale macro step of length `h` with `n` fast substeps `d = h / n`:
//!
//! ```text
//! for j in 0..n:
//!     Bsum += B(x, y)
//!     y_k <- e^{-lambda_k d/eps} y_k + (1 - e^{-lambda_k d/eps}) / lambda_k * F_k(x, y) + fast increment
//! x_k <- e^{-lambda_k h} x_k + (1 - e^{-lambda_k h}) / lambda_k * (Bsum_k / n) + slow increment
//! ```
//!
//! `x` is held at its step-start value during the substeps.

use crate::error::{check_len, Error, Result};
use crate::spectral::SpectralField;
use crate::stable_noise::NoiseSource;

use super::{Problem, SlowFastState};

/// States on the saved time grid `0, h, 2h, ..., T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&S> {
        self.states.last()
    }
}

/// Averaged drift `Bbar` as seen by the averaged-equation integrator.
pub trait AveragedDrift: Sync {
    fn bbar(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
}

/// Closed-form `Bbar` supplied by the coefficients.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticBbar<'a> {
    problem: &'a Problem,
}

impl<'a> AnalyticBbar<'a> {
    pub fn new(problem: &'a Problem) -> Result<Self> {
        if problem.coeffs().has_analytic_bbar() {
            Ok(Self { problem })
        } else {
            Err(Error::param("bbar", "coefficients have no closed-form averaged drift"))
        }
    }
}

impl AveragedDrift for AnalyticBbar<'_> {
    fn bbar(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.problem.coeffs().analytic_bbar(self.problem.spectrum(), x, out);
        Ok(())
    }
}

/// Number of macro steps covering `[0, t_end]`; `h` must divide `t_end`.
pub fn step_count(t_end: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::param("h", format!("step must be positive, got {h}")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::param("T", format!("horizon must be nonnegative, got {t_end}")));
    }
    let n = (t_end / h).round();
    if (n * h - t_end).abs() > 1e-9 * t_end.max(h) {
        return Err(Error::param("h", format!("step {h} does not divide horizon {t_end}")));
    }
    Ok(n as usize)
}

/// `e^{-lambda len}` and `(1 - e^{-lambda len}) / lambda` per mode.
#[derive(Debug, Clone)]
struct Kernel {
    decay: Vec<f64>,
    gain: Vec<f64>,
}

impl Kernel {
    fn new(eigenvalues: &[f64], len: f64) -> Self {
        let decay = eigenvalues.iter().map(|l| (-l * len).exp()).collect();
        let gain = eigenvalues.iter().map(|l| -(-l * len).exp_m1() / l).collect();
        Self { decay, gain }
    }

    #[inline]
    fn apply(&self, state: &mut [f64], drift: &[f64], noise: &[f64]) {
        for k in 0..state.len() {
            state[k] = self.decay[k] * state[k] + self.gain[k] * drift[k] + noise[k];
        }
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|a| a.is_finite())
}

/// Reusable macro-step engine for the multiscale system.
#[derive(Debug)]
pub struct MultiscaleStepper<'p> {
    problem: &'p Problem,
    n_sub: usize,
    tau: f64,
    h: f64,
    slow: Kernel,
    fast: Kernel,
    b: Vec<f64>,
    f: Vec<f64>,
    bsum: Vec<f64>,
    incr: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'p> MultiscaleStepper<'p> {
    pub fn new(problem: &'p Problem, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::param("h", format!("step must be positive, got {h}")));
        }
        let m = problem.m();
        let n_sub = problem.fast_substeps(h);
        let delta = h / n_sub as f64;
        let tau = delta / problem.epsilon();
        let eig = problem.spectrum().eigenvalues();
        Ok(Self {
            problem,
            n_sub,
            tau,
            h,
            slow: Kernel::new(eig, h),
            fast: Kernel::new(eig, tau),
            b: vec![0.0; m],
            f: vec![0.0; m],
            bsum: vec![0.0; m],
            incr: vec![0.0; m],
            scratch: Vec::new(),
        })
    }

    pub fn substeps(&self) -> usize {
        self.n_sub
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Advances `(x, y)` by one macro step, consuming slow increment `step`
    /// and fast increments `step * n_sub .. (step + 1) * n_sub`.
    pub fn advance<N: NoiseSource + ?Sized>(
        &mut self,
        x: &mut [f64],
        y: &mut [f64],
        step: u64,
        noise: &mut N,
    ) -> Result<()> {
        let coeffs = self.problem.coeffs();
        self.bsum.fill(0.0);
        let base = step * self.n_sub as u64;
        for j in 0..self.n_sub {
            coeffs.eval(x, y, &mut self.b, &mut self.f, &mut self.scratch);
            for (s, b) in self.bsum.iter_mut().zip(&self.b) {
                *s += b;
            }
            noise.fast_increment(base + j as u64, self.tau, &mut self.incr);
            self.fast.apply(y, &self.f, &self.incr);
        }
        let inv = 1.0 / self.n_sub as f64;
        for s in self.bsum.iter_mut() {
            *s *= inv;
        }
        noise.slow_increment(step, self.h, &mut self.incr);
        self.slow.apply(x, &self.bsum, &self.incr);
        if !all_finite(x) || !all_finite(y) {
            return Err(Error::NonFinite {
                what: "multiscale step",
                step: step as usize,
            });
        }
        Ok(())
    }
}

/// Averaged equation `dX = [A X + Bbar(X)] dt + dL`.
pub struct AveragedStepper<'p, 'd> {
    bbar: &'d dyn AveragedDrift,
    h: f64,
    slow: Kernel,
    drift: Vec<f64>,
    incr: Vec<f64>,
    _problem: &'p Problem,
}

impl<'p, 'd> AveragedStepper<'p, 'd> {
    pub fn new(problem: &'p Problem, bbar: &'d dyn AveragedDrift, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::param("h", format!("step must be positive, got {h}")));
        }
        let m = problem.m();
        Ok(Self {
            bbar,
            h,
            slow: Kernel::new(problem.spectrum().eigenvalues(), h),
            drift: vec![0.0; m],
            incr: vec![0.0; m],
            _problem: problem,
        })
    }

    pub fn advance<N: NoiseSource + ?Sized>(&mut self, x: &mut [f64], step: u64, noise: &mut N) -> Result<()> {
        self.bbar.bbar(x, &mut self.drift)?;
        noise.slow_increment(step, self.h, &mut self.incr);
        self.slow.apply(x, &self.drift, &self.incr);
        if !all_finite(x) {
            return Err(Error::NonFinite {
                what: "averaged step",
                step: step as usize,
            });
        }
        Ok(())
    }
}

/// Frozen equation `dY = [A Y + F(x, Y)] dt + dZ` at fixed `x`, in its own
/// time (no epsilon).
#[derive(Debug)]
pub struct FrozenStepper<'p> {
    problem: &'p Problem,
    h: f64,
    kernel: Kernel,
    f: Vec<f64>,
    incr: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'p> FrozenStepper<'p> {
    pub fn new(problem: &'p Problem, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::param("h", format!("step must be positive, got {h}")));
        }
        let m = problem.m();
        Ok(Self {
            problem,
            h,
            kernel: Kernel::new(problem.spectrum().eigenvalues(), h),
            f: vec![0.0; m],
            incr: vec![0.0; m],
            scratch: Vec::new(),
        })
    }

    pub fn advance<N: NoiseSource + ?Sized>(
        &mut self,
        x: &[f64],
        y: &mut [f64],
        step: u64,
        noise: &mut N,
    ) -> Result<()> {
        self.problem.coeffs().fast_drift(x, y, &mut self.f, &mut self.scratch);
        noise.fast_increment(step, self.h, &mut self.incr);
        self.kernel.apply(y, &self.f, &self.incr);
        if !all_finite(y) {
            return Err(Error::NonFinite {
                what: "frozen step",
                step: step as usize,
            });
        }
        Ok(())
    }

    /// `B(x, y)` for observers that integrate the slow drift along the path.
    pub fn slow_drift(&mut self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.problem.coeffs().slow_drift(x, y, out, &mut self.scratch);
    }
}

/// One macro step of the multiscale scheme from `state`, as macro step
/// number `step` of the noise path.
pub fn step_multiscale<N: NoiseSource + ?Sized>(
    problem: &Problem,
    state: &SlowFastState,
    h: f64,
    step: u64,
    noise: &mut N,
) -> Result<SlowFastState> {
    check_len(problem.m(), state.x.m())?;
    check_len(problem.m(), state.y.m())?;
    let mut stepper = MultiscaleStepper::new(problem, h)?;
    let mut x = state.x.coeffs().to_vec();
    let mut y = state.y.coeffs().to_vec();
    stepper.advance(&mut x, &mut y, step, noise)?;
    Ok(SlowFastState {
        x: SpectralField::new(problem.spectrum().clone(), x)?,
        y: SpectralField::new(problem.spectrum().clone(), y)?,
        t: state.t + h,
    })
}

/// Runs the multiscale system over `[0, t_end]`, calling `observe(i, x, y)`
/// at every saved time `i h` including `i = 0`.
pub fn simulate_multiscale_with<N, O>(
    problem: &Problem,
    x0: &[f64],
    y0: &[f64],
    t_end: f64,
    h: f64,
    noise: &mut N,
    mut observe: O,
) -> Result<()>
where
    N: NoiseSource + ?Sized,
    O: FnMut(usize, &[f64], &[f64]),
{
    check_len(problem.m(), x0.len())?;
    check_len(problem.m(), y0.len())?;
    let n = step_count(t_end, h)?;
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    observe(0, &x, &y);
    if n == 0 {
        return Ok(());
    }
    let mut stepper = MultiscaleStepper::new(problem, h)?;
    for i in 0..n {
        stepper.advance(&mut x, &mut y, i as u64, noise)?;
        observe(i + 1, &x, &y);
    }
    Ok(())
}

pub fn simulate_multiscale<N: NoiseSource + ?Sized>(
    problem: &Problem,
    x0: &SpectralField,
    y0: &SpectralField,
    t_end: f64,
    h: f64,
    noise: &mut N,
) -> Result<Trajectory<SlowFastState>> {
    let spectrum = problem.spectrum().clone();
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
    };
    simulate_multiscale_with(problem, x0.coeffs(), y0.coeffs(), t_end, h, noise, |i, x, y| {
        traj.times.push(i as f64 * h);
        traj.states.push(SlowFastState {
            x: SpectralField::from_parts_unchecked(spectrum.clone(), x.to_vec()),
            y: SpectralField::from_parts_unchecked(spectrum.clone(), y.to_vec()),
            t: i as f64 * h,
        });
    })?;
    Ok(traj)
}

/// Frozen-equation path; fast increment `i` drives step `i`.
pub fn simulate_frozen_with<N, O>(
    problem: &Problem,
    x_frozen: &[f64],
    y0: &[f64],
    t_end: f64,
    h: f64,
    noise: &mut N,
    mut observe: O,
) -> Result<()>
where
    N: NoiseSource + ?Sized,
    O: FnMut(usize, &[f64]),
{
    check_len(problem.m(), x_frozen.len())?;
    check_len(problem.m(), y0.len())?;
    let n = step_count(t_end, h)?;
    let mut y = y0.to_vec();
    observe(0, &y);
    if n == 0 {
        return Ok(());
    }
    let mut stepper = FrozenStepper::new(problem, h)?;
    for i in 0..n {
        stepper.advance(x_frozen, &mut y, i as u64, noise)?;
        observe(i + 1, &y);
    }
    Ok(())
}

pub fn simulate_frozen<N: NoiseSource + ?Sized>(
    problem: &Problem,
    x_frozen: &SpectralField,
    y0: &SpectralField,
    t_end: f64,
    h: f64,
    noise: &mut N,
) -> Result<Trajectory<SpectralField>> {
    let spectrum = problem.spectrum().clone();
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
    };
    simulate_frozen_with(problem, x_frozen.coeffs(), y0.coeffs(), t_end, h, noise, |i, y| {
        traj.times.push(i as f64 * h);
        traj.states
            .push(SpectralField::from_parts_unchecked(spectrum.clone(), y.to_vec()));
    })?;
    Ok(traj)
}

/// Averaged-equation path. Given the same noise source (same stream key) as
/// a multiscale run, it consumes the identical slow increments.
pub fn simulate_averaged_with<N, O>(
    problem: &Problem,
    bbar: &dyn AveragedDrift,
    x0: &[f64],
    t_end: f64,
    h: f64,
    noise: &mut N,
    mut observe: O,
) -> Result<()>
where
    N: NoiseSource + ?Sized,
    O: FnMut(usize, &[f64]),
{
    check_len(problem.m(), x0.len())?;
    let n = step_count(t_end, h)?;
    let mut x = x0.to_vec();
    observe(0, &x);
    if n == 0 {
        return Ok(());
    }
    let mut stepper = AveragedStepper::new(problem, bbar, h)?;
    for i in 0..n {
        stepper.advance(&mut x, i as u64, noise)?;
        observe(i + 1, &x);
    }
    Ok(())
}

pub fn simulate_averaged<N: NoiseSource + ?Sized>(
    problem: &Problem,
    bbar: &dyn AveragedDrift,
    x0: &SpectralField,
    t_end: f64,
    h: f64,
    noise: &mut N,
) -> Result<Trajectory<SpectralField>> {
    let spectrum = problem.spectrum().clone();
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
    };
    simulate_averaged_with(problem, bbar, x0.coeffs(), t_end, h, noise, |i, x| {
        traj.times.push(i as f64 * h);
        traj.states
            .push(SpectralField::from_parts_unchecked(spectrum.clone(), x.to_vec()));
    })?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::super::{LinearBenchmark, SubstepRule};
    use super::*;
    use crate::rng::SeededStream;
    use crate::spectral::SpectrumSpec;
    use crate::stable_noise::{
        convolution_increment_scale, empirical_cf, DecayModel, NoiseContext, Recorder, Silent,
        StableNoiseSpec, StreamNoise,
    };
    use std::sync::Arc;

    fn problem(m: usize, lin: LinearBenchmark, eps: f64, alpha: f64) -> Problem {
        let s = Arc::new(SpectrumSpec::dirichlet_laplacian_1d(m).unwrap());
        let noise = StableNoiseSpec::from_decay(
            alpha,
            m,
            DecayModel::PowerLaw { c: 1.0, rho: 2.0 },
            DecayModel::PowerLaw { c: 1.0, rho: 1.0 },
        )
        .unwrap();
        Problem::new(s, Arc::new(lin), noise, eps).unwrap()
    }

    fn zero(m: usize) -> LinearBenchmark {
        LinearBenchmark::new(m, 0.0, 0.0, 0.0, 0.0).unwrap()
    }

    // 2x2 matrix exponential by scaling and squaring of a degree-20 Taylor
    // polynomial; independent of the exponential-integrator algebra.
    fn expm2(a: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
        let norm = a.iter().flatten().map(|v| v.abs()).sum::<f64>() * t;
        let s = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let scale = t / 2f64.powi(s);
        let m = [[a[0][0] * scale, a[0][1] * scale], [a[1][0] * scale, a[1][1] * scale]];
        let mul = |p: [[f64; 2]; 2], q: [[f64; 2]; 2]| {
            let mut r = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    r[i][j] = p[i][0] * q[0][j] + p[i][1] * q[1][j];
                }
            }
            r
        };
        let mut result = [[1.0, 0.0], [0.0, 1.0]];
        let mut term = result;
        for k in 1..=20 {
            term = mul(term, m);
            for i in 0..2 {
                for j in 0..2 {
                    term[i][j] /= k as f64;
                    result[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..s {
            result = mul(result, result);
        }
        result
    }

    fn exact_linear_flow(p: &Problem, lin: &LinearBenchmark, x: &[f64], y: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let eps = p.epsilon();
        let mut xo = vec![0.0; x.len()];
        let mut yo = vec![0.0; y.len()];
        for k in 0..x.len() {
            let l = p.spectrum().eigenvalues()[k];
            let a = [[-l + lin.b0, lin.b1], [lin.a / eps, (-l - lin.b) / eps]];
            let e = expm2(a, t);
            xo[k] = e[0][0] * x[k] + e[0][1] * y[k];
            yo[k] = e[1][0] * x[k] + e[1][1] * y[k];
        }
        (xo, yo)
    }

    #[test]
    fn expm_oracle_sanity() {
        let e = expm2([[-2.0, 0.0], [0.0, -3.0]], 0.7);
        assert!((e[0][0] - (-1.4f64).exp()).abs() < 1e-14);
        assert!((e[1][1] - (-2.1f64).exp()).abs() < 1e-14);
        let r = expm2([[0.0, 1.0], [-1.0, 0.0]], 0.3);
        assert!((r[0][0] - 0.3f64.cos()).abs() < 1e-14 && (r[0][1] - 0.3f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn zero_drift_zero_noise_is_pure_decay() {
        let eps = 0.1;
        let p = problem(4, zero(4), eps, 1.5);
        let x0 = p.field(vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let y0 = p.field(vec![0.3, 1.0, -1.0, 0.2]).unwrap();
        let state = SlowFastState::new(&p, x0.clone(), y0.clone(), 0.0).unwrap();
        let h = 0.01;
        let next = step_multiscale(&p, &state, h, 0, &mut Silent).unwrap();
        for k in 0..4 {
            let l = p.spectrum().eigenvalues()[k];
            assert!((next.x.coeffs()[k] - (-l * h).exp() * x0.coeffs()[k]).abs() < 1e-14);
            assert!((next.y.coeffs()[k] - (-l * h / eps).exp() * y0.coeffs()[k]).abs() < 1e-14);
        }
        assert_eq!(next.t, h);
        assert!(step_multiscale(&p, &state, 0.0, 0, &mut Silent).is_err());
        assert!(step_multiscale(&p, &state, -1.0, 0, &mut Silent).is_err());
    }

    #[test]
    fn zero_drift_damping_is_monotone_per_mode() {
        let p = problem(6, zero(6), 0.05, 1.7);
        let x0 = vec![1.0, -1.0, 2.0, -2.0, 0.5, 4.0];
        let mut prev_x = x0.clone();
        let mut prev_y = x0.clone();
        simulate_multiscale_with(&p, &x0, &x0, 1.0, 1.0 / 64.0, &mut Silent, |i, x, y| {
            if i > 0 {
                for k in 0..6 {
                    assert!(x[k].abs() <= prev_x[k].abs());
                    assert!(y[k].abs() <= prev_y[k].abs());
                }
            }
            prev_x.copy_from_slice(x);
            prev_y.copy_from_slice(y);
        })
        .unwrap();
    }

    // Local defect of one macro step against the exact linear flow is O(h^2).
    #[test]
    fn linear_step_defect_is_second_order() {
        let lin = LinearBenchmark::with_defaults(3);
        let p = problem(3, lin, 1.0, 1.5).with_substeps(SubstepRule::Fixed(1)).unwrap();
        let x0 = p.field(vec![1.0, 0.5, -0.3]).unwrap();
        let y0 = p.field(vec![-0.4, 0.2, 0.1]).unwrap();
        let state = SlowFastState::new(&p, x0.clone(), y0.clone(), 0.0).unwrap();
        let defect = |h: f64| {
            let got = step_multiscale(&p, &state, h, 0, &mut Silent).unwrap();
            let (xe, ye) = exact_linear_flow(&p, &lin, x0.coeffs(), y0.coeffs(), h);
            let dx: f64 = got.x.coeffs().iter().zip(&xe).map(|(a, b)| (a - b).powi(2)).sum();
            let dy: f64 = got.y.coeffs().iter().zip(&ye).map(|(a, b)| (a - b).powi(2)).sum();
            (dx + dy).sqrt()
        };
        let (d1, d2, d3) = (defect(0.002), defect(0.001), defect(0.0005));
        let (r1, r2) = (d1 / d2, d2 / d3);
        assert!((3.3..4.7).contains(&r1), "ratio {r1}");
        assert!((3.3..4.7).contains(&r2), "ratio {r2}");
    }

    #[test]
    fn averaged_without_drift_or_noise_decays() {
        struct ZeroBbar;
        impl AveragedDrift for ZeroBbar {
            fn bbar(&self, _: &[f64], out: &mut [f64]) -> Result<()> {
                out.fill(0.0);
                Ok(())
            }
        }
        let p = problem(3, zero(3), 0.1, 1.5);
        let x0 = p.field(vec![1.0, 1.0, 1.0]).unwrap();
        let traj = simulate_averaged(&p, &ZeroBbar, &x0, 0.5, 0.05, &mut Silent).unwrap();
        assert_eq!(traj.len(), 11);
        let last = traj.last().unwrap();
        for k in 0..3 {
            let l = p.spectrum().eigenvalues()[k];
            assert!((last.coeffs()[k] - (-l * 0.5).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn averaged_linear_step_defect_is_second_order() {
        let lin = LinearBenchmark::with_defaults(3);
        let p = problem(3, lin, 1.0, 1.5);
        let bbar = AnalyticBbar::new(&p).unwrap();
        let x0 = vec![1.0, -0.5, 0.25];
        let defect = |h: f64| {
            let mut x = x0.clone();
            AveragedStepper::new(&p, &bbar, h).unwrap().advance(&mut x, 0, &mut Silent).unwrap();
            // exact: scalar linear ODE per mode with rate -lambda + b0 + b1 a/(lambda + b)
            x.iter()
                .zip(&x0)
                .zip(p.spectrum().eigenvalues())
                .map(|((xn, x0), l)| {
                    let rate = -l + lin.b0 + lin.b1 * lin.a / (l + lin.b);
                    (xn - (rate * h).exp() * x0).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        };
        let r = defect(0.01) / defect(0.005);
        assert!((3.3..4.7).contains(&r), "ratio {r}");
    }

    #[test]
    fn horizon_zero_returns_initial_state() {
        let p = problem(2, LinearBenchmark::with_defaults(2), 0.1, 1.5);
        let x0 = p.field(vec![1.0, 2.0]).unwrap();
        let ctx = NoiseContext::new(p.noise(), p.spectrum()).unwrap();
        let mut src = StreamNoise::new(&ctx, SeededStream::new(1).key());
        let traj = simulate_multiscale(&p, &x0, &x0, 0.0, 0.01, &mut src).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states[0].x, x0);
        assert!(simulate_multiscale(&p, &x0, &x0, 1.0, 0.3, &mut src).is_err());
    }

    #[test]
    fn averaged_runs_are_deterministic() {
        let p = problem(4, LinearBenchmark::with_defaults(4), 0.1, 1.5);
        let bbar = AnalyticBbar::new(&p).unwrap();
        let x0 = p.field(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let ctx = NoiseContext::new(p.noise(), p.spectrum()).unwrap();
        let key = SeededStream::new(9).child(4).key();
        let a = simulate_averaged(&p, &bbar, &x0, 1.0, 1.0 / 128.0, &mut StreamNoise::new(&ctx, key)).unwrap();
        let b = simulate_averaged(&p, &bbar, &x0, 1.0, 1.0 / 128.0, &mut StreamNoise::new(&ctx, key)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coupled_runs_consume_identical_slow_increments() {
        let p = problem(4, LinearBenchmark::with_defaults(4), 0.05, 1.5);
        let bbar = AnalyticBbar::new(&p).unwrap();
        let ctx = NoiseContext::new(p.noise(), p.spectrum()).unwrap();
        let key = SeededStream::new(3).child(17).key();
        let x0 = vec![1.0, 0.0, 0.0, 0.0];
        let mut rec_ms = Recorder::new(StreamNoise::new(&ctx, key));
        let mut rec_av = Recorder::new(StreamNoise::new(&ctx, key));
        simulate_multiscale_with(&p, &x0, &[0.0; 4], 0.25, 1.0 / 64.0, &mut rec_ms, |_, _, _| {}).unwrap();
        simulate_averaged_with(&p, &bbar, &x0, 0.25, 1.0 / 64.0, &mut rec_av, |_, _| {}).unwrap();
        assert_eq!(rec_ms.slow_log.len(), 16);
        assert_eq!(rec_ms.slow_log, rec_av.slow_log);
        assert!(rec_av.fast_log.is_empty());
        assert_eq!(rec_ms.fast_log.len(), 16 * p.fast_substeps(1.0 / 64.0));
    }

    // With B = F = 0 one step from zero is exactly the stochastic convolution.
    #[test]
    fn one_step_law_with_zero_drift() {
        let alpha = 1.6;
        let eps = 0.2;
        let p = problem(3, zero(3), eps, alpha).with_substeps(SubstepRule::Fixed(1)).unwrap();
        let ctx = NoiseContext::new(p.noise(), p.spectrum()).unwrap();
        let h = 0.03;
        let n = 50_000;
        let mut xs = vec![Vec::new(); 3];
        let mut ys = vec![Vec::new(); 3];
        let zero3 = [0.0; 3];
        let mut stepper = MultiscaleStepper::new(&p, h).unwrap();
        for i in 0..n {
            let mut src = StreamNoise::new(&ctx, SeededStream::new(8).child(i as u64).key());
            let (mut x, mut y) = (zero3.to_vec(), zero3.to_vec());
            stepper.advance(&mut x, &mut y, 0, &mut src).unwrap();
            for k in 0..3 {
                xs[k].push(x[k]);
                ys[k].push(y[k]);
            }
        }
        for k in 0..3 {
            let l = p.spectrum().eigenvalues()[k];
            let sx = convolution_increment_scale(l, h, p.noise().slow_weights()[k], alpha);
            let sy = convolution_increment_scale(l, h / eps, p.noise().fast_weights()[k], alpha);
            for (samples, s) in [(&xs[k], sx), (&ys[k], sy)] {
                let us: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|v| v / s).collect();
                for c in empirical_cf(samples, &us).unwrap() {
                    let target = (-(s * c.u).powf(alpha)).exp();
                    assert!(c.within(target, 3.0), "mode {k}: {} vs {target}", c.mean);
                    assert!(c.imag.abs() <= 3.0 * c.imag_stderr);
                }
            }
        }
    }

    #[test]
    fn nonfinite_state_aborts_with_step() {
        let p = problem(2, LinearBenchmark::with_defaults(2), 0.1, 1.5);
        let mut x = vec![f64::INFINITY, 0.0];
        let mut y = vec![0.0, 0.0];
        let err = MultiscaleStepper::new(&p, 0.01)
            .unwrap()
            .advance(&mut x, &mut y, 7, &mut Silent)
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite { step: 7, .. }));
    }

    #[test]
    fn step_count_validation() {
        assert_eq!(step_count(1.0, 1.0 / 512.0).unwrap(), 512);
        assert_eq!(step_count(0.0, 0.1).unwrap(), 0);
        assert!(step_count(1.0, 0.3).is_err());
        assert!(step_count(1.0, 0.0).is_err());
        assert!(step_count(-1.0, 0.1).is_err());
    }
}
