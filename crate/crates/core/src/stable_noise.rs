//! Rotationally symmetric alpha-stable sampling and the per-mode stochastic
//! convolutions that drive the integrators.
//!
//! Everything is normalized through the characteristic function
//! `E exp(i u L_t) = exp(-t |u|^alpha)`; the Levy measure constant is never
//! needed.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::rng::{SeededStream, StreamKey, StreamRng};
use crate::spectral::{SpectralField, SpectrumSpec};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::param(
            "alpha",
            format!("stability index must lie in (1, 2), got {alpha}"),
        ))
    }
}

/// Chambers-Mallows-Stuck sampler for the symmetric law with CF `exp(-|u|^alpha)`.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    alpha: f64,
    inv_alpha: f64,
    tail_exp: f64,
}

impl StableSampler {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            inv_alpha: 1.0 / alpha,
            tail_exp: (1.0 - alpha) / alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// One draw from two open uniforms: an angle and an exponential.
    #[inline]
    pub fn from_uniforms(&self, u_angle: f64, u_exp: f64) -> f64 {
        let v = PI * (u_angle - 0.5);
        let w = -u_exp.ln();
        let a = self.alpha;
        (a * v).sin() / v.cos().powf(self.inv_alpha)
            * ((v - a * v).cos() / w).powf(self.tail_exp)
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        let u = rng.next_open01();
        let e = rng.next_open01();
        self.from_uniforms(u, e)
    }
}

/// One standard symmetric alpha-stable draw (unit time, unit scale).
pub fn sample_standard_stable(alpha: f64, rng: &mut StreamRng) -> Result<f64> {
    Ok(StableSampler::new(alpha)?.sample(rng))
}

/// Increment `weight * (L_{t+h} - L_t)` of a scalar stable process; its scale
/// is `weight * h^{1/alpha}` by self-similarity.
pub fn sample_increment(alpha: f64, h: f64, weight: f64, rng: &mut StreamRng) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(Error::param("h", "must be nonnegative"));
    }
    let s = StableSampler::new(alpha)?;
    if h == 0.0 || weight == 0.0 {
        return Ok(0.0);
    }
    Ok(weight * h.powf(1.0 / alpha) * s.sample(rng))
}

/// Scale of `int_0^h e^{-lambda (h - s)} weight dL_s`, which is itself
/// symmetric alpha-stable: `weight * ((1 - e^{-alpha lambda h}) / (alpha lambda))^{1/alpha}`.
#[inline]
pub fn convolution_increment_scale(lambda: f64, h: f64, weight: f64, alpha: f64) -> f64 {
    debug_assert!(lambda > 0.0 && h >= 0.0);
    if h == 0.0 || weight == 0.0 {
        return 0.0;
    }
    let z = lambda * h;
    if z > 700.0 {
        weight * (1.0 / (alpha * lambda)).powf(1.0 / alpha)
    } else if z < 1e-12 {
        weight * h.powf(1.0 / alpha)
    } else {
        weight * (-(-alpha * z).exp_m1() / (alpha * lambda)).powf(1.0 / alpha)
    }
}

/// Which equation a noise stream drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseRole {
    Slow,
    Fast,
}

impl NoiseRole {
    fn tag(self) -> u32 {
        match self {
            NoiseRole::Slow => 1,
            NoiseRole::Fast => 2,
        }
    }
}

/// Parametric family a weight sequence was generated from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayModel {
    /// `w_k = c k^{-rho}`
    PowerLaw { c: f64, rho: f64 },
    /// Weights supplied directly.
    Custom,
}

impl DecayModel {
    fn weights(self, m: usize) -> Option<Vec<f64>> {
        match self {
            DecayModel::PowerLaw { c, rho } => {
                Some((1..=m).map(|k| c * (k as f64).powf(-rho)).collect())
            }
            DecayModel::Custom => None,
        }
    }
}

/// Stability index and per-mode weights of the cylindrical slow (`beta_k`)
/// and fast (`gamma_k`) noises.
#[derive(Debug, Clone, PartialEq)]
pub struct StableNoiseSpec {
    alpha: f64,
    slow_weights: Vec<f64>,
    fast_weights: Vec<f64>,
    slow_decay: DecayModel,
    fast_decay: DecayModel,
}

impl StableNoiseSpec {
    pub fn new(alpha: f64, slow_weights: Vec<f64>, fast_weights: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        check_len(slow_weights.len(), fast_weights.len())?;
        for (name, w) in [("slow_weights", &slow_weights), ("fast_weights", &fast_weights)] {
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::param(name, "weights must be finite and nonnegative"));
            }
        }
        Ok(Self {
            alpha,
            slow_weights,
            fast_weights,
            slow_decay: DecayModel::Custom,
            fast_decay: DecayModel::Custom,
        })
    }

    /// Weights from declared decay families, truncated at `m` modes.
    pub fn from_decay(alpha: f64, m: usize, slow: DecayModel, fast: DecayModel) -> Result<Self> {
        let sw = slow
            .weights(m)
            .ok_or_else(|| Error::param("slow_decay", "a parametric family is required"))?;
        let fw = fast
            .weights(m)
            .ok_or_else(|| Error::param("fast_decay", "a parametric family is required"))?;
        let mut spec = Self::new(alpha, sw, fw)?;
        spec.slow_decay = slow;
        spec.fast_decay = fast;
        Ok(spec)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> usize {
        self.slow_weights.len()
    }

    pub fn slow_weights(&self) -> &[f64] {
        &self.slow_weights
    }

    pub fn fast_weights(&self) -> &[f64] {
        &self.fast_weights
    }

    pub fn slow_decay(&self) -> DecayModel {
        self.slow_decay
    }

    pub fn fast_decay(&self) -> DecayModel {
        self.fast_decay
    }

    pub fn weights(&self, role: NoiseRole) -> &[f64] {
        match role {
            NoiseRole::Slow => &self.slow_weights,
            NoiseRole::Fast => &self.fast_weights,
        }
    }

    /// The first `m_target` modes, keeping the declared decay families.
    pub fn truncated(&self, m_target: usize) -> Result<Self> {
        if m_target == 0 || m_target > self.m() {
            return Err(Error::param("m_target", "outside the retained modes"));
        }
        Ok(Self {
            alpha: self.alpha,
            slow_weights: self.slow_weights[..m_target].to_vec(),
            fast_weights: self.fast_weights[..m_target].to_vec(),
            slow_decay: self.slow_decay,
            fast_decay: self.fast_decay,
        })
    }

    /// Same weights at a different stability index.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let mut s = self.clone();
        s.alpha = alpha;
        Ok(s)
    }
}

/// Per-mode stochastic convolution increments over one step of length `h`.
///
/// For the fast role the equation carries `1/epsilon` in front of the drift
/// and `epsilon^{-1/alpha}` in front of the noise; the two cancel in the
/// scale, leaving `gamma_k ((1 - e^{-alpha lambda_k h/epsilon}) / (alpha lambda_k))^{1/alpha}`.
pub fn cylindrical_convolution_increment(
    spec: &StableNoiseSpec,
    spectrum: &Arc<SpectrumSpec>,
    h: f64,
    role: NoiseRole,
    epsilon: Option<f64>,
    stream: &SeededStream,
) -> Result<SpectralField> {
    check_len(spectrum.m(), spec.m())?;
    if !(h >= 0.0) {
        return Err(Error::param("h", "must be nonnegative"));
    }
    let tau = match (role, epsilon) {
        (NoiseRole::Fast, Some(eps)) if eps > 0.0 => h / eps,
        (NoiseRole::Fast, Some(_)) => return Err(Error::param("epsilon", "must be positive")),
        (NoiseRole::Fast, None) => h,
        (NoiseRole::Slow, _) => h,
    };
    let sampler = StableSampler::new(spec.alpha())?;
    let key = stream.key();
    let coeffs = spectrum
        .eigenvalues()
        .iter()
        .zip(spec.weights(role))
        .enumerate()
        .map(|(k, (&lambda, &w))| {
            let scale = convolution_increment_scale(lambda, tau, w, spec.alpha());
            if scale == 0.0 {
                return 0.0;
            }
            let (u, e) = key.uniform_pair([k as u32, role.tag(), 0, 0]);
            scale * sampler.from_uniforms(u, e)
        })
        .collect();
    SpectralField::new(spectrum.clone(), coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesVerdict {
    Converges,
    Diverges,
    Undetermined,
}

/// Summability diagnostics for `sum beta_k^alpha lambda_k^{alpha-1}` and
/// `sum gamma_k^alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct A2Report {
    pub alpha: f64,
    /// Decay exponent of the first series' terms, when the families are known.
    pub slow_exponent: Option<f64>,
    pub slow_series: SeriesVerdict,
    pub fast_exponent: Option<f64>,
    pub fast_series: SeriesVerdict,
    pub slow_partial_sum: f64,
    pub fast_partial_sum: f64,
}

impl A2Report {
    pub fn passes(&self) -> bool {
        self.slow_series == SeriesVerdict::Converges && self.fast_series == SeriesVerdict::Converges
    }
}

fn is_dirichlet_1d(eigenvalues: &[f64]) -> bool {
    eigenvalues.iter().enumerate().all(|(i, &l)| {
        let k = (i + 1) as f64;
        (l - PI * PI * k * k).abs() <= 1e-9 * l
    })
}

/// Series comparison for power-law weights against `lambda_k = pi^2 k^2`:
/// the first series converges iff `alpha rho_beta - 2(alpha - 1) > 1`, the
/// second iff `alpha rho_gamma > 1`.
pub fn check_assumption_a2(spec: &StableNoiseSpec, eigenvalues: &[f64]) -> Result<A2Report> {
    check_len(spec.m(), eigenvalues.len())?;
    let a = spec.alpha();
    let slow_partial_sum = spec
        .slow_weights()
        .iter()
        .zip(eigenvalues)
        .map(|(b, l)| b.powf(a) * l.powf(a - 1.0))
        .sum();
    let fast_partial_sum = spec.fast_weights().iter().map(|g| g.powf(a)).sum();

    let verdict = |e: Option<f64>| match e {
        Some(e) if e > 1.0 => SeriesVerdict::Converges,
        Some(_) => SeriesVerdict::Diverges,
        None => SeriesVerdict::Undetermined,
    };
    let power = |d: DecayModel| match d {
        DecayModel::PowerLaw { c: 0.0, rho } => Some((f64::INFINITY, rho)),
        DecayModel::PowerLaw { rho, .. } => Some((0.0, rho)),
        DecayModel::Custom => None,
    };
    // A zero prefactor makes the series trivially convergent.
    let slow_exponent = match (power(spec.slow_decay()), is_dirichlet_1d(eigenvalues)) {
        (Some((z, _)), _) if z.is_infinite() => Some(f64::INFINITY),
        (Some((_, rho)), true) => Some(a * rho - 2.0 * (a - 1.0)),
        _ => None,
    };
    let fast_exponent = match power(spec.fast_decay()) {
        Some((z, _)) if z.is_infinite() => Some(f64::INFINITY),
        Some((_, rho)) => Some(a * rho),
        None => None,
    };
    Ok(A2Report {
        alpha: a,
        slow_exponent,
        slow_series: verdict(slow_exponent),
        fast_exponent,
        fast_series: verdict(fast_exponent),
        slow_partial_sum,
        fast_partial_sum,
    })
}

/// Empirical characteristic function at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfEstimate {
    pub u: f64,
    /// Mean of `cos(u X)`.
    pub mean: f64,
    pub stderr: f64,
    /// Mean of `sin(u X)`; zero in law for symmetric samples.
    pub imag: f64,
    pub imag_stderr: f64,
}

impl CfEstimate {
    pub fn within(&self, target: f64, n_se: f64) -> bool {
        (self.mean - target).abs() <= n_se * self.stderr.max(f64::EPSILON)
    }
}

/// `E cos(u X)` with standard errors; bounded integrands keep the variance
/// finite however heavy the tails of `X` are.
pub fn empirical_cf(samples: &[f64], u_grid: &[f64]) -> Result<Vec<CfEstimate>> {
    if samples.is_empty() {
        return Err(Error::Estimator("empirical_cf needs at least one sample".into()));
    }
    let n = samples.len() as f64;
    Ok(u_grid
        .iter()
        .map(|&u| {
            let (mut sc, mut sc2, mut ss, mut ss2) = (0.0, 0.0, 0.0, 0.0);
            for &x in samples {
                let (s, c) = (u * x).sin_cos();
                sc += c;
                sc2 += c * c;
                ss += s;
                ss2 += s * s;
            }
            let mean = sc / n;
            let imag = ss / n;
            let se = |s2: f64, m: f64| {
                if samples.len() < 2 {
                    0.0
                } else {
                    ((s2 / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt()
                }
            };
            CfEstimate {
                u,
                mean,
                stderr: se(sc2, mean),
                imag,
                imag_stderr: se(ss2, imag),
            }
        })
        .collect())
}

/// Supplier of per-mode convolution increments to the integrators.
///
/// `slow_increment` covers macro step `step` of length `h`; `fast_increment`
/// covers global fast substep `substep` whose length in the fast equation's
/// own time is `tau` (real step divided by epsilon, or the real step for the
/// frozen equation).
pub trait NoiseSource {
    fn slow_increment(&mut self, step: u64, h: f64, out: &mut [f64]);
    fn fast_increment(&mut self, substep: u64, tau: f64, out: &mut [f64]);
}

/// Immutable noise parameters shared by every sample of a run.
#[derive(Debug, Clone)]
pub struct NoiseContext {
    sampler: StableSampler,
    eigenvalues: Vec<f64>,
    slow_weights: Vec<f64>,
    fast_weights: Vec<f64>,
}

impl NoiseContext {
    pub fn new(spec: &StableNoiseSpec, spectrum: &SpectrumSpec) -> Result<Self> {
        check_len(spectrum.m(), spec.m())?;
        Ok(Self {
            sampler: StableSampler::new(spec.alpha())?,
            eigenvalues: spectrum.eigenvalues().to_vec(),
            slow_weights: spec.slow_weights().to_vec(),
            fast_weights: spec.fast_weights().to_vec(),
        })
    }

    pub fn m(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn alpha(&self) -> f64 {
        self.sampler.alpha()
    }

    fn scales(&self, weights: &[f64], tau: f64, out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.eigenvalues
                .iter()
                .zip(weights)
                .map(|(&l, &w)| convolution_increment_scale(l, tau, w, self.sampler.alpha())),
        );
    }
}

/// Draws addressed by `(key, role, mode, index)`: mode `k` at step `n` sees
/// the same variate whatever the truncation width of the run, which is what
/// lets nested resolutions and coupled equations share noise.
#[derive(Debug, Clone)]
pub struct StreamNoise<'a> {
    ctx: &'a NoiseContext,
    key: StreamKey,
    slow_cache: (u64, Vec<f64>),
    fast_cache: (u64, Vec<f64>),
}

impl<'a> StreamNoise<'a> {
    pub fn new(ctx: &'a NoiseContext, key: StreamKey) -> Self {
        Self {
            ctx,
            key,
            slow_cache: (u64::MAX, Vec::new()),
            fast_cache: (u64::MAX, Vec::new()),
        }
    }

    #[inline]
    fn fill(&self, role: NoiseRole, index: u64, scales: &[f64], out: &mut [f64]) {
        let (lo, hi) = (index as u32, (index >> 32) as u32);
        for (k, (o, &s)) in out.iter_mut().zip(scales).enumerate() {
            *o = if s == 0.0 {
                0.0
            } else {
                let (u, e) = self.key.uniform_pair([k as u32, role.tag(), lo, hi]);
                s * self.ctx.sampler.from_uniforms(u, e)
            };
        }
    }
}

impl NoiseSource for StreamNoise<'_> {
    fn slow_increment(&mut self, step: u64, h: f64, out: &mut [f64]) {
        if self.slow_cache.0 != h.to_bits() {
            self.ctx.scales(&self.ctx.slow_weights, h, &mut self.slow_cache.1);
            self.slow_cache.0 = h.to_bits();
        }
        let scales = std::mem::take(&mut self.slow_cache.1);
        self.fill(NoiseRole::Slow, step, &scales[..out.len()], out);
        self.slow_cache.1 = scales;
    }

    fn fast_increment(&mut self, substep: u64, tau: f64, out: &mut [f64]) {
        if self.fast_cache.0 != tau.to_bits() {
            self.ctx.scales(&self.ctx.fast_weights, tau, &mut self.fast_cache.1);
            self.fast_cache.0 = tau.to_bits();
        }
        let scales = std::mem::take(&mut self.fast_cache.1);
        self.fill(NoiseRole::Fast, substep, &scales[..out.len()], out);
        self.fast_cache.1 = scales;
    }
}

/// Composes `factor` consecutive fine increments into one coarse increment,
/// exactly: `I[0, 2d] = e^{-lambda d} I[0, d] + I[d, 2d]`. Runs at `h` and
/// `h / factor` then see the same noise path.
#[derive(Debug, Clone)]
pub struct Coarsened<S> {
    inner: S,
    factor: u64,
    eigenvalues: Vec<f64>,
    buf: Vec<f64>,
}

impl<S: NoiseSource> Coarsened<S> {
    pub fn new(inner: S, factor: u64, eigenvalues: &[f64]) -> Self {
        assert!(factor >= 1);
        Self {
            inner,
            factor,
            eigenvalues: eigenvalues.to_vec(),
            buf: vec![0.0; eigenvalues.len()],
        }
    }

    fn compose(&mut self, fast: bool, index: u64, len: f64, out: &mut [f64]) {
        let fine = len / self.factor as f64;
        out.fill(0.0);
        let m = out.len();
        for i in 0..self.factor {
            let buf = &mut self.buf[..m];
            if fast {
                self.inner.fast_increment(index * self.factor + i, fine, buf);
            } else {
                self.inner.slow_increment(index * self.factor + i, fine, buf);
            }
            for ((o, b), l) in out.iter_mut().zip(buf.iter()).zip(&self.eigenvalues) {
                *o = (-l * fine).exp() * *o + b;
            }
        }
    }
}

impl<S: NoiseSource> NoiseSource for Coarsened<S> {
    fn slow_increment(&mut self, step: u64, h: f64, out: &mut [f64]) {
        self.compose(false, step, h, out);
    }

    fn fast_increment(&mut self, substep: u64, tau: f64, out: &mut [f64]) {
        self.compose(true, substep, tau, out);
    }
}

/// Logs every increment it forwards.
#[derive(Debug, Clone)]
pub struct Recorder<S> {
    inner: S,
    pub slow_log: Vec<(u64, Vec<f64>)>,
    pub fast_log: Vec<(u64, Vec<f64>)>,
}

impl<S> Recorder<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            slow_log: Vec::new(),
            fast_log: Vec::new(),
        }
    }
}

impl<S: NoiseSource> NoiseSource for Recorder<S> {
    fn slow_increment(&mut self, step: u64, h: f64, out: &mut [f64]) {
        self.inner.slow_increment(step, h, out);
        self.slow_log.push((step, out.to_vec()));
    }

    fn fast_increment(&mut self, substep: u64, tau: f64, out: &mut [f64]) {
        self.inner.fast_increment(substep, tau, out);
        self.fast_log.push((substep, out.to_vec()));
    }
}

/// Noise source that contributes nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Silent;

impl NoiseSource for Silent {
    fn slow_increment(&mut self, _: u64, _: f64, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn fast_increment(&mut self, _: u64, _: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
}

impl<S: NoiseSource + ?Sized> NoiseSource for &mut S {
    fn slow_increment(&mut self, step: u64, h: f64, out: &mut [f64]) {
        (**self).slow_increment(step, h, out)
    }

    fn fast_increment(&mut self, substep: u64, tau: f64, out: &mut [f64]) {
        (**self).fast_increment(substep, tau, out)
    }
}

/// Symmetric stable CDF by numerical inversion of the characteristic
/// function, `F(x) = 1/2 + (1/pi) int_0^inf sin(u x) e^{-u^alpha} / u du`.
/// Composite Simpson on a truncated range; accurate to ~1e-10 for alpha in (1, 2).
pub fn stable_cdf(alpha: f64, x: f64) -> f64 {
    let upper = 40f64.powf(1.0 / alpha);
    let n = 20_000usize;
    let h = upper / n as f64;
    let f = |u: f64| {
        if u == 0.0 {
            x
        } else {
            (u * x).sin() * (-u.powf(alpha)).exp() / u
        }
    };
    let mut acc = f(0.0) + f(upper);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    0.5 + acc * h / 3.0 / PI
}

/// Quantile of the standard symmetric stable law by bisection on [`stable_cdf`].
pub fn stable_quantile(alpha: f64, p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if stable_cdf(alpha, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
