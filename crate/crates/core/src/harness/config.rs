use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::averaging::{BbarKind, BbarParams, ErgodicParams, PhiParams};
use crate::dynamics::{Coefficients, LinearBenchmark, NemytskiiCoefficients, Problem, SubstepRule};
use crate::error::{Error, Result};
use crate::spectral::SpectrumSpec;
use crate::stable_noise::{check_assumption_a2, DecayModel, SeriesVerdict, StableNoiseSpec};

fn exponent(e: Option<f64>) -> String {
    e.map_or("unknown (not a power law)".into(), |v| v.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientKind {
    Linear,
    Nemytskii,
}

/// System parameters shared by every experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub coefficients: CoefficientKind,
    pub m: usize,
    pub alpha: f64,
    /// Linear benchmark: `F = a x - b y`, `B = b0 x + b1 y`.
    pub a: f64,
    pub b: f64,
    pub b0: f64,
    pub b1: f64,
    /// Leading coefficients of the initial data; missing modes are zero.
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            coefficients: CoefficientKind::Linear,
            m: 8,
            alpha: 1.5,
            a: 1.0,
            b: 1.0,
            b0: 0.5,
            b1: 1.0,
            x0: vec![1.0],
            y0: vec![],
        }
    }
}

/// Power-law weights `beta_k = slow_c k^-slow_rho`, `gamma_k = fast_c k^-fast_rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub slow_c: f64,
    pub slow_rho: f64,
    pub fast_c: f64,
    pub fast_rho: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            slow_c: 1.0,
            slow_rho: 2.0,
            fast_c: 1.0,
            fast_rho: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    /// Macro step.
    pub h: f64,
    /// Horizon.
    pub t_end: f64,
    /// Fast substeps per macro step: `ceil(lambda_1 h / (c_sub epsilon))`.
    pub c_sub: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            h: 2f64.powi(-9),
            t_end: 1.0,
            c_sub: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunctionKind {
    /// `cos(<x, v>)`.
    Cos,
    /// `exp(-|x|^2 / 2)`.
    Gauss,
    /// `1`.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BbarSource {
    Analytic,
    Ergodic,
}

/// Strong and weak epsilon ladders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateConfig {
    pub epsilons: Vec<f64>,
    pub strong_samples: usize,
    pub weak_samples: usize,
    /// Moment in the strong error; `1 <= p < alpha`.
    pub p: f64,
    pub blocks: usize,
    pub test_function: TestFunctionKind,
    /// `v` in `cos(<x, v>)`; missing modes are zero.
    pub test_vector: Vec<f64>,
    /// Share slow noise between the multiscale and averaged runs.
    pub coupled: bool,
    pub bbar: BbarSource,
    /// Strong slope tolerance for `--assert`.
    pub slope_tolerance: f64,
    /// Smallest weak slope accepted by `--assert`.
    pub weak_min_slope: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            epsilons: (4..=9).map(|k| 2f64.powi(-k)).collect(),
            strong_samples: 2000,
            weak_samples: 20000,
            p: 1.0,
            blocks: 16,
            test_function: TestFunctionKind::Cos,
            test_vector: vec![1.0],
            coupled: true,
            bbar: BbarSource::Analytic,
            slope_tolerance: 0.12,
            weak_min_slope: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GalerkinConfig {
    pub coefficients: CoefficientKind,
    /// Resolutions; the largest is the reference.
    pub m_ladder: Vec<usize>,
    pub epsilon: f64,
    pub samples: usize,
}

impl Default for GalerkinConfig {
    fn default() -> Self {
        Self {
            coefficients: CoefficientKind::Nemytskii,
            m_ladder: vec![4, 8, 16, 32, 64],
            epsilon: 2f64.powi(-4),
            samples: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErgodicityConfig {
    pub samples: usize,
    pub h_f: f64,
    /// Initial fast state `y1_start e_1` at `x = 0`.
    pub y1_start: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Allowed shortfall of the fitted rate below `(lambda_1 - L_F) / 2`.
    pub slack: f64,
}

impl Default for ErgodicityConfig {
    fn default() -> Self {
        Self {
            samples: 4000,
            h_f: 0.005,
            y1_start: 5.0,
            dt: 0.025,
            t_max: 0.4,
            slack: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BbarKindConfig {
    TimeAverage,
    Ensemble,
}

/// Ergodic `Bbar` estimator; windows are in units of `1 / (lambda_1 - L_F)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BbarConfig {
    pub kind: BbarKindConfig,
    pub chains: usize,
    pub h_f: f64,
    pub burn_in_factor: f64,
    pub window_factor: f64,
    pub blocks: usize,
    /// `bbar-check` passes when the largest stderr is at most this.
    pub target_stderr: f64,
}

impl Default for BbarConfig {
    fn default() -> Self {
        Self {
            kind: BbarKindConfig::TimeAverage,
            chains: 1024,
            h_f: 0.01,
            burn_in_factor: 8.0,
            window_factor: 100.0,
            blocks: 16,
            target_stderr: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhiConfig {
    pub samples: usize,
    pub h_f: f64,
    /// `T_max` in units of `1 / (lambda_1 - L_F)`.
    pub t_max_factor: f64,
    pub blocks: usize,
    /// Fast state at which `Phi(x0, y)` is evaluated; missing modes are zero.
    pub y: Vec<f64>,
    /// Slow state; missing modes are zero.
    pub x: Vec<f64>,
}

impl Default for PhiConfig {
    fn default() -> Self {
        Self {
            samples: 4000,
            h_f: 0.01,
            t_max_factor: 12.0,
            blocks: 16,
            y: vec![1.0],
            x: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseCheckConfig {
    pub alphas: Vec<f64>,
    pub samples: usize,
    pub u: Vec<f64>,
}

impl Default for NoiseCheckConfig {
    fn default() -> Self {
        Self {
            alphas: vec![1.2, 1.5, 1.8],
            samples: 100_000,
            u: vec![0.5, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 picks the machine's parallelism.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { seed: 42, threads: 0 }
    }
}

/// Everything an experiment needs, with all defaults materialized.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub noise: NoiseConfig,
    pub integrator: IntegratorConfig,
    pub rate: RateConfig,
    pub galerkin: GalerkinConfig,
    pub ergodicity: ErgodicityConfig,
    pub bbar: BbarConfig,
    pub phi: PhiConfig,
    pub noise_check: NoiseCheckConfig,
    pub run: RunConfig,
}

/// One line of a validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub field: String,
    pub ok: bool,
    pub detail: String,
}

fn padded(field: &str, v: &[f64], m: usize) -> Result<Vec<f64>> {
    if v.len() > m {
        return Err(Error::Config(format!("{field}: {} entries exceed m = {m}", v.len())));
    }
    let mut out = v.to_vec();
    out.resize(m, 0.0);
    Ok(out)
}

impl ExperimentConfig {
    /// Coefficients of the given kind on `m` modes.
    pub fn coefficients(&self, kind: CoefficientKind, m: usize) -> Result<Arc<dyn Coefficients>> {
        let p = &self.problem;
        Ok(match kind {
            CoefficientKind::Linear => Arc::new(LinearBenchmark::new(m, p.a, p.b, p.b0, p.b1)?),
            CoefficientKind::Nemytskii => Arc::new(NemytskiiCoefficients::default_benchmark(m)?),
        })
    }

    pub fn noise_spec(&self, m: usize) -> Result<StableNoiseSpec> {
        let n = &self.noise;
        StableNoiseSpec::from_decay(
            self.problem.alpha,
            m,
            DecayModel::PowerLaw {
                c: n.slow_c,
                rho: n.slow_rho,
            },
            DecayModel::PowerLaw {
                c: n.fast_c,
                rho: n.fast_rho,
            },
        )
    }

    pub fn problem_with(&self, kind: CoefficientKind, m: usize, epsilon: f64) -> Result<Problem> {
        let spectrum = Arc::new(SpectrumSpec::dirichlet_laplacian_1d(m)?);
        Problem::new(spectrum, self.coefficients(kind, m)?, self.noise_spec(m)?, epsilon)?
            .with_substeps(SubstepRule::Relaxation {
                c_sub: self.integrator.c_sub,
            })
    }

    /// The configured system at scale `epsilon`.
    pub fn problem(&self, epsilon: f64) -> Result<Problem> {
        self.problem_with(self.problem.coefficients, self.problem.m, epsilon)
    }

    pub fn x0(&self, m: usize) -> Result<Vec<f64>> {
        padded("problem.x0", &self.problem.x0, m)
    }

    pub fn y0(&self, m: usize) -> Result<Vec<f64>> {
        padded("problem.y0", &self.problem.y0, m)
    }

    pub fn test_vector(&self) -> Result<Vec<f64>> {
        padded("rate.test_vector", &self.rate.test_vector, self.problem.m)
    }

    pub fn bbar_params(&self, problem: &Problem) -> BbarParams {
        let gap = problem.dissipativity_gap();
        let b = &self.bbar;
        BbarParams {
            kind: match b.kind {
                BbarKindConfig::TimeAverage => BbarKind::ErgodicTimeAverage,
                BbarKindConfig::Ensemble => BbarKind::Ensemble,
            },
            burn_in: b.burn_in_factor / gap,
            window: b.window_factor / gap,
            h_f: b.h_f,
            chains: b.chains,
            blocks: b.blocks,
        }
    }

    pub fn phi_params(&self, problem: &Problem) -> PhiParams {
        PhiParams {
            t_max: self.phi.t_max_factor / problem.dissipativity_gap(),
            samples: self.phi.samples,
            h_f: self.phi.h_f,
            blocks: self.phi.blocks,
            truncation_constant: problem.coeffs().lip_b(),
        }
    }

    pub fn ergodic_params(&self, problem: &Problem) -> ErgodicParams {
        ErgodicParams {
            samples: self.ergodicity.samples,
            h_f: self.ergodicity.h_f,
            ..ErgodicParams::defaults_for(problem)
        }
    }

    /// Every invariant check, without simulating. The configuration is
    /// usable when all checks pass.
    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        let mut push = |field: &str, ok: bool, detail: String| {
            out.push(Check {
                field: field.to_string(),
                ok,
                detail,
            })
        };
        let p = &self.problem;
        let alpha_ok = p.alpha > 1.0 && p.alpha < 2.0;
        push("problem.alpha", alpha_ok, format!("alpha = {} must lie in (1, 2)", p.alpha));
        push("problem.m", p.m >= 1, format!("m = {} must be at least 1", p.m));
        let lip_f = match p.coefficients {
            CoefficientKind::Linear => p.b.abs(),
            CoefficientKind::Nemytskii => 0.5,
        };
        let l1 = std::f64::consts::PI.powi(2);
        push(
            if p.coefficients == CoefficientKind::Linear {
                "problem.b"
            } else {
                "problem.coefficients"
            },
            l1 - lip_f > 0.0,
            format!("dissipativity lambda_1 - L_F > 0: lambda_1 = {l1:.4}, L_F = {lip_f}"),
        );
        push(
            "problem.x0",
            p.x0.len() <= p.m && p.x0.iter().all(|v| v.is_finite()),
            format!("{} finite entries, at most m = {}", p.x0.len(), p.m),
        );
        push(
            "problem.y0",
            p.y0.len() <= p.m && p.y0.iter().all(|v| v.is_finite()),
            format!("{} finite entries, at most m = {}", p.y0.len(), p.m),
        );
        let n = &self.noise;
        push(
            "noise",
            n.slow_c >= 0.0 && n.fast_c >= 0.0 && n.slow_c.is_finite() && n.fast_c.is_finite(),
            "noise prefactors must be nonnegative and finite".into(),
        );
        if alpha_ok && p.m >= 1 {
            match self.noise_spec(p.m).and_then(|spec| {
                let eig = SpectrumSpec::dirichlet_laplacian_1d(p.m)?;
                check_assumption_a2(&spec, eig.eigenvalues())
            }) {
                Ok(r) => {
                    push(
                        "noise.slow_rho",
                        r.slow_series == SeriesVerdict::Converges,
                        format!(
                            "first series sum beta_k^alpha lambda_k^(alpha-1): decay exponent {} must exceed 1",
                            exponent(r.slow_exponent)
                        ),
                    );
                    push(
                        "noise.fast_rho",
                        r.fast_series == SeriesVerdict::Converges,
                        format!(
                            "second series sum gamma_k^alpha: decay exponent {} must exceed 1",
                            exponent(r.fast_exponent)
                        ),
                    );
                }
                Err(e) => push("noise", false, e.to_string()),
            }
        }
        let r = &self.rate;
        push(
            "rate.p",
            r.p >= 1.0 && r.p < p.alpha,
            format!("p = {} violates 1 <= p < alpha (alpha = {})", r.p, p.alpha),
        );
        let mut sorted = r.epsilons.clone();
        sorted.sort_by(f64::total_cmp);
        let distinct = sorted.windows(2).all(|w| w[0] != w[1]);
        push(
            "rate.epsilons",
            !r.epsilons.is_empty() && distinct && r.epsilons.iter().all(|&e| e > 0.0 && e <= 1.0),
            format!("{} values; must be distinct and in (0, 1]", r.epsilons.len()),
        );
        push(
            "rate.blocks",
            r.blocks >= 8 && r.strong_samples >= 4 * r.blocks && r.weak_samples >= 4 * r.blocks,
            format!(
                "blocks = {} must be >= 8 with at least 4 samples per block (strong {}, weak {})",
                r.blocks, r.strong_samples, r.weak_samples
            ),
        );
        push(
            "rate.test_vector",
            r.test_vector.len() <= p.m,
            format!("{} entries, at most m = {}", r.test_vector.len(), p.m),
        );
        let it = &self.integrator;
        let steps = it.t_end / it.h;
        push(
            "integrator.h",
            it.h > 0.0 && it.h <= it.t_end && (steps - steps.round()).abs() < 1e-9 * steps.max(1.0),
            format!("h = {} must be positive, <= T = {} and divide it", it.h, it.t_end),
        );
        push("integrator.c_sub", it.c_sub > 0.0, format!("c_sub = {} must be positive", it.c_sub));
        let g = &self.galerkin;
        push(
            "galerkin.m_ladder",
            g.m_ladder.len() >= 2 && g.m_ladder.windows(2).all(|w| w[0] < w[1]) && g.m_ladder[0] >= 1,
            "at least two strictly increasing resolutions".into(),
        );
        push(
            "galerkin.epsilon",
            g.epsilon > 0.0 && g.epsilon <= 1.0,
            format!("epsilon = {} must be in (0, 1]", g.epsilon),
        );
        push(
            "galerkin.samples",
            g.samples >= 32,
            format!("samples = {} must be at least 32", g.samples),
        );
        let e = &self.ergodicity;
        let grid = e.t_max / e.dt;
        let sub = e.dt / e.h_f;
        push(
            "ergodicity.dt",
            e.h_f > 0.0
                && e.dt > 0.0
                && e.t_max > e.dt
                && (grid - grid.round()).abs() < 1e-9
                && (sub - sub.round()).abs() < 1e-9,
            "h_f, dt, t_max positive, dt a multiple of h_f, t_max a multiple of dt".into(),
        );
        push(
            "ergodicity.samples",
            e.samples >= 64,
            format!("samples = {} must be at least 64", e.samples),
        );
        let b = &self.bbar;
        push(
            "bbar",
            b.chains >= 1 && b.h_f > 0.0 && b.window_factor > 0.0 && b.burn_in_factor >= 0.0 && b.blocks >= 2,
            "chains >= 1, h_f > 0, window_factor > 0, burn_in_factor >= 0, blocks >= 2".into(),
        );
        let ph = &self.phi;
        push(
            "phi",
            ph.samples >= 2 * ph.blocks && ph.h_f > 0.0 && ph.t_max_factor > 0.0 && ph.x.len() <= p.m && ph.y.len() <= p.m,
            "samples >= 2 blocks, h_f > 0, t_max_factor > 0, x and y at most m entries".into(),
        );
        let nc = &self.noise_check;
        push(
            "noise_check",
            nc.alphas.iter().all(|a| *a > 1.0 && *a < 2.0) && nc.samples >= 100 && !nc.u.is_empty(),
            "alphas in (1, 2), samples >= 100, nonempty u grid".into(),
        );
        out
    }

    /// First failing check as a configuration error.
    pub fn validate(&self) -> Result<()> {
        match self.checks().into_iter().find(|c| !c.ok) {
            Some(c) => Err(Error::Config(format!("{}: {}", c.field, c.detail))),
            None => Ok(()),
        }
    }

    /// Theoretical strong slope `1 - 1/alpha` (fits use `error^{1/p}`).
    pub fn strong_reference_slope(&self) -> f64 {
        1.0 - 1.0 / self.problem.alpha
    }
}
