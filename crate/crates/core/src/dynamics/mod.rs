//! The slow-fast system, its coefficients, and exponential Euler integrators
//! for the multiscale, frozen and averaged equations.

mod coefficients;
mod integrator;

use std::sync::Arc;

pub use coefficients::{
    spot_check_lipschitz, Coefficients, LinearBenchmark, LipschitzCheck, NemytskiiCoefficients, PointMap,
};
pub use integrator::{
    simulate_averaged, simulate_averaged_with, simulate_frozen, simulate_frozen_with, simulate_multiscale,
    simulate_multiscale_with, step_count, step_multiscale, AnalyticBbar, AveragedDrift, AveragedStepper,
    FrozenStepper, MultiscaleStepper, Trajectory,
};

use crate::error::{check_len, Error, Result};
use crate::spectral::{SpectralField, SpectrumSpec};
use crate::stable_noise::{check_assumption_a2, A2Report, StableNoiseSpec};

/// How many fast substeps each macro step takes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubstepRule {
    /// `ceil(lambda_1 h / (c_sub epsilon))`: the fast drift is frozen over at
    /// most `c_sub` relaxation times `epsilon / lambda_1` of the slowest fast mode.
    Relaxation { c_sub: f64 },
    Fixed(usize),
}

impl Default for SubstepRule {
    fn default() -> Self {
        SubstepRule::Relaxation { c_sub: 0.5 }
    }
}

/// A fully specified slow-fast system ready to integrate.
#[derive(Debug, Clone)]
pub struct Problem {
    spectrum: Arc<SpectrumSpec>,
    coeffs: Arc<dyn Coefficients>,
    noise: StableNoiseSpec,
    epsilon: f64,
    substeps: SubstepRule,
    a2: A2Report,
}

impl Problem {
    pub fn new(
        spectrum: Arc<SpectrumSpec>,
        coeffs: Arc<dyn Coefficients>,
        noise: StableNoiseSpec,
        epsilon: f64,
    ) -> Result<Self> {
        check_len(spectrum.m(), coeffs.m())?;
        check_len(spectrum.m(), noise.m())?;
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
        }
        let gap = spectrum.lambda1() - coeffs.lip_f_y();
        if !(gap > 0.0) {
            return Err(Error::param(
                "lip_f_y",
                format!(
                    "dissipativity lambda_1 - L_F > 0 fails: lambda_1 = {}, L_F = {}",
                    spectrum.lambda1(),
                    coeffs.lip_f_y()
                ),
            ));
        }
        let a2 = check_assumption_a2(&noise, spectrum.eigenvalues())?;
        Ok(Self {
            spectrum,
            coeffs,
            noise,
            epsilon,
            substeps: SubstepRule::default(),
            a2,
        })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut p = Self::new(self.spectrum.clone(), self.coeffs.clone(), self.noise.clone(), epsilon)?;
        p.substeps = self.substeps;
        Ok(p)
    }

    pub fn with_substeps(mut self, rule: SubstepRule) -> Result<Self> {
        match rule {
            SubstepRule::Relaxation { c_sub } if !(c_sub > 0.0) => {
                return Err(Error::param("c_sub", "must be positive"))
            }
            SubstepRule::Fixed(0) => return Err(Error::param("substeps", "must be at least 1")),
            _ => {}
        }
        self.substeps = rule;
        Ok(self)
    }

    /// The same system on the first `m` modes.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        let mut p = Self::new(
            Arc::new(self.spectrum.truncated(m)?),
            self.coeffs.truncated(m)?,
            self.noise.truncated(m)?,
            self.epsilon,
        )?;
        p.substeps = self.substeps;
        Ok(p)
    }

    pub fn spectrum(&self) -> &Arc<SpectrumSpec> {
        &self.spectrum
    }

    pub fn coeffs(&self) -> &Arc<dyn Coefficients> {
        &self.coeffs
    }

    pub fn noise(&self) -> &StableNoiseSpec {
        &self.noise
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn m(&self) -> usize {
        self.spectrum.m()
    }

    pub fn substep_rule(&self) -> SubstepRule {
        self.substeps
    }

    pub fn a2_report(&self) -> &A2Report {
        &self.a2
    }

    /// `lambda_1 - L_F`, the frozen equation's dissipativity gap.
    pub fn dissipativity_gap(&self) -> f64 {
        self.spectrum.lambda1() - self.coeffs.lip_f_y()
    }

    /// Fast substeps per macro step of length `h`.
    pub fn fast_substeps(&self, h: f64) -> usize {
        match self.substeps {
            SubstepRule::Fixed(n) => n,
            SubstepRule::Relaxation { c_sub } => {
                let n = (self.spectrum.lambda1() * h / (c_sub * self.epsilon)).ceil();
                (n as usize).max(1)
            }
        }
    }

    pub fn field(&self, coeffs: Vec<f64>) -> Result<SpectralField> {
        SpectralField::new(self.spectrum.clone(), coeffs)
    }
}

/// `(X, Y)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowFastState {
    pub x: SpectralField,
    pub y: SpectralField,
    pub t: f64,
}

impl SlowFastState {
    pub fn new(problem: &Problem, x: SpectralField, y: SpectralField, t: f64) -> Result<Self> {
        check_len(problem.m(), x.m())?;
        check_len(problem.m(), y.m())?;
        if !(t >= 0.0) {
            return Err(Error::param("t", "must be nonnegative"));
        }
        Ok(Self { x, y, t })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable_noise::DecayModel;

    fn noise(m: usize) -> StableNoiseSpec {
        StableNoiseSpec::from_decay(
            1.5,
            m,
            DecayModel::PowerLaw { c: 1.0, rho: 2.0 },
            DecayModel::PowerLaw { c: 1.0, rho: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn dissipativity_is_enforced() {
        let s = Arc::new(SpectrumSpec::dirichlet_laplacian_1d(4).unwrap());
        let bad = LinearBenchmark::new(4, 1.0, 12.0, 0.5, 1.0).unwrap();
        let err = Problem::new(s.clone(), Arc::new(bad), noise(4), 0.1).unwrap_err();
        assert!(err.to_string().contains("lambda_1 - L_F"));
        let ok = Problem::new(s.clone(), Arc::new(LinearBenchmark::with_defaults(4)), noise(4), 0.1).unwrap();
        assert!(ok.a2_report().passes());
        assert!((ok.dissipativity_gap() - (std::f64::consts::PI.powi(2) - 1.0)).abs() < 1e-12);
        assert!(Problem::new(s, Arc::new(LinearBenchmark::with_defaults(4)), noise(4), 0.0).is_err());
    }

    #[test]
    fn substep_counts() {
        let s = Arc::new(SpectrumSpec::dirichlet_laplacian_1d(4).unwrap());
        let p = Problem::new(s, Arc::new(LinearBenchmark::with_defaults(4)), noise(4), 2f64.powi(-9)).unwrap();
        // lambda_1 h / (0.5 eps) = 2 pi^2 at h = eps
        assert_eq!(p.fast_substeps(2f64.powi(-9)), 20);
        let p = p.with_epsilon(2f64.powi(-4)).unwrap();
        assert_eq!(p.fast_substeps(2f64.powi(-9)), 1);
        let p = p.with_substeps(SubstepRule::Fixed(3)).unwrap();
        assert_eq!(p.fast_substeps(1.0), 3);
        assert!(p.clone().with_substeps(SubstepRule::Fixed(0)).is_err());
    }
}
