//! Experiments that measure averaging rates and check the bounds behind
//! them: epsilon ladders, Galerkin studies and frozen-equation diagnostics.

mod checks;
mod config;
mod experiments;

pub use checks::{
    bbar_check, contraction_check, ergodicity_check, frozen_moment_bound_check, noise_check, phi_check,
    problem_of_kind, BbarCheck, CfRow, ContractionReport, MomentBoundReport, MomentPoint, PhiCheck,
};
pub use config::{
    BbarConfig, BbarKindConfig, BbarSource, Check, CoefficientKind, ErgodicityConfig, ExperimentConfig,
    GalerkinConfig, IntegratorConfig, NoiseCheckConfig, NoiseConfig, PhiConfig, ProblemConfig, RateConfig,
    RunConfig, TestFunctionKind,
};
pub use experiments::{
    galerkin_convergence_experiment, run_ladder, strong_rate_experiment, weak_dominates_strong, weak_rate_experiment,
    with_threads,
    GalerkinOutcome, GalerkinRow, LadderOutcome, LadderPlan, RateOutcome, RateRow, RateTable, TestFunction,
    MAX_ABORT_FRACTION,
};
pub use crate::stats::{fit_loglog, robust_mean, RateFit, RatePoint};
