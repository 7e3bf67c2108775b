//! Single-period minimum cross-entropy calibration.

mod constraint;
mod dual;
mod factor_only;
mod information;
mod solver;

pub use constraint::{has_full_partition, payoff_eval, ConstraintKind, PricingConstraint, DEFAULT_SIGMA};
pub use dual::{
    calibrate, expected_payoffs, partition_functions, posterior_factor_weights, CalibrationResult, StaticDual,
};
pub(crate) use dual::{log_sum_exp, tilt_moments, TiltMoments};
pub use factor_only::{factor_only_calibrate, FactorOnlyDual};
pub use information::{conditional_mutual_information, joint_kl, kl_divergence, kl_to_prior};
pub use solver::{minimize, DualEvaluation, DualProblem, DualSolution, SolverOptions};
