//! Multi-period model: Markov transition kernels of (factor node, sub-portfolio losses)
//! calibrated one period at a time.

mod chain;
mod increment;
mod period;
mod state;

pub use chain::{birth_death_chain, build_factor_chain_prior, FactorChainPrior};
pub use increment::{coarsen, homogenized_increment, BucketIncrementModel, IndexIncrementModel};
pub use period::{
    bootstrap_all, calibrate_period, propagate_marginal, state_expected_payoffs, DynamicSetup, PeriodKernel,
    PairNode, PeriodOutcome, PeriodPrior, PeriodProblem, DEFAULT_PERSISTENCE,
};
pub use state::{DynamicState, StateKey, TimeGrid};
