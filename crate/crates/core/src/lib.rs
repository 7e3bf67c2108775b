//! Minimum cross-entropy calibration of joint index sub-portfolio loss distributions and
//! bespoke CDO tranche pricing.
//!
//! The crate builds a two-factor Gaussian copula prior over the market factor and the
//! losses of the "relevant" and "complement" sub-portfolios of two credit indices, tilts
//! it exponentially to match tranche expected-loss quotes, and prices tranches on a
//! bespoke portfolio assembled from the relevant sub-portfolios. A multi-period variant
//! calibrates Markov transition kernels period by period, and a one-factor
//! base-correlation pricer is provided for comparison.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basecorr;
pub mod calibration;
pub mod dynamic;
pub mod error;
pub mod io;
pub mod loss;
pub mod normal;
pub mod prior;
pub mod pricing;
pub mod quadrature;
pub mod synthetic;

pub use calibration::{calibrate, factor_only_calibrate, CalibrationResult, PricingConstraint, SolverOptions};
pub use error::{Error, Result};
pub use loss::{ConditionalLossDist, IndexPortfolio, LossDist, LossGrid};
pub use prior::{Bucket, FactorParams, IndexId, MarketFactorGrid, NameSpec, TwoFactorLoadings};
pub use basecorr::{BaseCorrCurve, BaseCorrSurface, MappingRule, OneFactorPool};
pub use dynamic::{DynamicSetup, DynamicState, PeriodKernel, TimeGrid};
pub use io::{PortfolioSet, PosteriorMeasure};
pub use pricing::{BespokeSpec, DayCount, DiscountCurve, TranchePricing, TrancheSpec};
