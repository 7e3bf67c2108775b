//! Bespoke loss distributions, bespoke-name adjustment and tranche legs.

mod bespoke;
mod curve;
mod tranche;

pub use bespoke::{
    adjust_bespoke_names, adjustment_objective, bespoke_loss_dist, bespoke_loss_from_state, BespokeMember, BespokeSpec,
    NameAdjustment, ProxyAdjustment,
};
pub use curve::DiscountCurve;
pub use tranche::{
    default_leg, el_on_coupon_dates, par_spread, premium_leg, price_from_el_curve, price_tranche, tranche_el, tranche_el_curve, DayCount,
    TranchePricing, TrancheSpec,
};
