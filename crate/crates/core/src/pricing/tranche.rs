use serde::{Deserialize, Serialize};

use super::curve::DiscountCurve;
use crate::error::{Error, Result};
use crate::loss::LossDist;

/// Accrual convention applied to the year fraction between coupon dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DayCount {
    /// Year fraction scaled by 365/360.
    #[default]
    Act360,
    Act365,
    /// Plain year fraction.
    Thirty360,
}

impl DayCount {
    pub fn accrual(self, year_fraction: f64) -> f64 {
        match self {
            DayCount::Act360 => year_fraction * 365.0 / 360.0,
            DayCount::Act365 | DayCount::Thirty360 => year_fraction,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['/', '_', ' '], "").as_str() {
            "act360" => Ok(DayCount::Act360),
            "act365" | "act365f" => Ok(DayCount::Act365),
            "30360" | "thirty360" => Ok(DayCount::Thirty360),
            other => Err(Error::InvalidInput(format!("unknown day count '{other}'"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DayCount::Act360 => "act360",
            DayCount::Act365 => "act365",
            DayCount::Thirty360 => "30360",
        }
    }
}

/// A tranche on a loss distribution with a regular coupon schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrancheSpec {
    pub k_d: f64,
    pub k_u: f64,
    /// Years.
    pub maturity: f64,
    /// Coupons per year.
    pub frequency: u32,
    pub day_count: DayCount,
    pub notional: f64,
}

impl TrancheSpec {
    pub fn new(k_d: f64, k_u: f64, maturity: f64, frequency: u32, day_count: DayCount) -> Result<Self> {
        let t = Self {
            k_d,
            k_u,
            maturity,
            frequency,
            day_count,
            notional: 1.0,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.k_d && self.k_d < self.k_u && self.k_u <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "tranche strikes must satisfy 0 <= K_d < K_u <= 1, got ({}, {})",
                self.k_d, self.k_u
            )));
        }
        if !(self.maturity > 0.0) || !self.maturity.is_finite() || self.frequency == 0 {
            return Err(Error::InvalidInput(format!(
                "tranche needs positive maturity and frequency, got {} and {}",
                self.maturity, self.frequency
            )));
        }
        if !(self.notional > 0.0) {
            return Err(Error::InvalidInput(format!("tranche notional {} must be positive", self.notional)));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        let pct = |k: f64| {
            let s = format!("{:.4}", k * 100.0);
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        };
        format!("{}-{}%", pct(self.k_d), pct(self.k_u))
    }

    /// Coupon dates `t_1 < ... < t_n = maturity`, spaced `1 / frequency` with a short last period.
    pub fn coupon_dates(&self) -> Vec<f64> {
        let step = 1.0 / self.frequency as f64;
        let mut dates = Vec::new();
        let mut i = 1u32;
        loop {
            let t = i as f64 * step;
            if t >= self.maturity - 1e-9 {
                dates.push(self.maturity);
                break;
            }
            dates.push(t);
            i += 1;
        }
        dates
    }

    /// Accrual fractions `Delta_i` of the coupon periods.
    pub fn accruals(&self) -> Vec<f64> {
        let dates = self.coupon_dates();
        let mut prev = 0.0;
        dates
            .iter()
            .map(|t| {
                let d = self.day_count.accrual(t - prev);
                prev = *t;
                d
            })
            .collect()
    }
}

/// Normalised tranche loss `E[(X - K_d)^+ - (X - K_u)^+] / (K_u - K_d)`.
pub fn tranche_el(dist: &LossDist, k_d: f64, k_u: f64) -> f64 {
    (dist.tranche_loss(k_d, k_u) / (k_u - k_d)).clamp(0.0, 1.0)
}

/// Tranche EL at every coupon date, linear in time between horizons and zero at `t = 0`.
///
/// `dists` must carry horizons; the last one must reach the maturity.
pub fn tranche_el_curve(dists: &[LossDist], tranche: &TrancheSpec) -> Result<Vec<f64>> {
    let knots = dists
        .iter()
        .map(|d| {
            let t = d
                .horizon
                .ok_or_else(|| Error::InvalidInput("loss distribution without a horizon".into()))?;
            Ok((t, tranche_el(d, tranche.k_d, tranche.k_u)))
        })
        .collect::<Result<Vec<_>>>()?;
    el_on_coupon_dates(&knots, tranche)
}

/// Interpolates `(horizon, tranche EL)` knots onto the coupon dates.
pub fn el_on_coupon_dates(horizon_els: &[(f64, f64)], tranche: &TrancheSpec) -> Result<Vec<f64>> {
    let mut knots = vec![(0.0, 0.0)];
    for &(t, el) in horizon_els {
        if t <= knots.last().expect("non-empty").0 {
            return Err(Error::InvalidInput(format!("loss horizons must increase, got {t}")));
        }
        knots.push((t, el));
    }
    let last = knots.last().expect("non-empty").0;
    if tranche.maturity > last + 1e-9 {
        return Err(Error::InvalidInput(format!(
            "loss horizons end at {last} before the tranche maturity {}",
            tranche.maturity
        )));
    }
    if knots.windows(2).any(|w| w[1].1 < w[0].1 - 1e-12) {
        log::warn!("tranche {} expected loss decreases in time", tranche.label());
    }
    Ok(tranche
        .coupon_dates()
        .iter()
        .map(|&t| {
            let j = knots.partition_point(|k| k.0 < t).min(knots.len() - 1).max(1);
            let (t0, e0) = knots[j - 1];
            let (t1, e1) = knots[j];
            e0 + (e1 - e0) * (t - t0) / (t1 - t0)
        })
        .collect())
}

/// `N_0 sum 1/2 (B_{i-1} + B_i)(EL_i - EL_{i-1})` with `EL_0 = 0`, `B_0 = 1`.
pub fn default_leg(el: &[f64], dates: &[f64], curve: &DiscountCurve, notional: f64) -> f64 {
    let mut prev = (1.0, 0.0);
    let mut d = 0.0;
    for (&t, &e) in dates.iter().zip(el) {
        let b = curve.discount(t);
        d += 0.5 * (prev.0 + b) * (e - prev.1);
        prev = (b, e);
    }
    notional * d
}

/// `S N_0 sum Delta_i B_i 1/2 (EN_{i-1} + EN_i)` with `EN = 1 - EL`.
pub fn premium_leg(el: &[f64], dates: &[f64], accruals: &[f64], curve: &DiscountCurve, spread: f64, notional: f64) -> f64 {
    let mut prev_en = 1.0;
    let mut p = 0.0;
    for ((&t, &e), &delta) in dates.iter().zip(el).zip(accruals) {
        let en = 1.0 - e;
        p += delta * curve.discount(t) * 0.5 * (prev_en + en);
        prev_en = en;
    }
    spread * notional * p
}

/// Running spread equating the legs.
pub fn par_spread(default_leg: f64, unit_premium_leg: f64) -> Result<f64> {
    if !(unit_premium_leg > 0.0) {
        return Err(Error::ZeroAnnuity);
    }
    Ok(default_leg / unit_premium_leg)
}

/// Per-unit-notional pricing of one tranche.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranchePricing {
    /// Running spread as a decimal (multiply by 1e4 for bp).
    pub par_spread: f64,
    /// Premium leg value of a unit spread per unit notional.
    pub risky_annuity: f64,
    /// Default leg value per unit notional.
    pub default_leg: f64,
}

pub fn price_tranche(dists: &[LossDist], tranche: &TrancheSpec, curve: &DiscountCurve) -> Result<TranchePricing> {
    tranche.validate()?;
    let el = tranche_el_curve(dists, tranche)?;
    price_from_el_curve(&el, tranche, curve)
}

/// Prices from tranche ELs already evaluated on the coupon dates.
pub fn price_from_el_curve(el: &[f64], tranche: &TrancheSpec, curve: &DiscountCurve) -> Result<TranchePricing> {
    let dates = tranche.coupon_dates();
    if el.len() != dates.len() {
        return Err(Error::LengthMismatch {
            expected: dates.len(),
            got: el.len(),
        });
    }
    let n0 = tranche.notional;
    let d = default_leg(el, &dates, curve, n0);
    let p1 = premium_leg(el, &dates, &tranche.accruals(), curve, 1.0, n0);
    Ok(TranchePricing {
        par_spread: par_spread(d, p1)?,
        risky_annuity: p1 / n0,
        default_leg: d / n0,
    })
}
