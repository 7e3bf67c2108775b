use serde::{Deserialize, Serialize};

use crate::dynamic::DynamicState;
use crate::error::{Error, Result};
use crate::loss::{convolve_pmf, mixture, ConditionalLossDist, IndexPortfolio, LossDist};
use crate::prior::{Bucket, IndexId};

/// A relevant sub-portfolio that belongs to the bespoke.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BespokeMember {
    pub index: IndexId,
    /// Bucket notional as a fraction of its index notional.
    pub notional: f64,
}

/// Target relevant-bucket EL per horizon for a bucket standing in for non-index names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyAdjustment {
    pub index: IndexId,
    /// Fractions of the index notional, one per calibrated horizon.
    pub target_els: Vec<f64>,
}

/// Bespoke portfolio made of the relevant buckets of one or both indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BespokeSpec {
    pub members: Vec<BespokeMember>,
    pub adjustment: Option<ProxyAdjustment>,
}

impl BespokeSpec {
    /// Members with notionals read off the relevant buckets of `portfolios`.
    pub fn from_portfolios(indices: &[IndexId], portfolios: &[&IndexPortfolio]) -> Result<Self> {
        let members = indices
            .iter()
            .map(|&index| {
                let p = portfolios
                    .iter()
                    .find(|p| p.index == index)
                    .ok_or_else(|| Error::InvalidInput(format!("no portfolio for index {index}")))?;
                Ok(BespokeMember {
                    index,
                    notional: p.bucket_notional(Bucket::Relevant),
                })
            })
            .collect::<Result<_>>()?;
        let spec = Self {
            members,
            adjustment: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::InvalidInput("bespoke needs at least one member bucket".into()));
        }
        for (i, m) in self.members.iter().enumerate() {
            if self.members[..i].iter().any(|o| o.index == m.index) {
                return Err(Error::InvalidInput(format!("index {} listed twice in the bespoke", m.index)));
            }
        }
        if !(self.notional() > 0.0) {
            return Err(Error::InvalidInput("bespoke notional must be positive".into()));
        }
        if let Some(adj) = &self.adjustment {
            let member = self.members.iter().find(|m| m.index == adj.index).ok_or_else(|| {
                Error::InvalidInput(format!("adjusted index {} is not a bespoke member", adj.index))
            })?;
            if adj.target_els.iter().any(|t| !(*t >= 0.0) || *t > member.notional) {
                return Err(Error::InvalidInput(format!(
                    "adjustment targets must lie in [0, {}], got {:?}",
                    member.notional, adj.target_els
                )));
            }
        }
        Ok(())
    }

    /// Bespoke notional `W_B` as a fraction of one index notional.
    pub fn notional(&self) -> f64 {
        self.members.iter().map(|m| m.notional).sum()
    }
}

/// Exponentially tilted bucket conditionals and the multiplier used.
#[derive(Debug, Clone, PartialEq)]
pub struct NameAdjustment {
    pub pmfs: Vec<Vec<f64>>,
    /// `P ~ Q exp(-lambda (X - EL))` with `X` in index-notional fractions.
    pub lambda: f64,
    pub achieved_el: f64,
}

fn tilt_stats(pmf: &[f64], mu: f64, t: f64) -> (f64, f64, f64) {
    // ln Z, mean and variance of x under pmf(x) exp(mu (x - t)).
    let max = pmf
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(x, _)| mu * (x as f64 - t))
        .fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m1) = (0.0, 0.0);
    for (x, p) in pmf.iter().enumerate().filter(|(_, p)| **p > 0.0) {
        let w = p * (mu * (x as f64 - t) - max).exp();
        z += w;
        m1 += w * x as f64;
    }
    let mean = m1 / z;
    let var = pmf
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(x, p)| p * (mu * (x as f64 - t) - max).exp() * (x as f64 - mean).powi(2))
        .sum::<f64>()
        / z;
    (max + z.ln(), mean, var)
}

/// Objective `sum_m h_m ln Z_m` of the name adjustment as a function of `lambda`.
pub fn adjustment_objective(pmfs: &[Vec<f64>], weights: &[f64], unit: f64, target_el: f64, lambda: f64) -> f64 {
    let t = target_el / unit;
    pmfs.iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(p, w)| w * tilt_stats(p, -lambda * unit, t).0)
        .sum()
}

/// Tilts per-node loss pmfs (lattice step `unit`) so the `weights`-mixed EL equals `target_el`.
pub fn adjust_bespoke_names(pmfs: &[Vec<f64>], weights: &[f64], unit: f64, target_el: f64) -> Result<NameAdjustment> {
    if pmfs.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: pmfs.len(),
            got: weights.len(),
        });
    }
    let t = target_el / unit;
    let active: Vec<(&Vec<f64>, f64)> = pmfs.iter().zip(weights.iter().copied()).filter(|(_, w)| *w > 0.0).collect();
    let support = |p: &Vec<f64>| {
        let lo = p.iter().position(|q| *q > 0.0).unwrap_or(0);
        let hi = p.iter().rposition(|q| *q > 0.0).unwrap_or(0);
        (lo as f64, hi as f64)
    };
    let lo: f64 = active.iter().map(|(p, w)| w * support(p).0).sum();
    let hi: f64 = active.iter().map(|(p, w)| w * support(p).1).sum();
    let derivative = |mu: f64| -> (f64, f64) {
        let mut d = 0.0;
        let mut dd = 0.0;
        for (p, w) in &active {
            let (_, mean, var) = tilt_stats(p, mu, t);
            d += w * mean;
            dd += w * var;
        }
        (d - t, dd)
    };
    let (g0, _) = derivative(0.0);
    if g0.abs() <= 1e-13 * t.abs().max(1.0) {
        return Ok(NameAdjustment {
            pmfs: pmfs.to_vec(),
            lambda: 0.0,
            achieved_el: (g0 + t) * unit,
        });
    }
    if !(t > lo && t < hi) {
        return Err(Error::InfeasibleAdjustment {
            target: target_el,
            min: lo * unit,
            max: hi * unit,
        });
    }
    // Root of the increasing derivative in mu = -lambda unit; bracket, then safeguarded Newton.
    let (mut a, mut b) = if g0 < 0.0 { (0.0, 1.0) } else { (-1.0, 0.0) };
    while derivative(a).0 > 0.0 {
        a *= 2.0;
    }
    while derivative(b).0 < 0.0 {
        b *= 2.0;
    }
    let mut mu = 0.0;
    for _ in 0..200 {
        let (g, h) = derivative(mu);
        if g.abs() < 1e-13 * t.max(1.0) {
            break;
        }
        if g < 0.0 {
            a = mu;
        } else {
            b = mu;
        }
        let newton = mu - g / h;
        mu = if h > 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if b - a < 1e-15 * (1.0 + mu.abs()) {
            break;
        }
    }
    let adjusted: Vec<Vec<f64>> = pmfs
        .iter()
        .map(|p| {
            let (lz, _, _) = tilt_stats(p, mu, t);
            p.iter()
                .enumerate()
                .map(|(x, q)| if *q > 0.0 { q * (mu * (x as f64 - t) - lz).exp() } else { 0.0 })
                .collect()
        })
        .collect();
    let achieved = (derivative(mu).0 + t) * unit;
    Ok(NameAdjustment {
        pmfs: adjusted,
        lambda: -mu / unit,
        achieved_el: achieved,
    })
}

/// Bespoke loss law at one horizon from a joint posterior (factor weights and per-index
/// conditionals).
///
/// Per node, each member's relevant-bucket marginal is taken (and tilted if `spec` adjusts
/// it), members are convolved, and nodes are mixed with the factor weights. Losses are
/// expressed as fractions of the bespoke notional.
pub fn bespoke_loss_dist(
    weights: &[f64],
    conditionals: &[ConditionalLossDist],
    spec: &BespokeSpec,
    horizon_pos: usize,
) -> Result<LossDist> {
    spec.validate()?;
    let conds = spec
        .members
        .iter()
        .map(|m| {
            conditionals
                .iter()
                .find(|c| c.index() == m.index)
                .ok_or_else(|| Error::InvalidInput(format!("posterior lacks index {}", m.index)))
        })
        .collect::<Result<Vec<_>>>()?;
    let unit = conds[0].grid().unit;
    let nodes = weights.len();
    for c in &conds {
        if !c.grid().same_unit(unit) {
            return Err(Error::LatticeMismatch("bespoke members use different loss units".into()));
        }
        if c.num_nodes() != nodes {
            return Err(Error::LengthMismatch {
                expected: nodes,
                got: c.num_nodes(),
            });
        }
    }
    let mut marginals: Vec<Vec<Vec<f64>>> = conds
        .iter()
        .map(|c| (0..nodes).map(|m| c.marginal(m, Bucket::Relevant)).collect())
        .collect();
    if let Some(adj) = &spec.adjustment {
        let target = *adj.target_els.get(horizon_pos).ok_or_else(|| {
            Error::InvalidInput(format!("adjustment has no target for horizon {horizon_pos}"))
        })?;
        let pos = spec.members.iter().position(|m| m.index == adj.index).expect("validated member");
        let a = adjust_bespoke_names(&marginals[pos], weights, unit, target)?;
        log::info!("bespoke adjustment on index {}: lambda = {}", adj.index, a.lambda);
        marginals[pos] = a.pmfs;
    }
    let per_node: Vec<Vec<f64>> = (0..nodes)
        .map(|m| {
            marginals[1..]
                .iter()
                .fold(marginals[0][m].clone(), |acc, member| convolve_pmf(&acc, &member[m]))
        })
        .collect();
    let pmf = mixture(&per_node, weights)?;
    Ok(LossDist::new(unit / spec.notional(), pmf))
}

/// Bespoke loss law read directly off a dynamic joint state (no adjustment).
pub fn bespoke_loss_from_state(state: &DynamicState, spec: &BespokeSpec) -> Result<LossDist> {
    spec.validate()?;
    if spec.adjustment.is_some() {
        return Err(Error::InvalidInput(
            "name adjustment is only available for single-horizon calibrations".into(),
        ));
    }
    let mut pmf = Vec::new();
    for (k, p) in state.entries() {
        let x: usize = spec.members.iter().map(|m| k.loss(m.index, Bucket::Relevant) as usize).sum();
        if pmf.len() <= x {
            pmf.resize(x + 1, 0.0);
        }
        pmf[x] += p;
    }
    Ok(LossDist::new(state.unit / spec.notional(), pmf))
}
