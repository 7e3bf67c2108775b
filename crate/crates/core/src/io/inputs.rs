//! CSV inputs: constraints, tranche specs, discount curve and base-correlation curves.

use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::basecorr::{BaseCorrCurve, BaseCorrSurface};
use crate::calibration::{ConstraintKind, PricingConstraint, DEFAULT_SIGMA};
use crate::error::{Error, Result};
use crate::io::portfolio::horizon_position;
use crate::prior::{Bucket, IndexId};
use crate::pricing::{DayCount, DiscountCurve, TrancheSpec};

pub const CONSTRAINTS_HEADER: [&str; 7] = ["index_id", "kind", "K_low", "K_high", "horizon", "target_el", "sigma"];
pub const TRANCHES_HEADER: [&str; 5] = ["K_d", "K_u", "maturity", "frequency", "daycount"];
pub const DISCOUNT_HEADER: [&str; 2] = ["t", "B"];
pub const BASECORR_HEADER: [&str; 3] = ["K", "beta", "horizon"];

fn reader<R: Read>(input: R, expected: &[&str], what: &str) -> Result<csv::Reader<R>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Config(format!(
            "{what} CSV header must be `{}`, got `{}`",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(r)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))
}

#[derive(Debug, Deserialize)]
struct ConstraintRow {
    index_id: u8,
    kind: String,
    #[serde(rename = "K_low")]
    k_low: Option<f64>,
    #[serde(rename = "K_high")]
    k_high: Option<f64>,
    horizon: f64,
    target_el: f64,
    sigma: Option<f64>,
}

/// Constraints grouped by model horizon (one group per entry of `horizons`, possibly empty).
///
/// `kind` is `tranche`, `relevant` or `complement`; strikes are left empty for the totals and
/// an empty `sigma` means the default.
pub fn read_constraints<R: Read>(input: R, horizons: &[f64]) -> Result<Vec<Vec<PricingConstraint>>> {
    let mut r = reader(input, &CONSTRAINTS_HEADER, "constraint")?;
    let mut groups = vec![Vec::new(); horizons.len()];
    for (line, row) in r.deserialize::<ConstraintRow>().enumerate() {
        let row = row?;
        let at = |msg: String| Error::InvalidConstraint(format!("row {}: {msg}", line + 1));
        let index = IndexId::try_from(row.index_id).map_err(at)?;
        let kind = match row.kind.as_str() {
            "tranche" => match (row.k_low, row.k_high) {
                (Some(k_low), Some(k_high)) => ConstraintKind::Tranche { k_low, k_high },
                _ => return Err(at("tranche constraints need K_low and K_high".into())),
            },
            "relevant" | "complement" => {
                if row.k_low.is_some() || row.k_high.is_some() {
                    return Err(at(format!("{} totals take no strikes", row.kind)));
                }
                ConstraintKind::SubportfolioTotal(if row.kind == "relevant" {
                    Bucket::Relevant
                } else {
                    Bucket::Complement
                })
            }
            other => return Err(at(format!("unknown constraint kind `{other}`"))),
        };
        let c = PricingConstraint::new(index, kind, row.target_el, row.sigma.unwrap_or(DEFAULT_SIGMA))
            .map_err(|e| at(e.to_string()))?;
        groups[horizon_position(horizons, row.horizon)?].push(c);
    }
    Ok(groups)
}

pub fn load_constraints(path: &Path, horizons: &[f64]) -> Result<Vec<Vec<PricingConstraint>>> {
    read_constraints(open(path)?, horizons)
}

#[derive(Debug, Deserialize)]
struct TrancheRow {
    #[serde(rename = "K_d")]
    k_d: f64,
    #[serde(rename = "K_u")]
    k_u: f64,
    maturity: f64,
    frequency: u32,
    daycount: String,
}

pub fn read_tranches<R: Read>(input: R) -> Result<Vec<TrancheSpec>> {
    let mut r = reader(input, &TRANCHES_HEADER, "tranche")?;
    r.deserialize::<TrancheRow>()
        .map(|row| {
            let row = row?;
            TrancheSpec::new(row.k_d, row.k_u, row.maturity, row.frequency, DayCount::parse(&row.daycount)?)
        })
        .collect()
}

pub fn load_tranches(path: &Path) -> Result<Vec<TrancheSpec>> {
    read_tranches(open(path)?)
}

#[derive(Debug, Deserialize)]
struct DiscountRow {
    t: f64,
    #[serde(rename = "B")]
    b: f64,
}

pub fn read_discount<R: Read>(input: R) -> Result<DiscountCurve> {
    let mut r = reader(input, &DISCOUNT_HEADER, "discount curve")?;
    let pillars = r
        .deserialize::<DiscountRow>()
        .map(|row| row.map(|row| (row.t, row.b)).map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;
    DiscountCurve::new(pillars)
}

pub fn load_discount(path: &Path) -> Result<DiscountCurve> {
    read_discount(open(path)?)
}

#[derive(Debug, Deserialize)]
struct BaseCorrRow {
    #[serde(rename = "K")]
    k: f64,
    beta: f64,
    horizon: f64,
}

/// One skew curve per distinct horizon, in increasing horizon order.
pub fn read_basecorr<R: Read>(input: R) -> Result<BaseCorrSurface> {
    let mut r = reader(input, &BASECORR_HEADER, "base correlation")?;
    let mut by_horizon: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for row in r.deserialize::<BaseCorrRow>() {
        let row = row?;
        match by_horizon.iter_mut().find(|(h, _)| (h - row.horizon).abs() <= 1e-9) {
            Some((_, pillars)) => pillars.push((row.k, row.beta)),
            None => by_horizon.push((row.horizon, vec![(row.k, row.beta)])),
        }
    }
    let slices = by_horizon
        .into_iter()
        .map(|(h, pillars)| Ok((h, BaseCorrCurve::new(pillars)?)))
        .collect::<Result<Vec<_>>>()?;
    BaseCorrSurface::new(slices)
}

pub fn load_basecorr(path: &Path) -> Result<BaseCorrSurface> {
    read_basecorr(open(path)?)
}
