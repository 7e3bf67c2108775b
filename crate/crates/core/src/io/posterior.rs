//! Lossless text dump of calibrated posterior measures.
//!
//! Three CSV files: the loss lattice layout per horizon and index, the factor grid with prior
//! and posterior weights, and the sparse posterior conditionals. Numbers are written in the
//! shortest form that parses back to the same `f64`, so a reload reprices bit-for-bit.

use std::collections::BTreeMap;
use std::io::Read;

use serde::Deserialize;

use crate::calibration::CalibrationResult;
use crate::error::{Error, Result};
use crate::io::format::fmt_exact;
use crate::io::reports::Table;
use crate::loss::{ConditionalLossDist, LossGrid};
use crate::prior::{IndexId, MarketFactorGrid};

pub const LAYOUT_HEADER: [&str; 6] = ["horizon", "index_id", "unit", "max_units", "relevant_len", "complement_len"];
pub const POSTERIOR_FACTOR_HEADER: [&str; 7] = ["horizon", "node", "m1", "m2", "z1", "z2", "prior_weight"];
pub const POSTERIOR_WEIGHT_HEADER: [&str; 3] = ["horizon", "node", "posterior_weight"];
pub const CONDITIONAL_HEADER: [&str; 6] =
    ["horizon", "index_id", "node", "relevant_units", "complement_units", "probability"];

/// Factor weights and per-index conditionals of a calibrated measure at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMeasure {
    pub horizon: f64,
    pub grid: MarketFactorGrid,
    pub weights: Vec<f64>,
    pub conditionals: Vec<ConditionalLossDist>,
}

impl PosteriorMeasure {
    pub fn from_result(horizon: f64, grid: &MarketFactorGrid, result: &CalibrationResult) -> Self {
        Self {
            horizon,
            grid: grid.clone(),
            weights: result.posterior_weights.clone(),
            conditionals: result.tilted.clone(),
        }
    }
}

/// The dump tables, in the order layout, factor grid, posterior weights, conditionals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosteriorTables {
    pub layout: Table,
    pub factor: Table,
    pub weights: Table,
    pub conditionals: Table,
}

pub fn posterior_tables(measures: &[PosteriorMeasure]) -> PosteriorTables {
    let mut layout = Table::new(&LAYOUT_HEADER);
    let mut factor = Table::new(&POSTERIOR_FACTOR_HEADER);
    let mut weights = Table::new(&POSTERIOR_WEIGHT_HEADER);
    let mut conditionals = Table::new(&CONDITIONAL_HEADER);
    for m in measures {
        let h = fmt_exact(m.horizon);
        for node in 0..m.grid.len() {
            let (m1, m2) = m.grid.coordinates(node);
            let (z1, z2) = m.grid.node(node);
            factor.push(vec![
                h.clone(),
                node.to_string(),
                m1.to_string(),
                m2.to_string(),
                fmt_exact(z1),
                fmt_exact(z2),
                fmt_exact(m.grid.prior_weights()[node]),
            ]);
            weights.push(vec![h.clone(), node.to_string(), fmt_exact(m.weights[node])]);
        }
        for c in &m.conditionals {
            let (rl, cl) = c.dims();
            layout.push(vec![
                h.clone(),
                c.index().to_string(),
                fmt_exact(c.grid().unit),
                c.grid().max_units.to_string(),
                rl.to_string(),
                cl.to_string(),
            ]);
            for node in 0..c.num_nodes() {
                for (cell, p) in c.slice(node).iter().enumerate() {
                    if *p != 0.0 {
                        let (r, x) = c.cell_coordinates(cell);
                        conditionals.push(vec![
                            h.clone(),
                            c.index().to_string(),
                            node.to_string(),
                            r.to_string(),
                            x.to_string(),
                            fmt_exact(*p),
                        ]);
                    }
                }
            }
        }
    }
    PosteriorTables {
        layout,
        factor,
        weights,
        conditionals,
    }
}

fn rows<R: Read, T: for<'de> Deserialize<'de>>(input: R, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(header.iter().copied()) {
        return Err(Error::Config(format!("posterior dump header must be `{}`", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Deserialize)]
struct LayoutRow {
    horizon: f64,
    index_id: u8,
    unit: f64,
    max_units: usize,
    relevant_len: usize,
    complement_len: usize,
}

#[derive(Deserialize)]
struct FactorRow {
    horizon: f64,
    node: usize,
    m1: usize,
    m2: usize,
    z1: f64,
    z2: f64,
    prior_weight: f64,
}

#[derive(Deserialize)]
struct WeightRow {
    horizon: f64,
    node: usize,
    posterior_weight: f64,
}

#[derive(Deserialize)]
struct CellRow {
    horizon: f64,
    index_id: u8,
    node: usize,
    relevant_units: usize,
    complement_units: usize,
    probability: f64,
}

type HorizonKey = u64;

/// Rebuilds the measures written by [`posterior_tables`].
pub fn read_posterior<R1: Read, R2: Read, R3: Read, R4: Read>(
    layout: R1,
    factor: R2,
    weights: R3,
    conditionals: R4,
) -> Result<Vec<PosteriorMeasure>> {
    let bad = |msg: String| Error::Config(format!("posterior dump: {msg}"));
    let key = |h: f64| -> HorizonKey { h.to_bits() };

    let mut grids: BTreeMap<HorizonKey, Vec<FactorRow>> = BTreeMap::new();
    let mut order: Vec<f64> = Vec::new();
    for r in rows::<_, FactorRow>(factor, &POSTERIOR_FACTOR_HEADER)? {
        if !grids.contains_key(&key(r.horizon)) {
            order.push(r.horizon);
        }
        grids.entry(key(r.horizon)).or_default().push(r);
    }
    let mut post: BTreeMap<HorizonKey, Vec<f64>> = BTreeMap::new();
    for r in rows::<_, WeightRow>(weights, &POSTERIOR_WEIGHT_HEADER)? {
        let w = post.entry(key(r.horizon)).or_default();
        if r.node != w.len() {
            return Err(bad(format!("posterior weights out of order at node {}", r.node)));
        }
        w.push(r.posterior_weight);
    }
    let mut slices: BTreeMap<(HorizonKey, u8), (LossGrid, usize, usize, Vec<Vec<f64>>)> = BTreeMap::new();
    let mut layout_order: Vec<(HorizonKey, u8)> = Vec::new();
    for r in rows::<_, LayoutRow>(layout, &LAYOUT_HEADER)? {
        let nodes = grids.get(&key(r.horizon)).map(Vec::len).ok_or_else(|| bad(format!("no grid for horizon {}", r.horizon)))?;
        let cells = r.relevant_len * r.complement_len;
        let grid = LossGrid::new(r.unit, r.max_units)?;
        layout_order.push((key(r.horizon), r.index_id));
        slices.insert((key(r.horizon), r.index_id), (grid, r.relevant_len, r.complement_len, vec![vec![0.0; cells]; nodes]));
    }
    for r in rows::<_, CellRow>(conditionals, &CONDITIONAL_HEADER)? {
        let (_, rl, cl, s) = slices
            .get_mut(&(key(r.horizon), r.index_id))
            .ok_or_else(|| bad(format!("cell for unknown horizon {} / index {}", r.horizon, r.index_id)))?;
        if r.relevant_units >= *rl || r.complement_units >= *cl || r.node >= s.len() {
            return Err(bad("cell outside the declared layout".into()));
        }
        s[r.node][r.relevant_units * *cl + r.complement_units] = r.probability;
    }

    let mut out = Vec::new();
    for h in order {
        let factor_rows = &grids[&key(h)];
        let (n1, n2) = factor_rows.iter().fold((0, 0), |(a, b), r| (a.max(r.m1 + 1), b.max(r.m2 + 1)));
        let mut nodes1 = vec![0.0; n1];
        let mut nodes2 = vec![0.0; n2];
        let mut prior = vec![0.0; n1 * n2];
        if factor_rows.len() != n1 * n2 {
            return Err(bad(format!("factor grid at horizon {h} is not a full product grid")));
        }
        for r in factor_rows {
            if r.node != r.m1 * n2 + r.m2 {
                return Err(bad(format!("node {} does not match ({}, {})", r.node, r.m1, r.m2)));
            }
            nodes1[r.m1] = r.z1;
            nodes2[r.m2] = r.z2;
            prior[r.node] = r.prior_weight;
        }
        let grid = MarketFactorGrid::from_parts(nodes1, nodes2, prior)?;
        let weights = post.remove(&key(h)).ok_or_else(|| bad(format!("no posterior weights for horizon {h}")))?;
        if weights.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: weights.len(),
            });
        }
        let mut conditionals = Vec::new();
        for k in layout_order.iter().filter(|k| k.0 == key(h)) {
            let (lg, rl, cl, s) = slices.remove(k).expect("layout key inserted above");
            let index = IndexId::try_from(k.1).map_err(bad)?;
            conditionals.push(ConditionalLossDist::from_slices(index, lg, rl, cl, s)?);
        }
        out.push(PosteriorMeasure {
            horizon: h,
            grid,
            weights,
            conditionals,
        });
    }
    Ok(out)
}
