//! Report tables. Every table is rendered to a string so callers decide where it lands.

use std::path::Path;

use crate::calibration::{CalibrationResult, PricingConstraint};
use crate::dynamic::{DynamicState, PeriodKernel};
use crate::error::Result;
use crate::io::format::{fmt_bp, fmt_exact, fmt_num};
use crate::prior::{IndexId, MarketFactorGrid};
use crate::pricing::{TranchePricing, TrancheSpec};

pub const DIAGNOSTICS_HEADER: [&str; 8] =
    ["horizon", "index_id", "constraint", "target_el", "model_el", "residual", "relative_error", "lambda"];
pub const LAMBDA_HEADER: [&str; 4] = ["horizon", "index_id", "constraint", "lambda"];
pub const FACTOR_HEADER: [&str; 8] = ["horizon", "node", "m1", "m2", "z1", "z2", "prior_weight", "posterior_weight"];
pub const PRICING_HEADER: [&str; 8] =
    ["model", "tranche", "K_d", "K_u", "maturity", "par_spread_bp", "risky_annuity", "default_leg"];
pub const MAPPING_HEADER: [&str; 7] = ["horizon", "rule", "K_b", "K_i", "beta", "bespoke_el", "index_el"];
pub const STATE_HEADER: [&str; 7] = ["period", "node", "x11", "x12", "x21", "x22", "probability"];
pub const FACTOR_KERNEL_HEADER: [&str; 8] = ["period", "node", "x11", "x12", "x21", "x22", "next_node", "probability"];
pub const LOSS_KERNEL_HEADER: [&str; 8] = [
    "period",
    "index_id",
    "relevant_units",
    "complement_units",
    "next_node",
    "next_relevant_units",
    "next_complement_units",
    "probability",
];

/// A header plus string rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    header: Vec<String>,
    /// Encoded data rows, each terminated by `\n`.
    body: String,
    len: usize,
}

/// Appends one CSV record, quoting only fields that need it.
fn encode_record<S: AsRef<str>>(out: &mut String, fields: &[S]) {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let f = f.as_ref();
        if f.contains([',', '"', '\n', '\r']) {
            out.push('"');
            out.push_str(&f.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(f);
        }
    }
    out.push('\n');
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            body: String::new(),
            len: 0,
        }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    /// Number of data rows.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        encode_record(&mut self.body, &row);
        self.len += 1;
    }

    /// CSV text with `\n` line endings.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::with_capacity(self.body.len() + 64);
        encode_record(&mut out, &self.header);
        out.push_str(&self.body);
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

/// Per-constraint model EL, target, residual, relative error and multiplier.
pub fn diagnostics_rows(table: &mut Table, horizon: f64, result: &CalibrationResult) {
    fit_rows(table, horizon, &result.constraints, &result.model_els, &result.lambdas);
}

/// Same layout as [`diagnostics_rows`] from raw per-constraint model ELs and multipliers.
pub fn fit_rows(table: &mut Table, horizon: f64, constraints: &[PricingConstraint], model_els: &[f64], lambdas: &[f64]) {
    for (i, c) in constraints.iter().enumerate() {
        let model = model_els[i];
        let relative = if c.target_el != 0.0 { fmt_num(model / c.target_el - 1.0) } else { String::new() };
        table.push(vec![
            fmt_num(horizon),
            c.index.to_string(),
            c.label(),
            fmt_num(c.target_el),
            fmt_num(model),
            fmt_num(model - c.target_el),
            relative,
            fmt_num(lambdas[i]),
        ]);
    }
}

pub fn lambda_rows(table: &mut Table, horizon: f64, constraints: &[PricingConstraint], lambdas: &[f64]) {
    for (c, l) in constraints.iter().zip(lambdas) {
        table.push(vec![fmt_num(horizon), c.index.to_string(), c.label(), fmt_num(*l)]);
    }
}

/// Prior and posterior factor weights per grid node.
pub fn factor_rows(table: &mut Table, horizon: f64, grid: &MarketFactorGrid, posterior: &[f64]) {
    for (m, w) in posterior.iter().enumerate() {
        let (m1, m2) = grid.coordinates(m);
        let (z1, z2) = grid.node(m);
        table.push(vec![
            fmt_num(horizon),
            m.to_string(),
            m1.to_string(),
            m2.to_string(),
            fmt_num(z1),
            fmt_num(z2),
            fmt_num(grid.prior_weights()[m]),
            fmt_num(*w),
        ]);
    }
}

pub fn pricing_row(table: &mut Table, model: &str, tranche: &TrancheSpec, pricing: &TranchePricing) {
    table.push(vec![
        model.to_string(),
        tranche.label(),
        fmt_num(tranche.k_d),
        fmt_num(tranche.k_u),
        fmt_num(tranche.maturity),
        fmt_bp(pricing.par_spread),
        fmt_num(pricing.risky_annuity),
        fmt_num(pricing.default_leg),
    ]);
}

/// Sparse joint law after a period.
pub fn state_rows(table: &mut Table, state: &DynamicState) {
    let period = state.period.map(|p| p.to_string()).unwrap_or_default();
    for (k, p) in state.entries() {
        let mut row = vec![period.clone(), k.node.to_string()];
        row.extend(k.losses.iter().map(|x| x.to_string()));
        row.push(fmt_exact(*p));
        table.push(row);
    }
}

/// Posterior factor transitions `h(m' | m, X)`.
pub fn factor_kernel_rows(table: &mut Table, kernel: &PeriodKernel) {
    for (k, row) in &kernel.factor_transitions {
        for (next, p) in row {
            let mut r = vec![kernel.period.to_string(), k.node.to_string()];
            r.extend(k.losses.iter().map(|x| x.to_string()));
            r.push(next.to_string());
            r.push(fmt_exact(*p));
            table.push(r);
        }
    }
}

/// Posterior loss transitions `P_i(X' | m', X)` per index.
pub fn loss_kernel_rows(table: &mut Table, kernel: &PeriodKernel) {
    for index in IndexId::ALL {
        for (((r, c), next), cells) in &kernel.conditionals[index.position()] {
            for (r2, c2, p) in cells {
                table.push(vec![
                    kernel.period.to_string(),
                    index.to_string(),
                    r.to_string(),
                    c.to_string(),
                    next.to_string(),
                    r2.to_string(),
                    c2.to_string(),
                    fmt_exact(*p),
                ]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rendering_quotes_and_newlines() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["x,y".into(), "1".into()]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n\"x,y\",1\n");
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn encoding_matches_csv_writer() {
        let rows = [["plain", "with \"quote\""], ["", "line\nbreak"], ["1e-07", "cr\rx"]];
        let mut t = Table::new(&["a", "b"]);
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(["a", "b"]).unwrap();
        for r in rows {
            t.push(r.iter().map(|s| s.to_string()).collect());
            w.write_record(r).unwrap();
        }
        let expected = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(t.to_csv().unwrap(), expected);
    }
}
