//! File formats: portfolio TOML, input CSVs, report tables and posterior dumps.

mod format;
mod inputs;
mod portfolio;
mod posterior;
mod reports;

pub use format::{fmt_bp, fmt_exact, fmt_num, SIGNIFICANT_DIGITS};
pub use inputs::{
    load_basecorr, load_constraints, load_discount, load_tranches, read_basecorr, read_constraints, read_discount,
    read_tranches, BASECORR_HEADER, CONSTRAINTS_HEADER, DISCOUNT_HEADER, TRANCHES_HEADER,
};
pub use portfolio::{horizon_position, load_portfolio, NameRecord, PortfolioFile, PortfolioSet};
pub use posterior::{
    posterior_tables, read_posterior, PosteriorMeasure, PosteriorTables, CONDITIONAL_HEADER, LAYOUT_HEADER,
    POSTERIOR_FACTOR_HEADER, POSTERIOR_WEIGHT_HEADER,
};
pub use reports::{
    diagnostics_rows, factor_kernel_rows, factor_rows, fit_rows, lambda_rows, loss_kernel_rows, pricing_row, state_rows, Table,
    DIAGNOSTICS_HEADER, FACTOR_HEADER, FACTOR_KERNEL_HEADER, LAMBDA_HEADER, LOSS_KERNEL_HEADER, MAPPING_HEADER, PRICING_HEADER,
    STATE_HEADER,
};
