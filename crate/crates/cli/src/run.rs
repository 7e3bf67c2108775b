//! Mode runners. Each builds its report tables in memory; nothing touches the output directory
//! until the whole run has succeeded.

use std::path::{Path, PathBuf};

use entropic_bespoke::basecorr::{mapped_correlation, price_skew_tranche, MatchingOptions, StrikeMapping};
use entropic_bespoke::calibration::has_full_partition;
use entropic_bespoke::dynamic::bootstrap_all;
use entropic_bespoke::io::{
    factor_kernel_rows, factor_rows, fit_rows, fmt_num, horizon_position, lambda_rows, load_basecorr,
    load_constraints, load_discount, load_portfolio, load_tranches, loss_kernel_rows, posterior_tables, pricing_row,
    read_posterior, state_rows, Table, DIAGNOSTICS_HEADER, FACTOR_HEADER, FACTOR_KERNEL_HEADER, LAMBDA_HEADER,
    LOSS_KERNEL_HEADER, MAPPING_HEADER, PRICING_HEADER, STATE_HEADER,
};
use entropic_bespoke::loss::build_conditional_prior;
use entropic_bespoke::prior::build_market_grid;
use entropic_bespoke::pricing::{bespoke_loss_dist, bespoke_loss_from_state, price_tranche};
use entropic_bespoke::{
    calibrate, BaseCorrSurface, BespokeSpec, DiscountCurve, DynamicSetup, Error, FactorParams, IndexId,
    IndexPortfolio, LossDist, LossGrid, MarketFactorGrid, OneFactorPool, PortfolioSet, PosteriorMeasure,
    PricingConstraint, TimeGrid, TrancheSpec,
};

use crate::config::{require, Mode, RunConfig};
use crate::error::CliError;
use crate::output::RunOutputs;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const LAMBDAS_FILE: &str = "lambdas.csv";
pub const FACTOR_FILE: &str = "factor_distribution.csv";
pub const PRICING_FILE: &str = "pricing.csv";
pub const MAPPING_FILE: &str = "mapping.csv";
pub const STATE_FILE: &str = "state.csv";
pub const FACTOR_KERNEL_FILE: &str = "factor_kernel.csv";
pub const LOSS_KERNEL_FILE: &str = "loss_kernel.csv";
pub const POSTERIOR_LAYOUT_FILE: &str = "posterior_layout.csv";
pub const POSTERIOR_FACTOR_FILE: &str = "posterior_factor.csv";
pub const POSTERIOR_WEIGHTS_FILE: &str = "posterior_weights.csv";
pub const POSTERIOR_CONDITIONALS_FILE: &str = "posterior_conditionals.csv";

/// Pricing-table model label of the entropy-calibrated measure.
pub const MCE_MODEL: &str = "mce";

/// A loaded config plus the directory its relative paths hang off.
pub struct Context {
    pub config: RunConfig,
    pub base: PathBuf,
    pub mode: Mode,
    pub outputs: RunOutputs,
}

/// Portfolio, factor grid and loss lattice shared by every mode.
struct Model {
    set: PortfolioSet,
    params: FactorParams,
    grid: MarketFactorGrid,
    loss_grid: LossGrid,
}

impl Context {
    fn input(&mut self, role: &str, path: &Path) -> Result<PathBuf, CliError> {
        let resolved = RunConfig::resolve(&self.base, path);
        self.outputs.record_input(role, path, &resolved)?;
        Ok(resolved)
    }

    fn model(&mut self) -> Result<Model, CliError> {
        let path = self.config.inputs.portfolio.clone();
        let set = load_portfolio(&self.input("portfolio", &path)?)?;
        let params = self.config.factor.unwrap_or(set.params);
        let [n1, n2] = self.config.grid.nodes;
        let grid = build_market_grid(n1, n2, &params)?;
        let loss_grid = LossGrid::fit(&[&set.portfolios[0], &set.portfolios[1]])?;
        Ok(Model {
            set,
            params,
            grid,
            loss_grid,
        })
    }

    fn constraints(&mut self, horizons: &[f64]) -> Result<Vec<Vec<PricingConstraint>>, CliError> {
        let path = require(&self.config.inputs.constraints, "constraints", self.mode)?.clone();
        let groups = load_constraints(&self.input("constraints", &path)?, horizons)?;
        for (t, cs) in horizons.iter().zip(&groups) {
            for index in IndexId::ALL {
                if has_full_partition(cs, index) {
                    log::warn!(
                        "horizon {t}: index {index} constraints form a full strike partition plus totals; \
                         the system is linearly dependent"
                    );
                }
            }
        }
        Ok(groups)
    }

    fn pricing_inputs(&mut self) -> Result<(Vec<TrancheSpec>, DiscountCurve), CliError> {
        let tranches = require(&self.config.inputs.tranches, "tranches", self.mode)?.clone();
        let discount = require(&self.config.inputs.discount, "discount", self.mode)?.clone();
        let tranches = load_tranches(&self.input("tranches", &tranches)?)?;
        let curve = load_discount(&self.input("discount", &discount)?)?;
        Ok((tranches, curve))
    }

    fn surface(&mut self) -> Result<BaseCorrSurface, CliError> {
        let path = require(&self.config.inputs.basecorr, "basecorr", self.mode)?.clone();
        Ok(load_basecorr(&self.input("basecorr", &path)?)?)
    }

    fn bespoke_spec(&self, model: &Model) -> Result<BespokeSpec, CliError> {
        let ps = &model.set.portfolios;
        let mut spec = BespokeSpec::from_portfolios(&self.config.bespoke.members, &[&ps[0], &ps[1]])?;
        spec.adjustment = self.config.bespoke.adjustment.clone();
        spec.validate()?;
        Ok(spec)
    }

    fn member_portfolios<'a>(&self, model: &'a Model) -> Vec<&'a IndexPortfolio> {
        self.config.bespoke.members.iter().map(|i| &model.set.portfolios[i.position()]).collect()
    }
}

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    match ctx.mode {
        Mode::CalibrateStatic => calibrate_static(ctx).map(|_| ()),
        Mode::CalibrateDynamic => calibrate_dynamic(ctx),
        Mode::PriceBespoke => price_bespoke(ctx),
        Mode::MapBasecorr => map_basecorr(ctx),
    }
}

/// Static calibration at every portfolio horizon; writes diagnostics, multipliers, factor law
/// and the posterior dump.
fn calibrate_static(ctx: &mut Context) -> Result<(Model, Vec<PosteriorMeasure>), CliError> {
    let model = ctx.model()?;
    let groups = ctx.constraints(&model.set.horizons)?;
    let mut diagnostics = Table::new(&DIAGNOSTICS_HEADER);
    let mut lambdas = Table::new(&LAMBDA_HEADER);
    let mut factor = Table::new(&FACTOR_HEADER);
    let mut measures = Vec::new();
    for (h, (&t, cs)) in model.set.horizons.iter().zip(&groups).enumerate() {
        if cs.is_empty() {
            log::warn!("horizon {t}: no constraints, the posterior is the prior");
        }
        let priors = model
            .set
            .portfolios
            .iter()
            .map(|p| build_conditional_prior(p, &model.params, &model.grid, &model.loss_grid, h))
            .collect::<Result<Vec<_>, Error>>()?;
        let refs: Vec<_> = priors.iter().collect();
        let result = calibrate(&model.grid, &refs, cs, &ctx.config.solver)?;
        log::info!(
            "horizon {t}: {} constraints, {} iterations, gradient norm {:e}",
            cs.len(),
            result.iterations,
            result.gradient_norm
        );
        fit_rows(&mut diagnostics, t, cs, &result.model_els, &result.lambdas);
        lambda_rows(&mut lambdas, t, cs, &result.lambdas);
        factor_rows(&mut factor, t, &model.grid, &result.posterior_weights);
        measures.push(PosteriorMeasure::from_result(t, &model.grid, &result));
    }
    let dump = posterior_tables(&measures);
    let out = &mut ctx.outputs;
    out.insert(DIAGNOSTICS_FILE, diagnostics.to_csv()?);
    out.insert(LAMBDAS_FILE, lambdas.to_csv()?);
    out.insert(FACTOR_FILE, factor.to_csv()?);
    out.insert(POSTERIOR_LAYOUT_FILE, dump.layout.to_csv()?);
    out.insert(POSTERIOR_FACTOR_FILE, dump.factor.to_csv()?);
    out.insert(POSTERIOR_WEIGHTS_FILE, dump.weights.to_csv()?);
    out.insert(POSTERIOR_CONDITIONALS_FILE, dump.conditionals.to_csv()?);
    Ok((model, measures))
}

fn load_measures(ctx: &mut Context, dir: &Path) -> Result<Vec<PosteriorMeasure>, CliError> {
    let mut open = |name: &str| -> Result<std::fs::File, CliError> {
        let path = ctx.input(name, &dir.join(name))?;
        std::fs::File::open(&path).map_err(|e| CliError::config(format!("cannot open {}: {e}", path.display())))
    };
    let (a, b, c, d) = (
        open(POSTERIOR_LAYOUT_FILE)?,
        open(POSTERIOR_FACTOR_FILE)?,
        open(POSTERIOR_WEIGHTS_FILE)?,
        open(POSTERIOR_CONDITIONALS_FILE)?,
    );
    Ok(read_posterior(a, b, c, d)?)
}

/// Bespoke tranche prices from the calibrated (or reloaded) posterior, with base-correlation
/// comparison rows when a skew surface is supplied.
fn price_bespoke(ctx: &mut Context) -> Result<(), CliError> {
    let (model, measures) = match ctx.config.inputs.posterior.clone() {
        Some(dir) => {
            let model = ctx.model()?;
            let measures = load_measures(ctx, &dir)?;
            (model, measures)
        }
        None => calibrate_static(ctx)?,
    };
    let spec = ctx.bespoke_spec(&model)?;
    let (tranches, curve) = ctx.pricing_inputs()?;
    let mut dists = Vec::with_capacity(measures.len());
    for m in &measures {
        let pos = horizon_position(&model.set.horizons, m.horizon)?;
        dists.push(bespoke_loss_dist(&m.weights, &m.conditionals, &spec, pos)?.with_horizon(m.horizon));
    }
    let mut pricing = Table::new(&PRICING_HEADER);
    price_all(&mut pricing, MCE_MODEL, &dists, &tranches, &curve)?;
    if ctx.config.inputs.basecorr.is_some() {
        let surface = ctx.surface()?;
        let unit = model.loss_grid.unit;
        let mut pools = Vec::new();
        let mut index_pools = Vec::new();
        for t in surface.horizons() {
            let pos = horizon_position(&model.set.horizons, t)?;
            pools.push(OneFactorPool::bespoke(&ctx.member_portfolios(&model), pos, unit)?);
            let index = &model.set.portfolios[ctx.config.mapping.index.position()];
            index_pools.push(OneFactorPool::from_index(index, pos, unit)?);
        }
        for &rule in &ctx.config.mapping.rules {
            for tranche in &tranches {
                match price_skew_tranche(&pools, &index_pools, &surface, rule, tranche, &curve) {
                    Ok(p) => pricing_row(&mut pricing, rule.as_str(), tranche, &p),
                    Err(Error::NoSolution(msg)) => {
                        log::warn!("{} {}: no price ({msg})", rule.as_str(), tranche.label())
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    ctx.outputs.insert(PRICING_FILE, pricing.to_csv()?);
    Ok(())
}

fn price_all(
    table: &mut Table,
    model: &str,
    dists: &[LossDist],
    tranches: &[TrancheSpec],
    curve: &DiscountCurve,
) -> Result<(), CliError> {
    for tranche in tranches {
        let p = price_tranche(dists, tranche, curve)?;
        pricing_row(table, model, tranche, &p);
    }
    Ok(())
}

/// Period-by-period bootstrap; writes diagnostics, the factor marginals, the sparse state and
/// kernel dumps, and tranche prices when tranche and discount inputs are given.
fn calibrate_dynamic(ctx: &mut Context) -> Result<(), CliError> {
    let model = ctx.model()?;
    let groups = ctx.constraints(&model.set.horizons)?;
    let setup = DynamicSetup {
        portfolios: model.set.portfolios.clone(),
        params: model.params,
        grid: model.grid.clone(),
        loss_grid: model.loss_grid,
        time_grid: TimeGrid::new(model.set.horizons.clone())?,
        persistence: ctx.config.dynamic.persistence,
        coarsening: ctx.config.dynamic.coarsening,
    };
    let outcomes = bootstrap_all(&setup, &groups, &ctx.config.solver)?;
    let mut diagnostics = Table::new(&DIAGNOSTICS_HEADER);
    let mut lambdas = Table::new(&LAMBDA_HEADER);
    let mut factor = Table::new(&FACTOR_HEADER);
    let mut state = Table::new(&STATE_HEADER);
    let mut factor_kernel = Table::new(&FACTOR_KERNEL_HEADER);
    let mut loss_kernel = Table::new(&LOSS_KERNEL_HEADER);
    for (&t, o) in model.set.horizons.iter().zip(&outcomes) {
        fit_rows(&mut diagnostics, t, &o.constraints, &o.model_els, &o.kernel.lambdas);
        lambda_rows(&mut lambdas, t, &o.constraints, &o.kernel.lambdas);
        factor_rows(&mut factor, t, &model.grid, &o.state.factor_marginal(model.grid.len()));
        state_rows(&mut state, &o.state);
        factor_kernel_rows(&mut factor_kernel, &o.kernel);
        loss_kernel_rows(&mut loss_kernel, &o.kernel);
    }
    if ctx.config.inputs.tranches.is_some() {
        let spec = ctx.bespoke_spec(&model)?;
        let (tranches, curve) = ctx.pricing_inputs()?;
        let dists = model
            .set
            .horizons
            .iter()
            .zip(&outcomes)
            .map(|(&t, o)| Ok(bespoke_loss_from_state(&o.state, &spec)?.with_horizon(t)))
            .collect::<Result<Vec<_>, CliError>>()?;
        let mut pricing = Table::new(&PRICING_HEADER);
        price_all(&mut pricing, MCE_MODEL, &dists, &tranches, &curve)?;
        ctx.outputs.insert(PRICING_FILE, pricing.to_csv()?);
    }
    let out = &mut ctx.outputs;
    out.insert(DIAGNOSTICS_FILE, diagnostics.to_csv()?);
    out.insert(LAMBDAS_FILE, lambdas.to_csv()?);
    out.insert(FACTOR_FILE, factor.to_csv()?);
    out.insert(STATE_FILE, state.to_csv()?);
    out.insert(FACTOR_KERNEL_FILE, factor_kernel.to_csv()?);
    out.insert(LOSS_KERNEL_FILE, loss_kernel.to_csv()?);
    Ok(())
}

/// Index strike and correlation each rule assigns to every bespoke strike.
fn map_basecorr(ctx: &mut Context) -> Result<(), CliError> {
    let model = ctx.model()?;
    let surface = ctx.surface()?;
    let mut strikes = ctx.config.mapping.strikes.clone();
    if strikes.is_empty() && ctx.config.inputs.tranches.is_some() {
        let path = ctx.config.inputs.tranches.clone().expect("checked above");
        for t in load_tranches(&ctx.input("tranches", &path)?)? {
            strikes.extend([t.k_d, t.k_u].into_iter().filter(|k| *k > 0.0));
        }
        strikes.sort_by(f64::total_cmp);
        strikes.dedup();
    }
    if strikes.is_empty() {
        return Err(CliError::config("map-basecorr needs mapping.strikes or inputs.tranches"));
    }
    if let Some(k) = strikes.iter().find(|k| !(**k > 0.0 && **k <= 1.0)) {
        return Err(CliError::config(format!("mapping strike {k} must lie in (0, 1]")));
    }
    let unit = model.loss_grid.unit;
    let mut table = Table::new(&MAPPING_HEADER);
    for (t, curve) in &surface.slices {
        let pos = horizon_position(&model.set.horizons, *t)?;
        let pool = OneFactorPool::bespoke(&ctx.member_portfolios(&model), pos, unit)?;
        let index = OneFactorPool::from_index(&model.set.portfolios[ctx.config.mapping.index.position()], pos, unit)?;
        let (bespoke_el, index_el) = (pool.expected_loss(), index.expected_loss());
        for &rule in &ctx.config.mapping.rules {
            let mapping = StrikeMapping {
                rule,
                index: &index,
                options: MatchingOptions::default(),
            };
            for &k_b in &strikes {
                let (k_i, beta) = match mapped_correlation(&pool, curve, &mapping, k_b) {
                    Ok((k_i, beta)) => (fmt_num(k_i), fmt_num(beta)),
                    Err(Error::NoSolution(msg)) => {
                        log::warn!("horizon {t}, {} K_b={k_b}: {msg}", rule.as_str());
                        (String::new(), String::new())
                    }
                    Err(e) => return Err(e.into()),
                };
                table.push(vec![
                    fmt_num(*t),
                    rule.as_str().to_string(),
                    fmt_num(k_b),
                    k_i,
                    beta,
                    fmt_num(bespoke_el),
                    fmt_num(index_el),
                ]);
            }
        }
    }
    ctx.outputs.insert(MAPPING_FILE, table.to_csv()?);
    Ok(())
}
