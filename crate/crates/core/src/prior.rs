//! Two-factor Gaussian copula prior.
//!
//! Each name carries a latent variable `A = beta1 Z1 + beta2 Z2 + idio * eps` where
//! `(Z1, Z2)` is a correlated standard bivariate normal. Loadings are parametrised by a
//! one-factor loading `b` so that, seen in isolation, every index behaves exactly like a
//! one-factor model with loadings `b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;
use crate::quadrature;

/// Correlation of the two market factors and the foreign-loading proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorParams {
    pub rho: f64,
    pub alpha: f64,
}

impl FactorParams {
    pub fn new(rho: f64, alpha: f64) -> Result<Self> {
        let params = Self { rho, alpha };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::InvalidFactorParams(format!(
                "rho = {} must lie in (-1, 1)",
                self.rho
            )));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidFactorParams(format!(
                "alpha = {} must be finite and non-negative",
                self.alpha
            )));
        }
        if self.loading_norm() <= 0.0 {
            return Err(Error::InvalidFactorParams(
                "1 + 2 alpha rho + alpha^2 must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `1 + 2 alpha rho + alpha^2`, the variance of the systematic part per unit domestic loading.
    pub fn loading_norm(&self) -> f64 {
        1.0 + 2.0 * self.alpha * self.rho + self.alpha * self.alpha
    }
}

/// Which of the two reference indices a name belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum IndexId {
    One,
    Two,
}

impl IndexId {
    pub const ALL: [IndexId; 2] = [IndexId::One, IndexId::Two];

    pub fn number(self) -> u8 {
        match self {
            IndexId::One => 1,
            IndexId::Two => 2,
        }
    }

    /// Zero-based position, handy for indexing per-index arrays.
    pub fn position(self) -> usize {
        self.number() as usize - 1
    }
}

impl TryFrom<u8> for IndexId {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, Self::Error> {
        match value {
            1 => Ok(IndexId::One),
            2 => Ok(IndexId::Two),
            other => Err(format!("index id must be 1 or 2, got {other}")),
        }
    }
}

impl From<IndexId> for u8 {
    fn from(value: IndexId) -> Self {
        value.number()
    }
}

impl std::fmt::Display for IndexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Relevant sub-portfolio (names that are part of the bespoke) or its complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Relevant,
    Complement,
}

impl Bucket {
    pub fn as_str(self) -> &'static str {
        match self {
            Bucket::Relevant => "relevant",
            Bucket::Complement => "complement",
        }
    }
}

/// One obligor of an index portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameSpec {
    pub id: String,
    pub index: IndexId,
    pub bucket: Bucket,
    /// Cumulative risk-neutral default probability at each model horizon.
    pub default_probs: Vec<f64>,
    pub recovery: f64,
    /// Fraction of the index notional.
    pub notional_weight: f64,
    /// One-factor loading `b`.
    pub loading: f64,
}

impl NameSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidName {
            name: self.id.clone(),
            reason,
        };
        if self.default_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(fail("default probabilities must lie in [0, 1]".into()));
        }
        if self.default_probs.windows(2).any(|w| w[1] < w[0]) {
            return Err(fail("default probability curve must be non-decreasing".into()));
        }
        if !(0.0..1.0).contains(&self.recovery) {
            return Err(fail(format!("recovery {} must lie in [0, 1)", self.recovery)));
        }
        if !(self.notional_weight >= 0.0) || !self.notional_weight.is_finite() {
            return Err(fail("notional weight must be finite and non-negative".into()));
        }
        if !(self.loading >= 0.0 && self.loading < 1.0) {
            return Err(fail(format!("one-factor loading {} must lie in [0, 1)", self.loading)));
        }
        Ok(())
    }

    /// Loss given default as a fraction of index notional.
    pub fn lgd(&self) -> f64 {
        (1.0 - self.recovery) * self.notional_weight
    }

    pub fn loadings(&self, params: &FactorParams) -> Result<TwoFactorLoadings> {
        derive_two_factor_loadings(self.loading, params, self.index).map_err(|e| match e {
            Error::InvalidLoading { idio_sq, .. } => Error::InvalidLoading {
                name: self.id.clone(),
                idio_sq,
            },
            other => other,
        })
    }

    pub fn default_prob(&self, horizon: usize) -> Result<f64> {
        self.default_probs.get(horizon).copied().ok_or_else(|| Error::InvalidName {
            name: self.id.clone(),
            reason: format!("no default probability for horizon #{horizon}"),
        })
    }
}

/// Loadings of a name on the two market factors plus the idiosyncratic coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoFactorLoadings {
    pub beta1: f64,
    pub beta2: f64,
    pub idio: f64,
}

impl TwoFactorLoadings {
    /// Systematic part `beta . z` at a factor state.
    pub fn systematic(&self, z: (f64, f64)) -> f64 {
        self.beta1 * z.0 + self.beta2 * z.1
    }
}

/// Splits a one-factor loading `b` into domestic and foreign loadings.
///
/// The domestic loading is `b / sqrt(1 + 2 alpha rho + alpha^2)` and the foreign one is
/// `alpha` times that; `home` selects which factor is domestic.
pub fn derive_two_factor_loadings(
    b: f64,
    params: &FactorParams,
    home: IndexId,
) -> Result<TwoFactorLoadings> {
    params.validate()?;
    let domestic = b / params.loading_norm().sqrt();
    let foreign = params.alpha * domestic;
    let (beta1, beta2) = match home {
        IndexId::One => (domestic, foreign),
        IndexId::Two => (foreign, domestic),
    };
    // beta1^2 + beta2^2 + 2 rho beta1 beta2 = b^2 by construction of the normalisation.
    let idio_sq = 1.0 - b * b;
    if !(idio_sq > 0.0) || !b.is_finite() {
        return Err(Error::InvalidLoading {
            name: format!("b={b}"),
            idio_sq,
        });
    }
    Ok(TwoFactorLoadings {
        beta1,
        beta2,
        idio: idio_sq.sqrt(),
    })
}

/// Asset correlation between two names: `cov(A_i, A_j)` under factor correlation `rho`.
///
/// For two names of the same index this collapses to `b_i b_j` regardless of
/// `(rho, alpha)`; across indices it is `b_i b_j ((1 + alpha^2) rho + 2 alpha) / (1 + alpha^2 + 2 alpha rho)`.
pub fn pairwise_correlation(
    a: &TwoFactorLoadings,
    b: &TwoFactorLoadings,
    params: &FactorParams,
) -> f64 {
    a.beta1 * b.beta1 + a.beta2 * b.beta2 + params.rho * (a.beta1 * b.beta2 + a.beta2 * b.beta1)
}

/// Product grid over the two market factors with prior weights `g_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketFactorGrid {
    nodes1: Vec<f64>,
    nodes2: Vec<f64>,
    /// Row-major over `(m1, m2)`.
    prior_weights: Vec<f64>,
}

impl MarketFactorGrid {
    /// Builds a grid from explicit nodes and weights; weights are validated, not renormalised.
    pub fn from_parts(nodes1: Vec<f64>, nodes2: Vec<f64>, prior_weights: Vec<f64>) -> Result<Self> {
        let expected = nodes1.len() * nodes2.len();
        if prior_weights.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: prior_weights.len(),
            });
        }
        if prior_weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidInput("grid weights must be non-negative".into()));
        }
        let total: f64 = prior_weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("grid weights sum to {total}, not 1")));
        }
        Ok(Self {
            nodes1,
            nodes2,
            prior_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.prior_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior_weights.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nodes1.len(), self.nodes2.len())
    }

    pub fn nodes1(&self) -> &[f64] {
        &self.nodes1
    }

    pub fn nodes2(&self) -> &[f64] {
        &self.nodes2
    }

    pub fn prior_weights(&self) -> &[f64] {
        &self.prior_weights
    }

    /// Flat node index of `(m1, m2)`.
    pub fn flat_index(&self, m1: usize, m2: usize) -> usize {
        m1 * self.nodes2.len() + m2
    }

    /// `(m1, m2)` for a flat node index.
    pub fn coordinates(&self, m: usize) -> (usize, usize) {
        (m / self.nodes2.len(), m % self.nodes2.len())
    }

    /// Factor values `(z1, z2)` at a flat node index.
    pub fn node(&self, m: usize) -> (f64, f64) {
        let (m1, m2) = self.coordinates(m);
        (self.nodes1[m1], self.nodes2[m2])
    }

    /// Marginal weights of each factor component.
    pub fn marginal_weights(&self) -> (Vec<f64>, Vec<f64>) {
        let (n1, n2) = self.shape();
        let mut w1 = vec![0.0; n1];
        let mut w2 = vec![0.0; n2];
        for (m, g) in self.prior_weights.iter().enumerate() {
            let (a, b) = self.coordinates(m);
            w1[a] += g;
            w2[b] += g;
        }
        (w1, w2)
    }

    /// Whether two grids describe the same factor states.
    pub fn same_nodes(&self, other: &MarketFactorGrid) -> bool {
        self.nodes1 == other.nodes1 && self.nodes2 == other.nodes2
    }
}

/// Gauss-Hermite product grid; each node pair is reweighted by the ratio of the
/// correlated bivariate density to the product density, then renormalised.
pub fn build_market_grid(n1: usize, n2: usize, params: &FactorParams) -> Result<MarketFactorGrid> {
    for n in [n1, n2] {
        if !(1..=64).contains(&n) {
            return Err(Error::InvalidGridSize(n));
        }
    }
    params.validate()?;
    let (z1, w1) = quadrature::standard_normal_rule(n1);
    let (z2, w2) = quadrature::standard_normal_rule(n2);
    let mut weights = Vec::with_capacity(n1 * n2);
    for (a, wa) in z1.iter().zip(&w1) {
        for (b, wb) in z2.iter().zip(&w2) {
            let ratio = normal::bivariate_pdf(*a, *b, params.rho) / (normal::pdf(*a) * normal::pdf(*b));
            weights.push(wa * wb * ratio);
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(MarketFactorGrid {
        nodes1: z1,
        nodes2: z2,
        prior_weights: weights,
    })
}

/// Default probability conditional on a factor state:
/// `Phi((Phi^-1(p) - beta . z) / idio)`. Exact 0 and 1 pass through unchanged.
pub fn conditional_default_prob(p: f64, loadings: &TwoFactorLoadings, z: (f64, f64)) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    normal::cdf((normal::inv_cdf(p) - loadings.systematic(z)) / loadings.idio)
}
