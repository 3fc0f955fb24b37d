//! Beta item response theory: domain types and item characteristic curves.
//!
//! Predictive models play the role of respondents (rows) and individuals play
//! the role of items (columns). A response in `(0, 1)` is modelled as a draw
//! from `Beta(alpha, beta)` with
//!
//! ```text
//! alpha = (theta / delta)^a
//! beta  = ((1 - theta) / (1 - delta))^a
//! ```
//!
//! whose mean is the item characteristic curve (ICC). All functions here are
//! pure.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{FairIrtError, Result};

/// Responses are clamped into `[CLAMP_EPS, 1 - CLAMP_EPS]` so the beta
/// density is defined everywhere.
pub const CLAMP_EPS: f64 = 1e-6;

/// Raw responses may overshoot `[0, 1]` by this much (rounding in upstream
/// tools) before they are rejected.
pub const RANGE_TOLERANCE: f64 = 1e-9;

/// Ability of a predictive model to make fair predictions, in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Ability(f64);

impl Ability {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Ability(value))
        } else {
            Err(FairIrtError::Input(format!(
                "ability must lie in the open interval (0, 1), got {value}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `ln(theta / (1 - theta))`.
    #[inline]
    pub fn logit(self) -> f64 {
        logit(self.0)
    }
}

impl TryFrom<f64> for Ability {
    type Error = FairIrtError;

    fn try_from(value: f64) -> Result<Self> {
        Ability::new(value)
    }
}

impl From<Ability> for f64 {
    fn from(value: Ability) -> f64 {
        value.0
    }
}

impl fmt::Display for Ability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Per-individual item parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawItemParams")]
pub struct ItemParams {
    difficulty: f64,
    discrimination: f64,
}

#[derive(Deserialize)]
struct RawItemParams {
    difficulty: f64,
    discrimination: f64,
}

impl TryFrom<RawItemParams> for ItemParams {
    type Error = FairIrtError;

    fn try_from(raw: RawItemParams) -> Result<Self> {
        ItemParams::new(raw.difficulty, raw.discrimination)
    }
}

impl ItemParams {
    pub fn new(difficulty: f64, discrimination: f64) -> Result<Self> {
        if !(difficulty > 0.0 && difficulty < 1.0) {
            return Err(FairIrtError::Input(format!(
                "difficulty must lie in the open interval (0, 1), got {difficulty}"
            )));
        }
        if !discrimination.is_finite() {
            return Err(FairIrtError::Input(format!(
                "discrimination must be finite, got {discrimination}"
            )));
        }
        Ok(ItemParams {
            difficulty,
            discrimination,
        })
    }

    #[inline]
    pub fn difficulty(&self) -> f64 {
        self.difficulty
    }

    #[inline]
    pub fn discrimination(&self) -> f64 {
        self.discrimination
    }
}

/// Shape parameters of a beta distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaShape {
    alpha: f64,
    beta: f64,
}

impl BetaShape {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
            Ok(BetaShape { alpha, beta })
        } else {
            Err(FairIrtError::Input(format!(
                "beta shape parameters must be finite and positive, got ({alpha}, {beta})"
            )))
        }
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

#[inline]
pub(crate) fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Shape parameters of the response distribution for one (model, individual)
/// cell.
///
/// Computed in log space. Panics if a shape overflows to infinity or
/// underflows to zero, which needs `|a|` in the hundreds; use
/// [`try_beta_shapes`] when inputs are untrusted.
pub fn beta_shapes(theta: Ability, item: &ItemParams) -> BetaShape {
    try_beta_shapes(theta, item).expect("beta shape overflow")
}

pub fn try_beta_shapes(theta: Ability, item: &ItemParams) -> Result<BetaShape> {
    let a = item.discrimination;
    let t = theta.value();
    let d = item.difficulty;
    let log_alpha = a * (t.ln() - d.ln());
    let log_beta = a * ((-t).ln_1p() - (-d).ln_1p());
    BetaShape::new(log_alpha.exp(), log_beta.exp())
}

/// Expected response (the beta ICC) for ability `theta` on `item`.
///
/// Equal to `alpha / (alpha + beta)`, evaluated as
/// `sigmoid(a * (logit(theta) - logit(delta)))` so it never overflows.
pub fn beta_icc(theta: Ability, item: &ItemParams) -> f64 {
    let s = item.discrimination * (theta.logit() - logit(item.difficulty));
    sigmoid(s)
}

/// Classical two-parameter logistic ICC. Here `theta` and `difficulty` live
/// on the real line.
pub fn logistic_icc(theta: f64, difficulty: f64, discrimination: f64) -> f64 {
    sigmoid(discrimination * (theta - difficulty))
}

/// Log density of `Beta(alpha, beta)` at `response`.
///
/// Returns `-inf` outside the open unit interval.
pub fn beta_log_density(response: f64, shape: BetaShape) -> f64 {
    if !(response > 0.0 && response < 1.0) {
        return f64::NEG_INFINITY;
    }
    let (a, b) = (shape.alpha, shape.beta);
    ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + (a - 1.0) * response.ln()
        + (b - 1.0) * (-response).ln_1p()
}

/// Derivative of the beta ICC with respect to ability.
///
/// Uses `f' = a f (1 - f) / (theta (1 - theta))`, which is algebraically the
/// same expression as differentiating `1 / (1 + K u^-a)` with
/// `u = theta / (1 - theta)` and `K = (delta / (1 - delta))^a`, but stays finite
/// for large `|a|`.
pub fn icc_derivative(theta: Ability, item: &ItemParams) -> f64 {
    let f = beta_icc(theta, item);
    let t = theta.value();
    item.discrimination * f * (1.0 - f) / (t * (1.0 - t))
}

/// Flatness indicator: the sum of `|f'(theta)|` over the supplied abilities.
/// Small values mean the individual's expected treatment barely depends on
/// which model is used.
pub fn flatness_indicator(item: &ItemParams, abilities: &[Ability]) -> Result<f64> {
    if abilities.is_empty() {
        return Err(FairIrtError::Input("no respondents".into()));
    }
    Ok(abilities
        .iter()
        .map(|&theta| icc_derivative(theta, item).abs())
        .sum())
}

/// Dense row-major matrix of reals, rows are models and columns individuals.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(FairIrtError::Dimension(format!(
                "{rows}x{cols} grid needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(Grid { rows, cols, values })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Grid { rows, cols, values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.get(i, col))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_means(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().sum::<f64>() / self.cols as f64)
            .collect()
    }
}

/// `N x M` matrix of fairness responses with model (row) and individual
/// (column) labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    model_ids: Vec<String>,
    individual_ids: Vec<String>,
    grid: Grid,
    clamp_count: usize,
}

impl ResponseMatrix {
    /// Builds a matrix from row-major raw responses, clamping into
    /// `[CLAMP_EPS, 1 - CLAMP_EPS]`.
    pub fn new(model_ids: Vec<String>, individual_ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let (n, m) = (model_ids.len(), individual_ids.len());
        if n < 2 || m < 2 {
            return Err(FairIrtError::Dimension(format!(
                "need at least 2 models and 2 individuals, got {n}x{m}"
            )));
        }
        check_unique("model", &model_ids)?;
        check_unique("individual", &individual_ids)?;
        let mut grid = Grid::new(n, m, values)?;
        let mut clamp_count = 0;
        for (k, v) in grid.values.iter_mut().enumerate() {
            if !v.is_finite() || *v < -RANGE_TOLERANCE || *v > 1.0 + RANGE_TOLERANCE {
                return Err(FairIrtError::Input(format!(
                    "response {} for model `{}`, individual `{}` is outside [0, 1]",
                    v,
                    model_ids[k / m],
                    individual_ids[k % m]
                )));
            }
            let clamped = v.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
            if clamped != *v {
                clamp_count += 1;
                *v = clamped;
            }
        }
        Ok(ResponseMatrix {
            model_ids,
            individual_ids,
            grid,
            clamp_count,
        })
    }

    #[inline]
    pub fn n_models(&self) -> usize {
        self.grid.rows
    }

    #[inline]
    pub fn n_individuals(&self) -> usize {
        self.grid.cols
    }

    #[inline]
    pub fn get(&self, model: usize, individual: usize) -> f64 {
        self.grid.get(model, individual)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn individual_ids(&self) -> &[String] {
        &self.individual_ids
    }

    /// Number of raw values that were moved by clamping.
    pub fn clamp_count(&self) -> usize {
        self.clamp_count
    }
}

fn check_unique(axis: &str, labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for label in labels {
        if !seen.insert(label.as_str()) {
            return Err(FairIrtError::Input(format!("duplicate {axis} label `{label}`")));
        }
    }
    Ok(())
}

/// Fitted (or ground-truth) abilities and item parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFitParameters")]
pub struct FitParameters {
    abilities: Vec<Ability>,
    items: Vec<ItemParams>,
    rasch_constrained: bool,
}

#[derive(Deserialize)]
struct RawFitParameters {
    abilities: Vec<Ability>,
    items: Vec<ItemParams>,
    rasch_constrained: bool,
}

impl TryFrom<RawFitParameters> for FitParameters {
    type Error = FairIrtError;

    fn try_from(raw: RawFitParameters) -> Result<Self> {
        FitParameters::new(raw.abilities, raw.items, raw.rasch_constrained)
    }
}

impl FitParameters {
    pub fn new(abilities: Vec<Ability>, items: Vec<ItemParams>, rasch_constrained: bool) -> Result<Self> {
        if rasch_constrained {
            if let Some(bad) = items.iter().position(|it| it.discrimination != 1.0) {
                return Err(FairIrtError::Constraint(format!(
                    "Rasch-constrained parameters need discrimination 1, item {bad} has {}",
                    items[bad].discrimination
                )));
            }
        }
        Ok(FitParameters {
            abilities,
            items,
            rasch_constrained,
        })
    }

    pub fn abilities(&self) -> &[Ability] {
        &self.abilities
    }

    pub fn items(&self) -> &[ItemParams] {
        &self.items
    }

    pub fn rasch_constrained(&self) -> bool {
        self.rasch_constrained
    }

    pub fn n_models(&self) -> usize {
        self.abilities.len()
    }

    pub fn n_individuals(&self) -> usize {
        self.items.len()
    }

    pub(crate) fn ensure_shape(&self, n_models: usize, n_individuals: usize) -> Result<()> {
        if self.abilities.len() != n_models || self.items.len() != n_individuals {
            return Err(FairIrtError::Dimension(format!(
                "parameters are {}x{}, expected {n_models}x{n_individuals}",
                self.abilities.len(),
                self.items.len()
            )));
        }
        Ok(())
    }

    /// Applies `theta -> 1 - theta, delta -> 1 - delta, a -> -a` to every
    /// parameter. Every ICC is unchanged; the shapes map to
    /// `(alpha, beta) -> (1 / beta, 1 / alpha)`, so the response dispersion is not.
    pub fn reflected(&self) -> Result<Self> {
        let abilities = self
            .abilities
            .iter()
            .map(|t| Ability::new(1.0 - t.value()))
            .collect::<Result<Vec<_>>>()?;
        let items = self
            .items
            .iter()
            .map(|it| ItemParams::new(1.0 - it.difficulty, -it.discrimination))
            .collect::<Result<Vec<_>>>()?;
        FitParameters::new(abilities, items, false)
    }
}
