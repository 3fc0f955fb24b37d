//! Post-fit summaries: model ranking, special individuals, flatness ranking,
//! ICC tables and the Rasch decomposition of unfairness.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{FairIrtError, Result};
use crate::fit::{predicted_matrix, FitReport};
use crate::irt::{beta_icc, flatness_indicator, logit, Ability, ItemParams, ResponseMatrix};
use crate::metrics::FairnessFlag;

/// Ability grid used for ICC tables and the uniform flatness domain.
pub const ICC_THETA_RANGE: (f64, f64) = (0.01, 0.99);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub ability: Ability,
    /// Mean expected response of the model over all individuals.
    pub mean_fitted_response: f64,
    /// Mean observed response, for comparison.
    pub mean_observed_response: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualSummary {
    pub individual_id: String,
    pub difficulty: f64,
    pub discrimination: f64,
    pub flatness: f64,
    /// Negative discrimination: less able models treat this individual more
    /// fairly.
    pub special: bool,
}

/// Abilities the flatness indicator sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", content = "points", rename_all = "snake_case")]
pub enum FlatnessDomain {
    /// The fitted abilities of all models.
    #[default]
    FittedAbilities,
    /// A uniform grid of this many points over [`ICC_THETA_RANGE`].
    UniformGrid(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisentangleRecord {
    pub model_id: String,
    pub individual_id: String,
    /// `ln(delta / (1 - delta))`, the individual's share.
    pub log_delta: f64,
    /// `ln((1 - theta) / theta)`, the model's share.
    pub log_theta: f64,
    pub g_value: f64,
    pub flag: FairnessFlag,
}

/// Pearson correlation. `None` if the lengths differ, there are fewer than
/// two points, or either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation, ties get their average rank.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() {
        return None;
    }
    pearson(&ranks(x), &ranks(y))
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut k = 0;
    while k < order.len() {
        let mut end = k;
        while end + 1 < order.len() && x[order[end + 1]] == x[order[k]] {
            end += 1;
        }
        let rank = (k + end) as f64 / 2.0;
        for &idx in &order[k..=end] {
            out[idx] = rank;
        }
        k = end + 1;
    }
    out
}

fn check_report(report: &FitReport) -> Result<()> {
    report
        .parameters
        .ensure_shape(report.model_ids.len(), report.individual_ids.len())
}

/// One summary per model, sorted by ability (highest first) and then by id.
pub fn model_summaries(report: &FitReport, matrix: &ResponseMatrix) -> Result<Vec<ModelSummary>> {
    check_report(report)?;
    let (n, m) = (matrix.n_models(), matrix.n_individuals());
    let predicted = predicted_matrix(&report.parameters, n, m)?;
    let observed = matrix.grid().row_means();
    let mut out: Vec<ModelSummary> = (0..n)
        .map(|i| ModelSummary {
            model_id: report.model_ids[i].clone(),
            ability: report.parameters.abilities()[i],
            mean_fitted_response: predicted.row(i).iter().sum::<f64>() / m as f64,
            mean_observed_response: observed[i],
        })
        .collect();
    out.sort_by(|a, b| {
        b.ability
            .value()
            .total_cmp(&a.ability.value())
            .then_with(|| a.model_id.cmp(&b.model_id))
    });
    Ok(out)
}

fn flatness_abilities(report: &FitReport, domain: FlatnessDomain) -> Result<Vec<Ability>> {
    match domain {
        FlatnessDomain::FittedAbilities => Ok(report.parameters.abilities().to_vec()),
        FlatnessDomain::UniformGrid(points) => theta_grid(points)?.into_iter().map(Ability::new).collect(),
    }
}

/// Per-individual summaries in column order.
pub fn individual_summaries(report: &FitReport, domain: FlatnessDomain) -> Result<Vec<IndividualSummary>> {
    check_report(report)?;
    let abilities = flatness_abilities(report, domain)?;
    report
        .parameters
        .items()
        .iter()
        .zip(&report.individual_ids)
        .map(|(item, id)| {
            Ok(IndividualSummary {
                individual_id: id.clone(),
                difficulty: item.difficulty(),
                discrimination: item.discrimination(),
                flatness: flatness_indicator(item, &abilities)?,
                special: item.discrimination() < 0.0,
            })
        })
        .collect()
}

/// Individuals with negative discrimination, most negative first.
pub fn special_individuals(report: &FitReport) -> Result<Vec<IndividualSummary>> {
    let mut out: Vec<IndividualSummary> = individual_summaries(report, FlatnessDomain::FittedAbilities)?
        .into_iter()
        .filter(|s| s.special)
        .collect();
    out.sort_by(|a, b| {
        a.discrimination
            .total_cmp(&b.discrimination)
            .then_with(|| a.individual_id.cmp(&b.individual_id))
    });
    Ok(out)
}

fn flatness_order(a: &IndividualSummary, b: &IndividualSummary) -> Ordering {
    a.flatness
        .total_cmp(&b.flatness)
        .then_with(|| a.individual_id.cmp(&b.individual_id))
}

/// The `k` individuals with the smallest flatness indicator, flattest first.
pub fn flattest_individuals(report: &FitReport, k: usize) -> Result<Vec<IndividualSummary>> {
    flattest_individuals_in(report, k, FlatnessDomain::FittedAbilities)
}

pub fn flattest_individuals_in(report: &FitReport, k: usize, domain: FlatnessDomain) -> Result<Vec<IndividualSummary>> {
    let m = report.individual_ids.len();
    if k == 0 || k > m {
        return Err(FairIrtError::Input(format!("k must lie in 1..={m}, got {k}")));
    }
    let mut all = individual_summaries(report, domain)?;
    all.sort_by(flatness_order);
    all.truncate(k);
    Ok(all)
}

fn theta_grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(FairIrtError::Input(format!("grid needs at least 2 points, got {points}")));
    }
    let (lo, hi) = ICC_THETA_RANGE;
    Ok((0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect())
}

/// `(theta, expected response)` on a uniform grid of `grid_size` points.
pub fn tabulate_icc(item: &ItemParams, grid_size: usize) -> Result<Vec<(f64, f64)>> {
    theta_grid(grid_size)?
        .into_iter()
        .map(|t| Ok((t, beta_icc(Ability::new(t)?, item))))
        .collect()
}

/// Smallest and largest fitted ability.
pub fn fitted_ability_range(report: &FitReport) -> Option<(f64, f64)> {
    let values = report.parameters.abilities().iter().map(|t| t.value());
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// `g = log_delta + log_theta`; positive `g` means the expected response is
/// below 1/2. `g = 0` is flagged unfair.
pub fn rasch_decomposition(log_delta: f64, log_theta: f64) -> (f64, FairnessFlag) {
    let g = log_delta + log_theta;
    let flag = if g >= 0.0 {
        FairnessFlag::Unfair
    } else {
        FairnessFlag::Fair
    };
    (g, flag)
}

/// Splits each cell's unfairness into an individual part and a model part.
/// Records are in row-major order (model by model).
pub fn disentangle(rasch_report: &FitReport) -> Result<Vec<DisentangleRecord>> {
    let params = &rasch_report.parameters;
    if !params.rasch_constrained() {
        return Err(FairIrtError::Constraint(
            "disentangling requires the Rasch-constrained fit".into(),
        ));
    }
    check_report(rasch_report)?;
    let mut out = Vec::with_capacity(params.n_models() * params.n_individuals());
    for (theta, model_id) in params.abilities().iter().zip(&rasch_report.model_ids) {
        let log_theta = -theta.logit();
        for (item, individual_id) in params.items().iter().zip(&rasch_report.individual_ids) {
            let log_delta = logit(item.difficulty());
            let (g_value, flag) = rasch_decomposition(log_delta, log_theta);
            out.push(DisentangleRecord {
                model_id: model_id.clone(),
                individual_id: individual_id.clone(),
                log_delta,
                log_theta,
                g_value,
                flag,
            });
        }
    }
    Ok(out)
}
