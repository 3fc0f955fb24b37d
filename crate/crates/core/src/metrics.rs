//! Per-(model, individual) fairness responses.
//!
//! A prediction pair holds one model's output for one individual with the
//! sensitive attribute as observed and flipped. The situation test score
//! (STS) is one minus the disparity between the two; the equalised score (ES)
//! applies the same arithmetic after conditioning on the true label.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FairIrtError, Result};
use crate::irt::ResponseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    #[default]
    Classification,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    #[default]
    Sts,
    Es,
}

/// Which label values an equalised score is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EsCondition {
    /// Both label values (equalised odds).
    #[default]
    Odds,
    /// Only individuals with a positive label (equality of opportunity).
    Opportunity,
}

/// Scaling factor for regression scores.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "LambdaRepr", into = "LambdaRepr")]
pub enum LambdaMode {
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LambdaRepr {
    Value(f64),
    Text(String),
}

impl TryFrom<LambdaRepr> for LambdaMode {
    type Error = FairIrtError;

    fn try_from(repr: LambdaRepr) -> Result<Self> {
        match repr {
            LambdaRepr::Value(v) => Ok(LambdaMode::Fixed(v)),
            LambdaRepr::Text(s) => s.parse(),
        }
    }
}

impl From<LambdaMode> for LambdaRepr {
    fn from(mode: LambdaMode) -> Self {
        match mode {
            LambdaMode::Auto => LambdaRepr::Text("auto".into()),
            LambdaMode::Fixed(v) => LambdaRepr::Value(v),
        }
    }
}

impl FromStr for LambdaMode {
    type Err = FairIrtError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(LambdaMode::Auto);
        }
        s.parse::<f64>()
            .map(LambdaMode::Fixed)
            .map_err(|_| FairIrtError::Config(format!("lambda must be `auto` or a number, got `{s}`")))
    }
}

impl fmt::Display for LambdaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaMode::Auto => f.write_str("auto"),
            LambdaMode::Fixed(v) => v.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub task: Task,
    pub metric: MetricKind,
    pub es_condition: EsCondition,
    /// Responses strictly above this are fair.
    pub epsilon: f64,
    pub lambda: LambdaMode,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            task: Task::Classification,
            metric: MetricKind::Sts,
            es_condition: EsCondition::Odds,
            epsilon: 0.5,
            lambda: LambdaMode::Auto,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(FairIrtError::Config(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if let LambdaMode::Fixed(v) = self.lambda {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FairIrtError::Config(format!("lambda must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// One model's prediction for one individual under the observed and the
/// flipped sensitive attribute.
///
/// For classification the values are whatever probability the caller chose to
/// supply (positive class or predicted class); this crate does not interpret
/// them beyond requiring `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionPairRecord {
    pub model_id: String,
    pub individual_id: String,
    pub value_original: f64,
    pub value_flipped: f64,
    #[serde(default)]
    pub label: Option<bool>,
}

impl PredictionPairRecord {
    pub fn new(
        model_id: impl Into<String>,
        individual_id: impl Into<String>,
        value_original: f64,
        value_flipped: f64,
    ) -> Self {
        PredictionPairRecord {
            model_id: model_id.into(),
            individual_id: individual_id.into(),
            value_original,
            value_flipped,
            label: None,
        }
    }

    pub fn with_label(mut self, label: bool) -> Self {
        self.label = Some(label);
        self
    }

    fn location(&self) -> String {
        format!("model `{}`, individual `{}`", self.model_id, self.individual_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FairnessFlag {
    Fair,
    Unfair,
}

impl fmt::Display for FairnessFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FairnessFlag::Fair => "fair",
            FairnessFlag::Unfair => "unfair",
        })
    }
}

/// Situation test score for probabilistic classifiers: `1 - |p - p_flipped|`.
pub fn sts_classification(p_original: f64, p_flipped: f64) -> Result<f64> {
    for p in [p_original, p_flipped] {
        if !(0.0..=1.0).contains(&p) {
            return Err(FairIrtError::Input(format!(
                "classification probability {p} is outside [0, 1]"
            )));
        }
    }
    Ok(1.0 - (p_original - p_flipped).abs())
}

/// `|(y - y_flipped) / y|`.
pub fn relative_difference(y_original: f64, y_flipped: f64) -> Result<f64> {
    if !y_original.is_finite() || !y_flipped.is_finite() {
        return Err(FairIrtError::Input(format!(
            "regression predictions must be finite, got ({y_original}, {y_flipped})"
        )));
    }
    if y_original == 0.0 {
        return Err(FairIrtError::UndefinedRelativeDifference(String::new()));
    }
    Ok(((y_original - y_flipped) / y_original).abs())
}

/// Situation test score for regressors: `1 - lambda |(y - y_flipped) / y|`.
pub fn sts_regression(y_original: f64, y_flipped: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(FairIrtError::Config(format!("lambda must be positive, got {lambda}")));
    }
    Ok(1.0 - lambda * relative_difference(y_original, y_flipped)?)
}

/// Largest scaling factor not above 1 that keeps every regression score in
/// `[0, 1]`: `min(1, 1 / r_max)`. Records with `y_original == 0` are skipped.
pub fn auto_lambda(records: &[PredictionPairRecord]) -> Result<f64> {
    let mut r_max: Option<f64> = None;
    for rec in records {
        match relative_difference(rec.value_original, rec.value_flipped) {
            Ok(r) => r_max = Some(r_max.map_or(r, |m: f64| m.max(r))),
            Err(FairIrtError::UndefinedRelativeDifference(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let r_max = r_max.ok_or_else(|| {
        FairIrtError::Input("auto lambda needs at least one record with a non-zero original prediction".into())
    })?;
    if r_max <= 1.0 {
        return Ok(1.0);
    }
    // 1 / r_max can round up far enough that the worst score dips below 0.
    let mut lambda = 1.0 / r_max;
    while 1.0 - lambda * r_max < 0.0 {
        lambda = lambda.next_down();
    }
    Ok(lambda)
}

/// Equalised score: the STS arithmetic for a record whose true label is
/// known. Conditioning (which labels enter the matrix) is applied by
/// [`build_response_matrix`].
///
/// Regression needs a resolved lambda; `LambdaMode::Auto` is rejected here
/// because it depends on the whole batch.
pub fn equalised_score(p_original: f64, p_flipped: f64, label: Option<bool>, config: &MetricConfig) -> Result<f64> {
    if label.is_none() {
        return Err(FairIrtError::Input("equalised score needs the true label".into()));
    }
    match config.task {
        Task::Classification => sts_classification(p_original, p_flipped),
        Task::Regression => match config.lambda {
            LambdaMode::Fixed(lambda) => sts_regression(p_original, p_flipped, lambda),
            LambdaMode::Auto => Err(FairIrtError::Config(
                "auto lambda must be resolved over the batch before scoring a single record".into(),
            )),
        },
    }
}

/// Fair iff `response > epsilon`; a tie is flagged unfair.
pub fn fairness_flag(response: f64, epsilon: f64) -> FairnessFlag {
    if response > epsilon {
        FairnessFlag::Fair
    } else {
        FairnessFlag::Unfair
    }
}

/// Result of turning prediction pairs into a response matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseBuild {
    pub matrix: ResponseMatrix,
    /// Regression scaling factor actually used.
    pub lambda: Option<f64>,
    /// Regression records with `y_original == 0`.
    pub excluded_records: usize,
    /// Individuals removed because one of their records was excluded; the
    /// fit needs a complete grid.
    pub dropped_individuals: Vec<String>,
    /// Individuals left out by label conditioning (ES opportunity mode).
    pub unconditioned_individuals: Vec<String>,
}

/// Scores every record and assembles the `N x M` matrix.
///
/// Rows follow the first appearance of each model id and columns the first
/// appearance of each individual id. Every (model, individual) pair must
/// appear exactly once.
pub fn build_response_matrix(records: &[PredictionPairRecord], config: &MetricConfig) -> Result<ResponseBuild> {
    config.validate()?;
    if records.is_empty() {
        return Err(FairIrtError::Input("no records".into()));
    }

    let model_ids = first_appearance(records.iter().map(|r| r.model_id.as_str()));
    let individual_ids = first_appearance(records.iter().map(|r| r.individual_id.as_str()));
    let model_index: HashMap<&str, usize> = model_ids.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
    let individual_index: HashMap<&str, usize> =
        individual_ids.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();

    let (n, m) = (model_ids.len(), individual_ids.len());
    let mut cells: Vec<Option<&PredictionPairRecord>> = vec![None; n * m];
    for rec in records {
        let k = model_index[rec.model_id.as_str()] * m + individual_index[rec.individual_id.as_str()];
        if cells[k].is_some() {
            return Err(FairIrtError::Input(format!("duplicate record for {}", rec.location())));
        }
        cells[k] = Some(rec);
    }
    let missing: Vec<String> = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_none())
        .map(|(k, _)| format!("({}, {})", model_ids[k / m], individual_ids[k % m]))
        .collect();
    if !missing.is_empty() {
        const SHOWN: usize = 20;
        let mut msg = format!("missing {} (model, individual) pairs: ", missing.len());
        msg.push_str(&missing[..missing.len().min(SHOWN)].join(", "));
        if missing.len() > SHOWN {
            msg.push_str(&format!(", and {} more", missing.len() - SHOWN));
        }
        return Err(FairIrtError::Input(msg));
    }
    let cells: Vec<&PredictionPairRecord> = cells.into_iter().map(|c| c.unwrap()).collect();

    let mut keep = vec![true; m];
    let mut unconditioned_individuals = Vec::new();
    if config.metric == MetricKind::Es {
        let mut labels: Vec<Option<bool>> = vec![None; m];
        for (k, rec) in cells.iter().enumerate() {
            let label = rec
                .label
                .ok_or_else(|| FairIrtError::Input(format!("missing label for {}", rec.location())))?;
            let j = k % m;
            match labels[j] {
                Some(prev) if prev != label => {
                    return Err(FairIrtError::Input(format!(
                        "individual `{}` has inconsistent labels across models",
                        individual_ids[j]
                    )))
                }
                _ => labels[j] = Some(label),
            }
        }
        if config.es_condition == EsCondition::Opportunity {
            for j in 0..m {
                if labels[j] == Some(false) {
                    keep[j] = false;
                    unconditioned_individuals.push(individual_ids[j].clone());
                }
            }
        }
    }

    let mut excluded_records = 0;
    let mut dropped = HashSet::new();
    if config.task == Task::Regression {
        for (k, rec) in cells.iter().enumerate() {
            if rec.value_original == 0.0 {
                excluded_records += 1;
                if keep[k % m] {
                    dropped.insert(k % m);
                }
            }
        }
    }
    for &j in &dropped {
        keep[j] = false;
    }
    let mut dropped_individuals: Vec<usize> = dropped.into_iter().collect();
    dropped_individuals.sort_unstable();
    let dropped_individuals = dropped_individuals.into_iter().map(|j| individual_ids[j].clone()).collect();

    let lambda = match config.task {
        Task::Classification => None,
        Task::Regression => Some(match config.lambda {
            LambdaMode::Fixed(v) => v,
            LambdaMode::Auto => {
                let kept: Vec<PredictionPairRecord> = cells
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| keep[k % m])
                    .map(|(_, r)| (*r).clone())
                    .collect();
                auto_lambda(&kept)?
            }
        }),
    };

    let kept_columns: Vec<usize> = (0..m).filter(|&j| keep[j]).collect();
    let mut values = Vec::with_capacity(n * kept_columns.len());
    for i in 0..n {
        for &j in &kept_columns {
            let rec = cells[i * m + j];
            let score = match (config.task, lambda) {
                (Task::Classification, _) => sts_classification(rec.value_original, rec.value_flipped),
                (Task::Regression, Some(lambda)) => sts_regression(rec.value_original, rec.value_flipped, lambda),
                (Task::Regression, None) => unreachable!("regression lambda is always resolved"),
            }
            .map_err(|e| match e {
                FairIrtError::Input(msg) => FairIrtError::Input(format!("{msg} ({})", rec.location())),
                other => other,
            })?;
            if score < 0.0 {
                return Err(FairIrtError::Input(format!(
                    "score {score} below 0 for {}; lower lambda or use `auto`",
                    rec.location()
                )));
            }
            values.push(score);
        }
    }

    let kept_ids = kept_columns.iter().map(|&j| individual_ids[j].clone()).collect();
    let matrix = ResponseMatrix::new(model_ids, kept_ids, values)?;
    Ok(ResponseBuild {
        matrix,
        lambda,
        excluded_records,
        dropped_individuals,
        unconditioned_individuals,
    })
}

fn first_appearance<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    ids.filter(|id| seen.insert(*id)).map(str::to_owned).collect()
}
