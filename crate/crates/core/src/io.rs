//! File formats and the end-to-end pipeline.
//!
//! * prediction pairs: CSV with header
//!   `model_id,individual_id,value_original,value_flipped[,label]`
//! * response matrix: CSV whose first row holds individual ids and first
//!   column model ids
//! * fit reports and ground truth: JSON with a `format_version` field
//! * curves, summaries and Rasch decompositions: long-format CSV
//! * pipeline manifest: TOML
//!
//! Floats are written in the shortest form that parses back to the same bits.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    disentangle, fitted_ability_range, flattest_individuals_in, individual_summaries, model_summaries, pearson,
    special_individuals, tabulate_icc, DisentangleRecord, FlatnessDomain, IndividualSummary, ModelSummary,
};
use crate::error::{FairIrtError, Result};
use crate::fit::{fit_beta_irt, FitConfig, FitReport};
use crate::irt::{FitParameters, ResponseMatrix};
use crate::metrics::{build_response_matrix, MetricConfig, PredictionPairRecord};
use crate::simulate::{simulate, SimulationSpec};

pub const FORMAT_VERSION: u32 = 1;

const PAIR_COLUMNS: [&str; 4] = ["model_id", "individual_id", "value_original", "value_flipped"];

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| FairIrtError::io(path, e))
}

fn write_string(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| FairIrtError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| FairIrtError::io(path, e))
}

fn parse_label(raw: &str) -> Option<Option<bool>> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "" => Some(None),
        "1" | "true" => Some(Some(true)),
        "0" | "false" => Some(Some(false)),
        _ => None,
    }
}

/// Parses prediction pairs from CSV text. `path` only labels errors.
///
/// All malformed rows are collected into one error, each with its line
/// number.
pub fn parse_prediction_pairs(text: &str, path: &Path) -> Result<Vec<PredictionPairRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| FairIrtError::parse(path, e.to_string()))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 4];
    for (slot, name) in idx.iter_mut().zip(PAIR_COLUMNS) {
        *slot = column(name).ok_or_else(|| FairIrtError::parse(path, format!("missing required column `{name}`")))?;
    }
    let label_idx = column("label");

    let mut records = Vec::new();
    let mut problems = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                problems.push(e.to_string());
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let field = |k: usize| row.get(k).unwrap_or("");
        if row.len() != headers.len() {
            problems.push(format!("line {line}: expected {} fields, found {}", headers.len(), row.len()));
            continue;
        }
        let mut numbers = [0.0; 2];
        let mut ok = true;
        for (slot, k) in numbers.iter_mut().zip([idx[2], idx[3]]) {
            match field(k).parse::<f64>() {
                Ok(v) if v.is_finite() => *slot = v,
                _ => {
                    problems.push(format!("line {line}: `{}` is not a finite number", field(k)));
                    ok = false;
                }
            }
        }
        let label = match label_idx.map(|k| parse_label(field(k))) {
            None => None,
            Some(Some(l)) => l,
            Some(None) => {
                problems.push(format!("line {line}: label `{}` is not 0/1", field(label_idx.unwrap())));
                ok = false;
                None
            }
        };
        let (model, individual) = (field(idx[0]), field(idx[1]));
        if model.is_empty() || individual.is_empty() {
            problems.push(format!("line {line}: empty id"));
            continue;
        }
        if !seen.insert((model.to_owned(), individual.to_owned())) {
            problems.push(format!("line {line}: duplicate pair ({model}, {individual})"));
            continue;
        }
        if ok {
            records.push(PredictionPairRecord {
                model_id: model.to_owned(),
                individual_id: individual.to_owned(),
                value_original: numbers[0],
                value_flipped: numbers[1],
                label,
            });
        }
    }
    if !problems.is_empty() {
        return Err(FairIrtError::parse(path, problems.join("; ")));
    }
    if records.is_empty() {
        return Err(FairIrtError::parse(path, "no records"));
    }
    Ok(records)
}

pub fn read_prediction_pairs(path: impl AsRef<Path>) -> Result<Vec<PredictionPairRecord>> {
    let path = path.as_ref();
    parse_prediction_pairs(&read_to_string(path)?, path)
}

pub fn write_prediction_pairs(path: impl AsRef<Path>, records: &[PredictionPairRecord]) -> Result<()> {
    let with_label = records.iter().any(|r| r.label.is_some());
    let mut out = PAIR_COLUMNS.join(",");
    if with_label {
        out.push_str(",label");
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}",
            r.model_id, r.individual_id, r.value_original, r.value_flipped
        ));
        if with_label {
            out.push(',');
            if let Some(l) = r.label {
                out.push(if l { '1' } else { '0' });
            }
        }
        out.push('\n');
    }
    write_string(path.as_ref(), &out)
}

/// Parses a labelled response matrix from CSV text.
pub fn parse_response_matrix(text: &str, path: &Path) -> Result<ResponseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();
    let header = match rows.next() {
        Some(r) => r.map_err(|e| FairIrtError::parse(path, e.to_string()))?,
        None => return Err(FairIrtError::parse(path, "empty matrix file")),
    };
    let individual_ids: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut model_ids = Vec::new();
    let mut values = Vec::new();
    for row in rows {
        let row = row.map_err(|e| FairIrtError::parse(path, e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != header.len() {
            return Err(FairIrtError::parse(
                path,
                format!("line {line}: ragged row with {} fields, header has {}", row.len(), header.len()),
            ));
        }
        model_ids.push(row[0].to_owned());
        for cell in row.iter().skip(1) {
            let v: f64 = cell
                .parse()
                .map_err(|_| FairIrtError::parse(path, format!("line {line}: `{cell}` is not a number")))?;
            values.push(v);
        }
    }
    ResponseMatrix::new(model_ids, individual_ids, values).map_err(|e| match e {
        FairIrtError::Input(msg) => FairIrtError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_response_matrix(path: impl AsRef<Path>) -> Result<ResponseMatrix> {
    let path = path.as_ref();
    parse_response_matrix(&read_to_string(path)?, path)
}

pub fn format_response_matrix(matrix: &ResponseMatrix) -> String {
    let mut out = String::from("model_id");
    for id in matrix.individual_ids() {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (i, id) in matrix.model_ids().iter().enumerate() {
        out.push_str(id);
        for v in matrix.grid().row(i) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_response_matrix(path: impl AsRef<Path>, matrix: &ResponseMatrix) -> Result<()> {
    write_string(path.as_ref(), &format_response_matrix(matrix))
}

#[derive(Serialize)]
struct VersionedRef<'a, T> {
    format_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: Option<u32>,
}

fn to_versioned_json<T: Serialize>(body: &T) -> String {
    let mut s = serde_json::to_string_pretty(&VersionedRef {
        format_version: FORMAT_VERSION,
        body,
    })
    .expect("serializable");
    s.push('\n');
    s
}

fn from_versioned_json<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| FairIrtError::parse(path, e.to_string()))?;
    match probe.format_version {
        Some(FORMAT_VERSION) => {}
        Some(found) => {
            return Err(FairIrtError::Version {
                found,
                expected: FORMAT_VERSION,
            })
        }
        None => return Err(FairIrtError::parse(path, "missing format_version")),
    }
    serde_json::from_str(text).map_err(|e| FairIrtError::parse(path, e.to_string()))
}

pub fn fit_report_to_json(report: &FitReport) -> String {
    to_versioned_json(report)
}

pub fn fit_report_from_json(text: &str, path: &Path) -> Result<FitReport> {
    let report: FitReport = from_versioned_json(text, path)?;
    report.parameters_match_ids().map_err(|e| FairIrtError::parse(path, e.to_string()))?;
    Ok(report)
}

pub fn write_fit_report(path: impl AsRef<Path>, report: &FitReport) -> Result<()> {
    write_string(path.as_ref(), &fit_report_to_json(report))
}

pub fn read_fit_report(path: impl AsRef<Path>) -> Result<FitReport> {
    let path = path.as_ref();
    fit_report_from_json(&read_to_string(path)?, path)
}

/// Ground-truth parameters of a simulation, with their labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub model_ids: Vec<String>,
    pub individual_ids: Vec<String>,
    pub spec: SimulationSpec,
    pub parameters: FitParameters,
}

pub fn write_truth(path: impl AsRef<Path>, truth: &TruthFile) -> Result<()> {
    write_string(path.as_ref(), &to_versioned_json(truth))
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<TruthFile> {
    let path = path.as_ref();
    from_versioned_json(&read_to_string(path)?, path)
}

fn to_csv<T: Serialize>(rows: &[T], header_comment: Option<&str>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("in-memory csv");
    }
    let body = String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf8");
    match header_comment {
        Some(c) => format!("# {c}\n{body}"),
        None => body,
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header_comment: Option<&str>) -> Result<()> {
    write_string(path, &to_csv(rows, header_comment))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub individual_id: String,
    pub theta: f64,
    pub response: f64,
}

/// Long-format ICC table: one row per (individual, grid point).
pub fn curve_points(report: &FitReport, grid_size: usize) -> Result<Vec<CurvePoint>> {
    report.parameters_match_ids()?;
    let mut out = Vec::with_capacity(grid_size * report.individual_ids.len());
    for (item, id) in report.parameters.items().iter().zip(&report.individual_ids) {
        for (theta, response) in tabulate_icc(item, grid_size)? {
            out.push(CurvePoint {
                individual_id: id.clone(),
                theta,
                response,
            });
        }
    }
    Ok(out)
}

/// Writes the curve table. The first line is a comment
/// `# fitted_ability_range: min,max` so plots can shade the region the
/// models actually occupy.
pub fn export_curves(report: &FitReport, grid_size: usize, path: impl AsRef<Path>) -> Result<()> {
    let points = curve_points(report, grid_size)?;
    let (lo, hi) = fitted_ability_range(report).ok_or_else(|| FairIrtError::Input("report has no models".into()))?;
    write_csv(path.as_ref(), &points, Some(&format!("fitted_ability_range: {lo},{hi}")))
}

/// Reads a curve table written by [`export_curves`], returning the range
/// comment and the points.
pub fn read_curves(path: impl AsRef<Path>) -> Result<((f64, f64), Vec<CurvePoint>)> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let range = first
        .strip_prefix("# fitted_ability_range: ")
        .and_then(|r| r.split_once(','))
        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
        .ok_or_else(|| FairIrtError::parse(path, "missing fitted_ability_range comment"))?;
    let mut reader = csv::Reader::from_reader(rest.as_bytes());
    let points = reader
        .deserialize()
        .collect::<std::result::Result<Vec<CurvePoint>, _>>()
        .map_err(|e| FairIrtError::parse(path, e.to_string()))?;
    Ok((range, points))
}

pub fn write_disentangle(path: impl AsRef<Path>, records: &[DisentangleRecord]) -> Result<()> {
    write_csv(path.as_ref(), records, None)
}

pub fn read_disentangle(path: impl AsRef<Path>) -> Result<Vec<DisentangleRecord>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<DisentangleRecord>, _>>()
        .map_err(|e| FairIrtError::parse(path, e.to_string()))
}

pub fn write_model_summaries(path: impl AsRef<Path>, rows: &[ModelSummary]) -> Result<()> {
    write_csv(path.as_ref(), rows, None)
}

pub fn write_individual_summaries(path: impl AsRef<Path>, rows: &[IndividualSummary]) -> Result<()> {
    write_csv(path.as_ref(), rows, None)
}

impl FitReport {
    /// Checks that the id lists match the parameter dimensions.
    pub fn parameters_match_ids(&self) -> Result<()> {
        self.parameters
            .ensure_shape(self.model_ids.len(), self.individual_ids.len())
    }
}

/// Where the pipeline gets its response matrix from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSource {
    Simulate {
        #[serde(default)]
        spec: SimulationSpec,
    },
    Pairs {
        path: PathBuf,
    },
    Matrix {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub top_k: usize,
    pub grid: usize,
    pub flatness: FlatnessDomain,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            top_k: 5,
            grid: 200,
            flatness: FlatnessDomain::FittedAbilities,
        }
    }
}

/// Pipeline description. Relative paths are resolved against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceManifest {
    pub format_version: u32,
    pub input: InputSource,
    #[serde(default)]
    pub metric: MetricConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    pub output_dir: PathBuf,
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<WorkspaceManifest> {
    let value: toml::Table = toml::from_str(text).map_err(|e| FairIrtError::parse(path, e.to_string()))?;
    match value.get("format_version").and_then(|v| v.as_integer()) {
        Some(v) if v == FORMAT_VERSION as i64 => {}
        Some(v) => {
            return Err(FairIrtError::Version {
                found: u32::try_from(v).unwrap_or(u32::MAX),
                expected: FORMAT_VERSION,
            })
        }
        None => return Err(FairIrtError::parse(path, "missing integer format_version")),
    }
    let manifest: WorkspaceManifest = toml::from_str(text).map_err(|e| FairIrtError::parse(path, e.to_string()))?;
    manifest.metric.validate()?;
    manifest.fit.validate()?;
    if let InputSource::Simulate { spec } = &manifest.input {
        spec.validate()?;
    }
    Ok(manifest)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<WorkspaceManifest> {
    let path = path.as_ref();
    parse_manifest(&read_to_string(path)?, path)
}

/// Recovery statistics when the truth is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub ability_pearson: Option<f64>,
    pub difficulty_pearson: Option<f64>,
    pub discrimination_pearson: Option<f64>,
    /// Items with `|a*| >= 0.5` whose fitted sign matches.
    pub sign_agreement: usize,
    pub sign_checked: usize,
    pub true_special: Vec<String>,
}

impl Recovery {
    pub fn compute(truth: &FitParameters, fitted: &FitParameters, individual_ids: &[String]) -> Result<Self> {
        fitted.ensure_shape(truth.n_models(), truth.n_individuals())?;
        let col = |p: &FitParameters, f: fn(&crate::irt::ItemParams) -> f64| p.items().iter().map(f).collect::<Vec<_>>();
        let theta = |p: &FitParameters| p.abilities().iter().map(|t| t.value()).collect::<Vec<_>>();
        let (a_true, a_fit) = (col(truth, |it| it.discrimination()), col(fitted, |it| it.discrimination()));
        let checked: Vec<usize> = (0..a_true.len()).filter(|&j| a_true[j].abs() >= 0.5).collect();
        Ok(Recovery {
            ability_pearson: pearson(&theta(truth), &theta(fitted)),
            difficulty_pearson: pearson(&col(truth, |it| it.difficulty()), &col(fitted, |it| it.difficulty())),
            discrimination_pearson: pearson(&a_true, &a_fit),
            sign_agreement: checked
                .iter()
                .filter(|&&j| a_true[j].signum() == a_fit[j].signum())
                .count(),
            sign_checked: checked.len(),
            true_special: (0..a_true.len())
                .filter(|&j| a_true[j] < 0.0)
                .map(|j| individual_ids[j].clone())
                .collect(),
        })
    }
}

/// Top-level facts about a pipeline run, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub n_models: usize,
    pub n_individuals: usize,
    pub clamp_count: usize,
    pub excluded_records: usize,
    pub dropped_individuals: Vec<String>,
    pub unconditioned_individuals: Vec<String>,
    pub lambda: Option<f64>,
    pub final_loss: f64,
    pub rasch_final_loss: f64,
    pub converged: bool,
    pub rasch_converged: bool,
    pub epochs_run: usize,
    pub rasch_epochs_run: usize,
    pub reflected: bool,
    pub special_individuals: Vec<String>,
    pub flattest_individuals: Vec<String>,
    pub recovery: Option<Recovery>,
}

/// File names the pipeline writes inside `output_dir`.
pub mod artifacts {
    pub const TRUTH: &str = "truth.json";
    pub const MATRIX: &str = "matrix.csv";
    pub const FIT: &str = "fit.json";
    pub const RASCH_FIT: &str = "fit_rasch.json";
    pub const MODELS: &str = "models.csv";
    pub const INDIVIDUALS: &str = "individuals.csv";
    pub const SPECIAL: &str = "special.csv";
    pub const FLATTEST: &str = "flattest.csv";
    pub const CURVES: &str = "curves.csv";
    pub const DISENTANGLE: &str = "disentangle.csv";
    pub const SUMMARY: &str = "summary.json";
}

/// Runs every stage described by the manifest at `manifest_path` and writes
/// the artifacts listed in [`artifacts`].
pub fn run_pipeline(manifest_path: impl AsRef<Path>) -> Result<PipelineSummary> {
    let manifest_path = manifest_path.as_ref();
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    run_manifest(&manifest, base)
}

/// Like [`run_pipeline`] for an already parsed manifest; relative paths are
/// resolved against `base`.
pub fn run_manifest(manifest: &WorkspaceManifest, base: &Path) -> Result<PipelineSummary> {
    let out = base.join(&manifest.output_dir);
    fs::create_dir_all(&out).map_err(|e| FairIrtError::io(&out, e))?;

    let mut excluded_records = 0;
    let mut dropped_individuals = Vec::new();
    let mut unconditioned_individuals = Vec::new();
    let mut lambda = None;
    let mut truth = None;
    let matrix = match &manifest.input {
        InputSource::Simulate { spec } => {
            let (params, matrix) = simulate(spec)?;
            let file = TruthFile {
                model_ids: spec.model_ids(),
                individual_ids: spec.individual_ids(),
                spec: *spec,
                parameters: params,
            };
            write_truth(out.join(artifacts::TRUTH), &file)?;
            truth = Some(file);
            matrix
        }
        InputSource::Pairs { path } => {
            let records = read_prediction_pairs(base.join(path))?;
            let built = build_response_matrix(&records, &manifest.metric)?;
            excluded_records = built.excluded_records;
            dropped_individuals = built.dropped_individuals;
            unconditioned_individuals = built.unconditioned_individuals;
            lambda = built.lambda;
            built.matrix
        }
        InputSource::Matrix { path } => read_response_matrix(base.join(path))?,
    };
    write_response_matrix(out.join(artifacts::MATRIX), &matrix)?;

    let full_config = FitConfig {
        rasch: false,
        ..manifest.fit
    };
    let rasch_config = FitConfig {
        rasch: true,
        ..manifest.fit
    };
    let full = fit_beta_irt(&matrix, &full_config)?;
    let rasch = fit_beta_irt(&matrix, &rasch_config)?;
    write_fit_report(out.join(artifacts::FIT), &full)?;
    write_fit_report(out.join(artifacts::RASCH_FIT), &rasch)?;

    let a = &manifest.analysis;
    write_model_summaries(out.join(artifacts::MODELS), &model_summaries(&full, &matrix)?)?;
    write_individual_summaries(out.join(artifacts::INDIVIDUALS), &individual_summaries(&full, a.flatness)?)?;
    let special = special_individuals(&full)?;
    write_individual_summaries(out.join(artifacts::SPECIAL), &special)?;
    let k = a.top_k.min(matrix.n_individuals());
    let flattest = flattest_individuals_in(&full, k, a.flatness)?;
    write_individual_summaries(out.join(artifacts::FLATTEST), &flattest)?;
    export_curves(&full, a.grid, out.join(artifacts::CURVES))?;
    write_disentangle(out.join(artifacts::DISENTANGLE), &disentangle(&rasch)?)?;

    let recovery = match &truth {
        Some(t) => Some(Recovery::compute(&t.parameters, &full.parameters, &t.individual_ids)?),
        None => None,
    };
    let summary = PipelineSummary {
        n_models: matrix.n_models(),
        n_individuals: matrix.n_individuals(),
        clamp_count: matrix.clamp_count(),
        excluded_records,
        dropped_individuals,
        unconditioned_individuals,
        lambda,
        final_loss: full.final_loss,
        rasch_final_loss: rasch.final_loss,
        converged: full.converged,
        rasch_converged: rasch.converged,
        epochs_run: full.epochs_run,
        rasch_epochs_run: rasch.epochs_run,
        reflected: full.reflected,
        special_individuals: special.iter().map(|s| s.individual_id.clone()).collect(),
        flattest_individuals: flattest.iter().map(|s| s.individual_id.clone()).collect(),
        recovery,
    };
    write_string(&out.join(artifacts::SUMMARY), &to_versioned_json(&summary))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irt::CLAMP_EPS;

    fn p() -> &'static Path {
        Path::new("test.csv")
    }

    #[test]
    fn pairs_roundtrip_shape() {
        let text = "model_id,individual_id,value_original,value_flipped\n\
                    a,x,0.3,0.3\na,y,0.9,0.8\nb,x,0.1,0.1\nb,y,0.5,0.5\n";
        let recs = parse_prediction_pairs(text, p()).unwrap();
        assert_eq!(recs.len(), 4);
        assert_eq!(recs[1].value_flipped, 0.8);
        assert_eq!(recs[1].label, None);
    }

    #[test]
    fn pairs_error_cites_line() {
        let mut text = String::from("model_id,individual_id,value_original,value_flipped\n");
        for k in 0..4 {
            text.push_str(&format!("m,i{k},0.5,0.5\n"));
        }
        text.push_str("m,i9,0.5,0.5\nm,i10,abc,0.5\n");
        let err = parse_prediction_pairs(&text, p()).unwrap_err();
        assert_eq!(err.category(), "parse");
        assert!(err.to_string().contains("line 7"), "{err}");
    }

    #[test]
    fn pairs_empty_and_missing_column() {
        let err = parse_prediction_pairs("model_id,individual_id,value_original,value_flipped\n", p()).unwrap_err();
        assert!(err.to_string().ends_with("no records"), "{err}");
        let err = parse_prediction_pairs("model_id,individual_id,value_original\na,b,0.1\n", p()).unwrap_err();
        assert!(err.to_string().contains("value_flipped"), "{err}");
    }

    #[test]
    fn pairs_duplicate_and_labels() {
        let text = "model_id,individual_id,value_original,value_flipped,label\na,x,0.3,0.3,1\na,x,0.2,0.2,0\n";
        assert!(parse_prediction_pairs(text, p()).unwrap_err().to_string().contains("duplicate"));
        let text = "model_id,individual_id,value_original,value_flipped,label\na,x,0.3,0.3,1\na,y,0.2,0.2,\n";
        let recs = parse_prediction_pairs(text, p()).unwrap();
        assert_eq!(recs[0].label, Some(true));
        assert_eq!(recs[1].label, None);
    }

    #[test]
    fn matrix_parsing() {
        let text = "model_id,i1,i2,i3,i4\nm1,0.1,0.2,0.3,0.4\nm2,0.5,0.6,0.7,1.0\nm3,0.9,0.8,0.7,0.6\n";
        let m = parse_response_matrix(text, p()).unwrap();
        assert_eq!((m.n_models(), m.n_individuals()), (3, 4));
        assert_eq!(m.get(1, 3), 1.0 - CLAMP_EPS);
        assert_eq!(m.clamp_count(), 1);
        let again = parse_response_matrix(&format_response_matrix(&m), p()).unwrap();
        assert_eq!(again.grid(), m.grid());
        assert_eq!(again.clamp_count(), 0);

        let bad = "model_id,i1,i2\nm1,0.1,1.5\nm2,0.5,0.6\n";
        assert_eq!(parse_response_matrix(bad, p()).unwrap_err().category(), "input");
        let ragged = "model_id,i1,i2\nm1,0.1\nm2,0.5,0.6\n";
        assert_eq!(parse_response_matrix(ragged, p()).unwrap_err().category(), "parse");
    }

    #[test]
    fn manifest_version_is_checked() {
        let text = "format_version = 99\noutput_dir = \"out\"\n[input]\nkind = \"simulate\"\n";
        assert_eq!(parse_manifest(text, p()).unwrap_err().category(), "version");
        let text = "format_version = 1\noutput_dir = \"out\"\n[input]\nkind = \"matrix\"\npath = \"m.csv\"\n[fit]\nepochs = 10\n";
        let m = parse_manifest(text, p()).unwrap();
        assert_eq!(m.fit.epochs, 10);
        assert_eq!(m.analysis.top_k, 5);
    }
}
