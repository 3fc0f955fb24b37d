//! Command-line front end. Every subcommand maps onto one library call.
//!
//! Failures print a single line `error[<category>]: <message>` on stderr and
//! exit with the category's code (see [`FairIrtError::exit_code`]); usage
//! errors use category `usage` and code 2.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    disentangle, flattest_individuals_in, individual_summaries, model_summaries, special_individuals, FlatnessDomain,
};
use crate::error::{FairIrtError, Result};
use crate::fit::{fit_beta_irt, FitConfig};
use crate::io::{
    artifacts, export_curves, read_fit_report, read_prediction_pairs, read_response_matrix, run_manifest,
    read_manifest, write_disentangle, write_fit_report, write_individual_summaries, write_model_summaries,
    write_response_matrix, write_truth, TruthFile,
};
use crate::metrics::{build_response_matrix, fairness_flag, EsCondition, FairnessFlag, LambdaMode, MetricConfig, MetricKind, Task};
use crate::simulate::{simulate, DiscriminationDistribution, SimulationSpec};

#[derive(Debug, Parser)]
#[command(name = "fair-irt", version, about = "Fairness auditing with beta item response theory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prediction pairs to response matrix.
    Metrics(MetricsArgs),
    /// Response matrix to fit report.
    Fit(FitArgs),
    /// Simulated ground truth and response matrix.
    Simulate(SimulateArgs),
    /// Fit report to model/individual summaries.
    Analyze(AnalyzeArgs),
    /// Rasch fit report to per-cell decomposition table.
    Disentangle(DisentangleArgs),
    /// Fit report to long-format ICC table.
    Curves(CurvesArgs),
    /// Run every stage from a TOML manifest.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Sts,
    Es,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Classification,
    Regression,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EsConditionArg {
    Odds,
    Opportunity,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "sts")]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value = "classification")]
    pub task: TaskArg,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// `auto` or a positive number.
    #[arg(long, default_value = "auto")]
    pub lambda: String,
    #[arg(long, value_enum, default_value = "odds")]
    pub es_condition: EsConditionArg,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Response matrix CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub rasch: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Directory for `truth.json` and `matrix.csv`.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub models: usize,
    #[arg(long, default_value_t = 50)]
    pub individuals: usize,
    #[arg(long, default_value_t = 0.15)]
    pub negative_fraction: f64,
    #[arg(long)]
    pub noiseless: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Fit report JSON.
    #[arg(long)]
    pub input: PathBuf,
    /// Response matrix the report was fitted on.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    /// Compute flatness on a uniform grid of this many abilities instead of
    /// the fitted ones.
    #[arg(long)]
    pub flatness_grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DisentangleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Manifest TOML.
    #[arg(long)]
    pub input: PathBuf,
    /// Overrides the manifest's output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl MetricsArgs {
    fn config(&self) -> Result<MetricConfig> {
        let config = MetricConfig {
            task: match self.task {
                TaskArg::Classification => Task::Classification,
                TaskArg::Regression => Task::Regression,
            },
            metric: match self.metric {
                MetricArg::Sts => MetricKind::Sts,
                MetricArg::Es => MetricKind::Es,
            },
            es_condition: match self.es_condition {
                EsConditionArg::Odds => EsCondition::Odds,
                EsConditionArg::Opportunity => EsCondition::Opportunity,
            },
            epsilon: self.epsilon,
            lambda: self.lambda.parse::<LambdaMode>()?,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Runs one command and returns the lines it reports on stdout.
pub fn execute(command: Command) -> Result<Vec<String>> {
    let mut out = Vec::new();
    match command {
        Command::Metrics(args) => {
            let config = args.config()?;
            let records = read_prediction_pairs(&args.input)?;
            let built = build_response_matrix(&records, &config)?;
            write_response_matrix(&args.output, &built.matrix)?;
            let m = &built.matrix;
            let fair = m
                .grid()
                .values()
                .iter()
                .filter(|&&v| fairness_flag(v, config.epsilon) == FairnessFlag::Fair)
                .count();
            out.push(format!("matrix: {} models x {} individuals", m.n_models(), m.n_individuals()));
            out.push(format!("fair cells: {fair} of {}", m.grid().values().len()));
            out.push(format!("clamped: {}", m.clamp_count()));
            if let Some(lambda) = built.lambda {
                out.push(format!("lambda: {lambda}"));
                out.push(format!("excluded records (zero original prediction): {}", built.excluded_records));
                out.push(format!("dropped individuals: {}", built.dropped_individuals.join(" ")));
            }
            if !built.unconditioned_individuals.is_empty() {
                out.push(format!("individuals with label 0 left out: {}", built.unconditioned_individuals.len()));
            }
        }
        Command::Fit(args) => {
            let matrix = read_response_matrix(&args.input)?;
            let defaults = FitConfig::default();
            let config = FitConfig {
                epochs: args.epochs.unwrap_or(defaults.epochs),
                learning_rate: args.lr.unwrap_or(defaults.learning_rate),
                seed: args.seed,
                rasch: args.rasch,
                ..defaults
            };
            let report = fit_beta_irt(&matrix, &config)?;
            write_fit_report(&args.output, &report)?;
            out.push(format!("final loss: {}", report.final_loss));
            out.push(format!("epochs: {} (converged: {})", report.epochs_run, report.converged));
            out.push(format!("clamped: {}", report.clamp_count));
        }
        Command::Simulate(args) => {
            let spec = SimulationSpec {
                n_models: args.models,
                n_individuals: args.individuals,
                seed: args.seed,
                discrimination: DiscriminationDistribution::Mixed {
                    negative_fraction: args.negative_fraction,
                },
                noiseless: args.noiseless,
                ..SimulationSpec::default()
            };
            let (parameters, matrix) = simulate(&spec)?;
            write_truth(
                args.output.join(artifacts::TRUTH),
                &TruthFile {
                    model_ids: spec.model_ids(),
                    individual_ids: spec.individual_ids(),
                    spec,
                    parameters,
                },
            )?;
            write_response_matrix(args.output.join(artifacts::MATRIX), &matrix)?;
            out.push(format!("matrix: {} models x {} individuals", matrix.n_models(), matrix.n_individuals()));
            out.push(format!("negative items: {}", spec.negative_count()));
        }
        Command::Analyze(args) => {
            let report = read_fit_report(&args.input)?;
            let matrix = read_response_matrix(&args.matrix)?;
            if matrix.model_ids() != report.model_ids.as_slice()
                || matrix.individual_ids() != report.individual_ids.as_slice()
            {
                return Err(FairIrtError::Dimension(
                    "matrix labels differ from the ones in the fit report".into(),
                ));
            }
            let domain = args.flatness_grid.map_or(FlatnessDomain::FittedAbilities, FlatnessDomain::UniformGrid);
            let dir = &args.output;
            write_model_summaries(dir.join(artifacts::MODELS), &model_summaries(&report, &matrix)?)?;
            write_individual_summaries(dir.join(artifacts::INDIVIDUALS), &individual_summaries(&report, domain)?)?;
            let special = special_individuals(&report)?;
            write_individual_summaries(dir.join(artifacts::SPECIAL), &special)?;
            let flattest = flattest_individuals_in(&report, args.top_k, domain)?;
            write_individual_summaries(dir.join(artifacts::FLATTEST), &flattest)?;
            out.push(format!("special individuals: {}", ids(special.iter().map(|s| &s.individual_id))));
            out.push(format!("flattest: {}", ids(flattest.iter().map(|s| &s.individual_id))));
        }
        Command::Disentangle(args) => {
            let report = read_fit_report(&args.input)?;
            let records = disentangle(&report)?;
            write_disentangle(&args.output, &records)?;
            let unfair = records.iter().filter(|r| r.flag == FairnessFlag::Unfair).count();
            out.push(format!("unfair cells: {unfair} of {}", records.len()));
        }
        Command::Curves(args) => {
            let report = read_fit_report(&args.input)?;
            export_curves(&report, args.grid, &args.output)?;
            out.push(format!("curves: {} individuals x {} points", report.individual_ids.len(), args.grid));
        }
        Command::Pipeline(args) => {
            let mut manifest = read_manifest(&args.input)?;
            let base = args.input.parent().unwrap_or(Path::new("."));
            if let Some(dir) = args.output {
                manifest.output_dir = std::env::current_dir()
                    .map_err(|e| FairIrtError::io(".", e))?
                    .join(dir);
            }
            let summary = run_manifest(&manifest, base)?;
            out.push(format!("full fit loss: {}", summary.final_loss));
            out.push(format!("rasch fit loss: {}", summary.rasch_final_loss));
            out.push(format!("special individuals: {}", summary.special_individuals.join(" ")));
            out.push(format!("flattest: {}", summary.flattest_individuals.join(" ")));
        }
    }
    Ok(out)
}

fn ids<'a>(it: impl Iterator<Item = &'a String>) -> String {
    it.map(String::as_str).collect::<Vec<_>>().join(" ")
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    match execute(cli.command) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            0
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.category());
            e.exit_code()
        }
    }
}
