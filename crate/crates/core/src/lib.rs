//! Fairness auditing of predictive models with beta item response theory.
//!
//! Each model is a respondent and each individual an item. Per-cell fairness
//! responses (situation test or equalised scores) form a matrix; fitting a
//! beta IRT model to it yields a fairness ability per model and a difficulty
//! and discrimination per individual.
//!
//! ```
//! use fair_irt::simulate::{simulate, SimulationSpec};
//! use fair_irt::fit::{fit_beta_irt, FitConfig};
//!
//! let spec = SimulationSpec { n_models: 5, n_individuals: 8, seed: 7, ..SimulationSpec::default() };
//! let (_truth, matrix) = simulate(&spec).unwrap();
//! let report = fit_beta_irt(&matrix, &FitConfig { epochs: 100, ..FitConfig::default() }).unwrap();
//! assert_eq!(report.parameters.n_models(), 5);
//! ```

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fit;
pub mod io;
pub mod irt;
pub mod metrics;
pub mod simulate;

pub use error::{FairIrtError, Result};
pub use fit::{fit_beta_irt, FitConfig, FitReport};
pub use irt::{Ability, BetaShape, FitParameters, ItemParams, ResponseMatrix};
pub use metrics::{MetricConfig, PredictionPairRecord};
