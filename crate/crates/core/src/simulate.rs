//! Synthetic ground truth and response matrices for recovery experiments.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{FairIrtError, Result};
use crate::irt::{beta_icc, beta_shapes, Ability, FitParameters, ItemParams, ResponseMatrix};

/// Discrimination magnitudes are drawn uniformly from this interval.
pub const DISCRIMINATION_MAGNITUDE: (f64, f64) = (0.3, 3.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiscriminationDistribution {
    /// `floor(negative_fraction * M)` items, picked by the seed, get a
    /// negative sign.
    Mixed { negative_fraction: f64 },
    PositiveOnly,
    Fixed { value: f64 },
}

impl Default for DiscriminationDistribution {
    fn default() -> Self {
        DiscriminationDistribution::Mixed { negative_fraction: 0.15 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub n_models: usize,
    pub n_individuals: usize,
    pub seed: u64,
    pub ability_range: (f64, f64),
    pub difficulty_range: (f64, f64),
    pub discrimination: DiscriminationDistribution,
    /// Use the ICC means as responses instead of beta draws.
    pub noiseless: bool,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            n_models: 20,
            n_individuals: 50,
            seed: 0,
            ability_range: (0.2, 0.9),
            difficulty_range: (0.05, 0.95),
            discrimination: DiscriminationDistribution::default(),
            noiseless: false,
        }
    }
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_models < 2 || self.n_individuals < 2 {
            return Err(FairIrtError::Config("simulation needs at least 2 models and 2 individuals".into()));
        }
        for (name, (lo, hi)) in [("ability_range", self.ability_range), ("difficulty_range", self.difficulty_range)] {
            if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
                return Err(FairIrtError::Config(format!(
                    "{name} must satisfy 0 < low <= high < 1, got [{lo}, {hi}]"
                )));
            }
        }
        match self.discrimination {
            DiscriminationDistribution::Mixed { negative_fraction: f } if !(0.0..=1.0).contains(&f) => Err(
                FairIrtError::Config(format!("negative_fraction must lie in [0, 1], got {f}")),
            ),
            DiscriminationDistribution::Fixed { value } if !value.is_finite() => {
                Err(FairIrtError::Config("fixed discrimination must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Number of negative-discrimination items this simulation plants.
    pub fn negative_count(&self) -> usize {
        match self.discrimination {
            DiscriminationDistribution::Mixed { negative_fraction } => {
                (negative_fraction * self.n_individuals as f64).floor() as usize
            }
            DiscriminationDistribution::PositiveOnly => 0,
            DiscriminationDistribution::Fixed { value } => {
                if value < 0.0 {
                    self.n_individuals
                } else {
                    0
                }
            }
        }
    }

    pub fn model_ids(&self) -> Vec<String> {
        padded_ids('m', self.n_models)
    }

    pub fn individual_ids(&self) -> Vec<String> {
        padded_ids('i', self.n_individuals)
    }
}

fn padded_ids(prefix: char, count: usize) -> Vec<String> {
    let width = count.to_string().len().max(2);
    (1..=count).map(|k| format!("{prefix}{k:0width$}")).collect()
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Draws abilities, difficulties and discriminations from `spec`.
pub fn generate_ground_truth(spec: &SimulationSpec) -> Result<FitParameters> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let abilities = (0..spec.n_models)
        .map(|_| Ability::new(uniform(&mut rng, spec.ability_range)))
        .collect::<Result<Vec<_>>>()?;
    let difficulties: Vec<f64> = (0..spec.n_individuals)
        .map(|_| uniform(&mut rng, spec.difficulty_range))
        .collect();
    let discriminations: Vec<f64> = match spec.discrimination {
        DiscriminationDistribution::Fixed { value } => vec![value; spec.n_individuals],
        _ => {
            let mut a: Vec<f64> = (0..spec.n_individuals)
                .map(|_| uniform(&mut rng, DISCRIMINATION_MAGNITUDE))
                .collect();
            for j in sample(&mut rng, spec.n_individuals, spec.negative_count()) {
                a[j] = -a[j];
            }
            a
        }
    };
    let items = difficulties
        .into_iter()
        .zip(discriminations)
        .map(|(d, a)| ItemParams::new(d, a))
        .collect::<Result<Vec<_>>>()?;
    let rasch = matches!(spec.discrimination, DiscriminationDistribution::Fixed { value } if value == 1.0);
    FitParameters::new(abilities, items, rasch)
}

/// Draws one response per cell from `Beta(alpha, beta)`, or takes the ICC
/// mean when `spec.noiseless`. Uses a random stream separate from
/// [`generate_ground_truth`], so the same seed can drive both.
pub fn sample_responses(truth: &FitParameters, spec: &SimulationSpec) -> Result<ResponseMatrix> {
    truth.ensure_shape(spec.n_models, spec.n_individuals)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let mut values = Vec::with_capacity(spec.n_models * spec.n_individuals);
    for &theta in truth.abilities() {
        for item in truth.items() {
            let x = if spec.noiseless {
                beta_icc(theta, item)
            } else {
                let shape = beta_shapes(theta, item);
                Beta::new(shape.alpha(), shape.beta())
                    .map_err(|e| FairIrtError::Input(format!("cannot sample beta response: {e}")))?
                    .sample(&mut rng)
            };
            values.push(x);
        }
    }
    ResponseMatrix::new(spec.model_ids(), spec.individual_ids(), values)
}

/// Ground truth and the matching response matrix.
pub fn simulate(spec: &SimulationSpec) -> Result<(FitParameters, ResponseMatrix)> {
    let truth = generate_ground_truth(spec)?;
    let matrix = sample_responses(&truth, spec)?;
    Ok((truth, matrix))
}
