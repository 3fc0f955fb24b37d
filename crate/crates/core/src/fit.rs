//! Maximum likelihood estimation of beta IRT parameters.
//!
//! Abilities and difficulties are optimized through logit surrogates
//! (`theta = sigmoid(u)`, `delta = sigmoid(v)`); discriminations are
//! unconstrained. The objective is the mean negative beta log-likelihood over
//! all cells, minimized by full-batch gradient descent with a constant step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::analysis::pearson;
use crate::error::{FairIrtError, Result};
use crate::irt::{beta_icc, beta_log_density, beta_shapes, sigmoid, Ability, FitParameters, Grid, ItemParams, ResponseMatrix};

/// Number of trailing epochs the convergence test looks back over.
pub const CONVERGENCE_WINDOW: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub rasch: bool,
    /// Stop once the loss moved by less than this over the last
    /// [`CONVERGENCE_WINDOW`] epochs.
    pub convergence_tol: f64,
    /// Half-width of the uniform noise added to the initial surrogates.
    pub init_jitter: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            epochs: 3000,
            learning_rate: 0.25,
            seed: 0,
            rasch: false,
            convergence_tol: 1e-8,
            init_jitter: 0.05,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(FairIrtError::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(FairIrtError::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(FairIrtError::Config("convergence_tol must be nonnegative".into()));
        }
        if !(self.init_jitter >= 0.0 && self.init_jitter.is_finite()) {
            return Err(FairIrtError::Config("init_jitter must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model_ids: Vec<String>,
    pub individual_ids: Vec<String>,
    pub parameters: FitParameters,
    /// Loss at the returned parameters.
    pub final_loss: f64,
    /// Loss at the start of each epoch.
    pub loss_trace: Vec<f64>,
    pub converged: bool,
    pub epochs_run: usize,
    pub clamp_count: usize,
    /// Whether the orientation flip was applied to the optimizer's result.
    pub reflected: bool,
    pub config: FitConfig,
}

/// Unconstrained optimization variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogates {
    /// `logit(theta)`, one per model.
    pub u: Vec<f64>,
    /// `logit(delta)`, one per individual.
    pub v: Vec<f64>,
    /// Discriminations, one per individual.
    pub a: Vec<f64>,
}

impl Surrogates {
    pub fn from_parameters(params: &FitParameters) -> Self {
        Surrogates {
            u: params.abilities().iter().map(|t| t.logit()).collect(),
            v: params.items().iter().map(|it| crate::irt::logit(it.difficulty())).collect(),
            a: params.items().iter().map(|it| it.discrimination()).collect(),
        }
    }

    /// Maps back to the constrained parameters. Fails if a surrogate is so
    /// large that `sigmoid` rounds to 0 or 1.
    pub fn to_parameters(&self, rasch: bool) -> Result<FitParameters> {
        let abilities = self
            .u
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                Ability::new(sigmoid(u))
                    .map_err(|_| FairIrtError::Saturated(format!("ability of model {i} saturated (logit {u})")))
            })
            .collect::<Result<Vec<_>>>()?;
        let items = self
            .v
            .iter()
            .zip(&self.a)
            .enumerate()
            .map(|(j, (&v, &a))| {
                ItemParams::new(sigmoid(v), a).map_err(|_| {
                    FairIrtError::Saturated(format!(
                        "item {j} left its domain (difficulty logit {v}, discrimination {a})"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FitParameters::new(abilities, items, rasch)
    }
}

/// Gradient of the mean negative log-likelihood with respect to each
/// surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
}

/// `ln(sigmoid(x))` without cancellation.
#[inline]
fn ln_sigmoid(x: f64) -> f64 {
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

/// Loss and analytic gradient at `s`.
///
/// Cells are visited in row-major order and sums accumulate in that order, so
/// the result is bit-reproducible. `epoch` only labels errors.
pub fn loss_gradient(matrix: &ResponseMatrix, s: &Surrogates, epoch: usize) -> Result<(f64, Gradient)> {
    let (n, m) = (matrix.n_models(), matrix.n_individuals());
    if s.u.len() != n || s.v.len() != m || s.a.len() != m {
        return Err(FairIrtError::Dimension(format!(
            "surrogates are {}x{} (a: {}), matrix is {n}x{m}",
            s.u.len(),
            s.v.len(),
            s.a.len()
        )));
    }
    let scale = 1.0 / (n * m) as f64;
    let mut grad = Gradient {
        u: vec![0.0; n],
        v: vec![0.0; m],
        a: vec![0.0; m],
    };
    let ld: Vec<f64> = s.v.iter().map(|&v| ln_sigmoid(v)).collect();
    let l1d: Vec<f64> = s.v.iter().map(|&v| ln_sigmoid(-v)).collect();
    let d: Vec<f64> = s.v.iter().map(|&v| sigmoid(v)).collect();
    let mut total = 0.0;
    for i in 0..n {
        let lt = ln_sigmoid(s.u[i]);
        let l1t = ln_sigmoid(-s.u[i]);
        let t = sigmoid(s.u[i]);
        for j in 0..m {
            let a = s.a[j];
            let (dlt, dl1t) = (lt - ld[j], l1t - l1d[j]);
            let alpha = (a * dlt).exp();
            let beta = (a * dl1t).exp();
            let x = matrix.get(i, j);
            let (lx, l1x) = (x.ln(), (-x).ln_1p());
            let ll = ln_gamma(alpha + beta) - ln_gamma(alpha) - ln_gamma(beta)
                + (alpha - 1.0) * lx
                + (beta - 1.0) * l1x;
            let cell = |quantity| FairIrtError::NonFinite {
                quantity,
                epoch,
                model: i,
                individual: j,
            };
            if !ll.is_finite() {
                return Err(cell("loss"));
            }
            let dg = digamma(alpha + beta);
            // d(-ll)/d(alpha) and d(-ll)/d(beta)
            let ga = -(dg - digamma(alpha) + lx);
            let gb = -(dg - digamma(beta) + l1x);
            let gu = ga * alpha * a * (1.0 - t) - gb * beta * a * t;
            let gv = -ga * alpha * a * (1.0 - d[j]) + gb * beta * a * d[j];
            let gaj = ga * alpha * dlt + gb * beta * dl1t;
            if !(gu.is_finite() && gv.is_finite() && gaj.is_finite()) {
                return Err(cell("gradient"));
            }
            total -= ll;
            grad.u[i] += gu * scale;
            grad.v[j] += gv * scale;
            grad.a[j] += gaj * scale;
        }
    }
    Ok((total * scale, grad))
}

/// Mean negative beta log-likelihood of `matrix` under `params`.
///
/// Evaluated through [`beta_shapes`] and [`beta_log_density`], independently
/// of the optimizer's own loss code.
pub fn negative_loss(matrix: &ResponseMatrix, params: &FitParameters) -> Result<f64> {
    params.ensure_shape(matrix.n_models(), matrix.n_individuals())?;
    let mut total = 0.0;
    for (i, &theta) in params.abilities().iter().enumerate() {
        for (j, item) in params.items().iter().enumerate() {
            total -= beta_log_density(matrix.get(i, j), beta_shapes(theta, item));
        }
    }
    Ok(total / (matrix.n_models() * matrix.n_individuals()) as f64)
}

/// Expected response for every cell.
pub fn predicted_matrix(params: &FitParameters, n_models: usize, n_individuals: usize) -> Result<Grid> {
    params.ensure_shape(n_models, n_individuals)?;
    Ok(Grid::from_fn(n_models, n_individuals, |i, j| {
        beta_icc(params.abilities()[i], &params.items()[j])
    }))
}

/// Starting point: surrogates at zero plus seeded jitter. Each
/// discrimination starts at `+1` or `-1` according to whether its column
/// correlates positively or negatively with the row means; starting every
/// item at `+1` leaves negative items trapped on the wrong side.
fn initial_surrogates(matrix: &ResponseMatrix, config: &FitConfig) -> Surrogates {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let w = config.init_jitter;
    let mut jitter = |len: usize| -> Vec<f64> {
        (0..len)
            .map(|_| if w > 0.0 { rng.random_range(-w..=w) } else { 0.0 })
            .collect()
    };
    let u = jitter(matrix.n_models());
    let v = jitter(matrix.n_individuals());
    let a = if config.rasch {
        vec![1.0; matrix.n_individuals()]
    } else {
        let row_means = matrix.grid().row_means();
        (0..matrix.n_individuals())
            .map(|j| {
                let column: Vec<f64> = matrix.grid().column(j).collect();
                match pearson(&column, &row_means) {
                    Some(r) if r < 0.0 => -1.0,
                    _ => 1.0,
                }
            })
            .collect()
    };
    Surrogates { u, v, a }
}

/// Fits the beta IRT model to `matrix`.
///
/// With `config.rasch` every discrimination stays at exactly 1. Otherwise the
/// result is oriented so fitted abilities correlate nonnegatively with the
/// row-mean responses (higher ability means fairer on average); the flip is
/// recorded in [`FitReport::reflected`] and `final_loss` is recomputed after
/// it.
pub fn fit_beta_irt(matrix: &ResponseMatrix, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    let mut s = initial_surrogates(matrix, config);
    let mut trace = Vec::with_capacity(config.epochs);
    let mut converged = false;
    for epoch in 0..config.epochs {
        let (loss, grad) = loss_gradient(matrix, &s, epoch)?;
        trace.push(loss);
        if trace.len() > CONVERGENCE_WINDOW {
            let before = trace[trace.len() - 1 - CONVERGENCE_WINDOW];
            if (before - loss).abs() < config.convergence_tol {
                converged = true;
                break;
            }
        }
        let lr = config.learning_rate;
        s.u.iter_mut().zip(&grad.u).for_each(|(x, g)| *x -= lr * g);
        s.v.iter_mut().zip(&grad.v).for_each(|(x, g)| *x -= lr * g);
        if !config.rasch {
            s.a.iter_mut().zip(&grad.a).for_each(|(x, g)| *x -= lr * g);
        }
    }

    let mut parameters = s.to_parameters(config.rasch)?;
    let mut reflected = false;
    if !config.rasch {
        let abilities: Vec<f64> = parameters.abilities().iter().map(|t| t.value()).collect();
        if let Some(r) = pearson(&abilities, &matrix.grid().row_means()) {
            if r < 0.0 {
                parameters = parameters.reflected()?;
                reflected = true;
            }
        }
    }
    let final_loss = negative_loss(matrix, &parameters)?;
    if !final_loss.is_finite() {
        return Err(FairIrtError::NonFinite {
            quantity: "final loss",
            epoch: trace.len(),
            model: 0,
            individual: 0,
        });
    }
    Ok(FitReport {
        model_ids: matrix.model_ids().to_vec(),
        individual_ids: matrix.individual_ids().to_vec(),
        parameters,
        final_loss,
        epochs_run: trace.len(),
        loss_trace: trace,
        converged,
        clamp_count: matrix.clamp_count(),
        reflected,
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(n: usize, m: usize, f: impl Fn(usize, usize) -> f64) -> ResponseMatrix {
        let values = (0..n * m).map(|k| f(k / m, k % m)).collect();
        ResponseMatrix::new(
            (0..n).map(|i| format!("m{i}")).collect(),
            (0..m).map(|j| format!("i{j}")).collect(),
            values,
        )
        .unwrap()
    }

    #[test]
    fn ln_sigmoid_is_stable() {
        assert!((ln_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!((ln_sigmoid(-800.0) + 800.0).abs() < 1e-12);
        assert!(ln_sigmoid(800.0).abs() < 1e-300);
        for x in [-3.0, -0.2, 0.7, 5.0] {
            assert!((ln_sigmoid(x) - sigmoid(x).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_shapes_have_zero_loss() {
        let mat = matrix(2, 3, |i, j| 0.1 + 0.1 * (i + j) as f64);
        let params = FitParameters::new(
            vec![Ability::new(0.5).unwrap(); 2],
            vec![ItemParams::new(0.5, 1.0).unwrap(); 3],
            true,
        )
        .unwrap();
        assert!(negative_loss(&mat, &params).unwrap().abs() < 1e-12);
    }

    #[test]
    fn analytic_loss_matches_density_route() {
        let mat = matrix(3, 4, |i, j| 0.15 + 0.2 * i as f64 + 0.05 * j as f64);
        let s = Surrogates {
            u: vec![0.3, -1.2, 0.8],
            v: vec![-0.5, 0.1, 1.4, -2.0],
            a: vec![1.5, -0.7, 0.3, 2.2],
        };
        let params = s.to_parameters(false).unwrap();
        let (loss, _) = loss_gradient(&mat, &s, 0).unwrap();
        assert!((loss - negative_loss(&mat, &params).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mat = matrix(2, 2, |_, _| 0.5);
        let params = FitParameters::new(vec![Ability::new(0.5).unwrap(); 3], vec![ItemParams::new(0.5, 1.0).unwrap(); 2], false)
            .unwrap();
        assert_eq!(negative_loss(&mat, &params).unwrap_err().category(), "dimension");
        assert_eq!(predicted_matrix(&params, 2, 2).unwrap_err().category(), "dimension");
    }

    #[test]
    fn rasch_fit_keeps_unit_discrimination() {
        let mat = matrix(4, 5, |i, j| 0.2 + 0.15 * i as f64 - 0.02 * j as f64);
        let cfg = FitConfig {
            rasch: true,
            epochs: 200,
            ..FitConfig::default()
        };
        let report = fit_beta_irt(&mat, &cfg).unwrap();
        assert!(report.parameters.items().iter().all(|it| it.discrimination() == 1.0));
        assert!(!report.reflected);
        assert_eq!(report.loss_trace.len(), report.epochs_run);
    }

    #[test]
    fn constant_half_matrix() {
        // Any theta == delta gives Beta(1, 1) and loss 0, but that is not the
        // optimum: Beta(1, b) has density b 2^(1 - b) at 1/2, maximal at
        // b = 1 / ln 2, so the fit drifts towards a mean of 1 / (1 + ln 2) or
        // its mirror image.
        let mat = matrix(2, 2, |_, _| 0.5);
        let report = fit_beta_irt(&mat, &FitConfig::default()).unwrap();
        assert!(report.final_loss < 0.0);
        let best = -(1.0 / std::f64::consts::LN_2).ln() + (1.0 / std::f64::consts::LN_2 - 1.0) * std::f64::consts::LN_2;
        assert!(report.final_loss >= best - 1e-12, "{} < {best}", report.final_loss);
        let pred = predicted_matrix(&report.parameters, 2, 2).unwrap();
        let edge = 1.0 / (1.0 + std::f64::consts::LN_2);
        assert!(pred.values().iter().all(|p| (p - 0.5).abs() <= edge - 0.5 + 1e-9), "{pred:?}");
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig::default().validate().is_ok());
        assert!(FitConfig { epochs: 0, ..FitConfig::default() }.validate().is_err());
        assert!(FitConfig { learning_rate: 0.0, ..FitConfig::default() }.validate().is_err());
        assert!(FitConfig { convergence_tol: -1.0, ..FitConfig::default() }.validate().is_err());
    }

    #[test]
    fn convergence_stops_early() {
        let mat = matrix(2, 2, |_, _| 0.5);
        let cfg = FitConfig {
            convergence_tol: 1e-3,
            ..FitConfig::default()
        };
        let report = fit_beta_irt(&mat, &cfg).unwrap();
        assert!(report.converged);
        assert!(report.epochs_run < cfg.epochs);
    }
}
