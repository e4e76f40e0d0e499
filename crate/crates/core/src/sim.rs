//! Seeded Monte Carlo comparison of the naive and corrected estimators.
//!
//! Every replication draws from its own ChaCha stream selected by the
//! replication index, so a report depends only on the configuration and not
//! on how replications are scheduled across threads. Aggregation runs in
//! replication order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bias::{naive_limit, BiasReport, EivModel};
use crate::corrected::{correct_estimate, moment_laws};
use crate::dist::{DistSpec, Law};
use crate::error::{EivError, Result};
use crate::naive::{fit_naive, Dataset, FitOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuisanceMode {
    /// Correct with the true covariate and error laws.
    Known,
    /// Estimate the Gamma covariate parameters from the moments of `W`,
    /// keeping only the error's variance (Normal) or shape (Gamma) as known.
    Moment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub model: EivModel,
    pub n: usize,
    pub mc: usize,
    pub seed: u64,
    pub nuisance_mode: NuisanceMode,
    /// `sigma2` for a Normal error or `k2` for a Gamma error; required in
    /// moment mode.
    pub error_known_param: Option<f64>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(EivError::Config(format!(
                "n must be at least 2, got {}",
                self.n
            )));
        }
        if self.mc < 1 {
            return Err(EivError::Config("mc must be at least 1".into()));
        }
        if self.nuisance_mode == NuisanceMode::Moment {
            self.error_template()?;
        }
        Ok(())
    }

    /// Error law handed to moment estimation: the configured error family with
    /// its known parameter.
    fn error_template(&self) -> Result<DistSpec> {
        let p = self.error_known_param.ok_or_else(|| {
            EivError::Config("moment-estimated nuisance requires error_known_param".into())
        })?;
        if !matches!(self.model.x_spec.law(), Law::Gamma { .. }) {
            return Err(EivError::Config(
                "moment-estimated nuisance requires a gamma covariate law".into(),
            ));
        }
        match self.model.u_spec.law() {
            Law::Normal { mean: 0.0, .. } => DistSpec::normal(0.0, p),
            Law::Gamma { rate, .. } => DistSpec::gamma(p, rate),
            _ => Err(EivError::Config(format!(
                "moment-estimated nuisance requires a normal:0:sigma2 or gamma error law, got {}",
                self.model.u_spec
            ))),
        }
        .map_err(|e| EivError::Config(e.to_string()))
    }
}

/// Draws `(Y, W)` with `X ~ x_spec`, `U ~ u_spec`, `Y | X ~ Poisson(exp(beta0 + beta1 X))`
/// and `W = X + U`.
pub fn generate_dataset(model: &EivModel, n: usize, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let x = model.x_spec.sample(rng, n);
    let u = model.u_spec.sample(rng, n);
    let beta = model.beta;
    let mut y = Vec::with_capacity(n);
    for &xi in &x {
        let rate = (beta.beta0 + beta.beta1 * xi).exp();
        if !(rate.is_finite() && rate > 0.0) {
            return Err(EivError::Overflow {
                exponent: beta.beta0 + beta.beta1 * xi,
                bound: crate::naive::EXPONENT_GUARD,
            });
        }
        let d = Poisson::new(rate).map_err(|e| EivError::InvalidParameter(e.to_string()))?;
        y.push(d.sample(rng) as u64);
    }
    let w = x.iter().zip(&u).map(|(a, b)| a + b).collect();
    Dataset::new(y, w)
}

/// Generator for replication `index` under master `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Per-replication output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Replicate {
    pub naive: [f64; 2],
    pub corrected: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    NaiveFit,
    Moments,
    Correction,
}

/// One replication: simulate, fit, estimate nuisance if requested, correct.
pub fn run_replication(
    config: &SimConfig,
    index: u64,
) -> std::result::Result<Replicate, FailureKind> {
    let mut rng = replication_rng(config.seed, index);
    let data =
        generate_dataset(&config.model, config.n, &mut rng).map_err(|_| FailureKind::NaiveFit)?;
    let naive = fit_naive(&data, &FitOptions::default()).map_err(|_| FailureKind::NaiveFit)?;
    let (x, u) = match config.nuisance_mode {
        NuisanceMode::Known => (config.model.x_spec, config.model.u_spec),
        NuisanceMode::Moment => {
            let tmpl = config.error_template().map_err(|_| FailureKind::Moments)?;
            moment_laws(data.w(), &tmpl).map_err(|_| FailureKind::Moments)?
        }
    };
    let corrected = correct_estimate(&naive, &x, &u).map_err(|_| FailureKind::Correction)?;
    Ok(Replicate {
        naive: naive.params.as_array(),
        corrected: corrected.params.as_array(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorSummary {
    /// Mean estimate minus the true coefficients.
    pub bias: [f64; 2],
    /// `(1/m) sum (est - beta)(est - beta)'`.
    pub mse: [[f64; 2]; 2],
    /// Sample standard deviation of the estimates over `sqrt(m)`.
    pub mc_std_error: [f64; 2],
}

fn summarize(estimates: &[[f64; 2]], beta: [f64; 2]) -> EstimatorSummary {
    let m = estimates.len() as f64;
    let mut mean = [0.0; 2];
    let mut mse = [[0.0; 2]; 2];
    for e in estimates {
        let d = [e[0] - beta[0], e[1] - beta[1]];
        for i in 0..2 {
            mean[i] += e[i];
            for j in 0..2 {
                mse[i][j] += d[i] * d[j];
            }
        }
    }
    for (mu, row) in mean.iter_mut().zip(mse.iter_mut()) {
        *mu /= m;
        for v in row.iter_mut() {
            *v /= m;
        }
    }
    let mut se = [0.0; 2];
    if estimates.len() > 1 {
        for i in 0..2 {
            let ss: f64 = estimates.iter().map(|e| (e[i] - mean[i]).powi(2)).sum();
            se[i] = (ss / (m - 1.0)).sqrt() / m.sqrt();
        }
    }
    EstimatorSummary {
        bias: [mean[0] - beta[0], mean[1] - beta[1]],
        mse,
        mc_std_error: se,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FailureCounts {
    pub naive_fit: usize,
    pub moments: usize,
    pub correction: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub naive: EstimatorSummary,
    pub corrected: EstimatorSummary,
    pub theory: BiasReport,
    pub successful_replications: usize,
    pub failed_replications: usize,
    pub failures: FailureCounts,
}

/// Runs all replications on the current rayon pool and aggregates them.
pub fn run_monte_carlo(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let theory = naive_limit(&config.model)?;
    let outcomes: Vec<_> = (0..config.mc as u64)
        .into_par_iter()
        .map(|i| run_replication(config, i))
        .collect();

    let mut failures = FailureCounts::default();
    let mut naive = Vec::with_capacity(outcomes.len());
    let mut corrected = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        match o {
            Ok(r) => {
                naive.push(r.naive);
                corrected.push(r.corrected);
            }
            Err(FailureKind::NaiveFit) => failures.naive_fit += 1,
            Err(FailureKind::Moments) => failures.moments += 1,
            Err(FailureKind::Correction) => failures.correction += 1,
        }
    }
    let failed = config.mc - naive.len();
    if naive.is_empty() || 2 * failed > config.mc {
        return Err(EivError::TooManyFailures {
            failed,
            total: config.mc,
        });
    }
    let beta = config.model.beta.as_array();
    Ok(SimReport {
        config: config.clone(),
        naive: summarize(&naive, beta),
        corrected: summarize(&corrected, beta),
        theory,
        successful_replications: naive.len(),
        failed_replications: failed,
        failures,
    })
}

/// Runs on a dedicated pool of `threads` workers.
pub fn run_monte_carlo_with_threads(config: &SimConfig, threads: usize) -> Result<SimReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| EivError::Config(e.to_string()))?;
    pool.install(|| run_monte_carlo(config))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Naive,
    Cn,
}

/// One estimator row of a bias/MSE table: theory next to the Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub scenario: String,
    pub estimator: Estimator,
    pub asy_bias: [f64; 2],
    pub bias: [f64; 2],
    pub asy_mse: [f64; 2],
    pub mse: [f64; 2],
    pub mc_std_error: [f64; 2],
}

/// The naive and CN rows for one scenario. The corrected estimator is
/// consistent, so its theoretical entries are zero.
pub fn table_rows(scenario: &str, report: &SimReport) -> [TableRow; 2] {
    let row = |estimator, asy_bias, asy_mse, s: &EstimatorSummary| TableRow {
        scenario: scenario.to_string(),
        estimator,
        asy_bias,
        bias: s.bias,
        asy_mse,
        mse: [s.mse[0][0], s.mse[1][1]],
        mc_std_error: s.mc_std_error,
    };
    [
        row(
            Estimator::Naive,
            report.theory.bias,
            report.theory.asy_mse,
            &report.naive,
        ),
        row(Estimator::Cn, [0.0; 2], [0.0; 2], &report.corrected),
    ]
}

pub fn compare_with_theory(
    scenario: &str,
    config: &SimConfig,
) -> Result<(SimReport, [TableRow; 2])> {
    let report = run_monte_carlo(config)?;
    let rows = table_rows(scenario, &report);
    Ok((report, rows))
}
