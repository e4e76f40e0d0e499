//! Naive Poisson regression of the counts on the mismeasured covariate.
//!
//! The naive estimator solves `S_n(b) = (1/n) sum_i (y_i - exp(b0 + b1 w_i)) (1, w_i)' = 0`,
//! i.e. the Poisson log-likelihood equation with `W` standing in for `X`.
//! The 2x2 system is solved by Newton's method with step halving.

use serde::Serialize;

use crate::error::{EivError, Result};

/// Largest linear predictor accepted before `exp` is declared to overflow.
pub const EXPONENT_GUARD: f64 = 700.0;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 30;
const INIT_EPS: f64 = 1e-10;

/// Regression coefficients `(beta0, beta1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ModelParams {
    pub beta0: f64,
    pub beta1: f64,
}

impl ModelParams {
    pub fn new(beta0: f64, beta1: f64) -> Result<Self> {
        if !(beta0.is_finite() && beta1.is_finite()) {
            return Err(EivError::InvalidParameter(format!(
                "coefficients must be finite, got ({beta0}, {beta1})"
            )));
        }
        Ok(ModelParams { beta0, beta1 })
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.beta0, self.beta1]
    }
}

/// Observed counts `y` paired with the mismeasured covariate `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<u64>,
    w: Vec<f64>,
}

impl Dataset {
    pub fn new(y: Vec<u64>, w: Vec<f64>) -> Result<Self> {
        if y.len() != w.len() {
            return Err(EivError::InvalidData(format!(
                "y has {} entries but w has {}",
                y.len(),
                w.len()
            )));
        }
        if y.len() < 2 {
            return Err(EivError::InvalidData(
                "at least two observations are required".into(),
            ));
        }
        if let Some(i) = w.iter().position(|v| !v.is_finite()) {
            return Err(EivError::InvalidData(format!("w[{i}] is not finite")));
        }
        if w.iter().all(|&v| v == w[0]) {
            return Err(EivError::InvalidData(
                "w must take at least two distinct values".into(),
            ));
        }
        Ok(Dataset { y, w })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[u64] {
        &self.y
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn mean_y(&self) -> f64 {
        self.y.iter().map(|&v| v as f64).sum::<f64>() / self.len() as f64
    }
}

/// Result of a Newton solve of the naive score equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NaiveEstimate {
    pub params: ModelParams,
    pub iterations: usize,
    pub converged: bool,
    pub score_norm: f64,
}

#[inline]
fn rate(b: &ModelParams, w: f64) -> Result<f64> {
    let eta = b.beta0 + b.beta1 * w;
    if !(eta <= EXPONENT_GUARD) {
        return Err(EivError::Overflow {
            exponent: eta,
            bound: EXPONENT_GUARD,
        });
    }
    Ok(eta.exp())
}

/// `S_n(b)`.
pub fn score(b: &ModelParams, data: &Dataset) -> Result<[f64; 2]> {
    let mut s = [0.0; 2];
    for (&y, &w) in data.y.iter().zip(&data.w) {
        let r = y as f64 - rate(b, w)?;
        s[0] += r;
        s[1] += r * w;
    }
    let n = data.len() as f64;
    Ok([s[0] / n, s[1] / n])
}

/// `dS_n/db = -(1/n) sum_i exp(b0 + b1 w_i) [[1, w_i], [w_i, w_i^2]]`.
pub fn score_jacobian(b: &ModelParams, data: &Dataset) -> Result<[[f64; 2]; 2]> {
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for &w in &data.w {
        let mu = rate(b, w)?;
        s0 += mu;
        s1 += mu * w;
        s2 += mu * w * w;
    }
    let n = data.len() as f64;
    Ok([[-s0 / n, -s1 / n], [-s1 / n, -s2 / n]])
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn newton_direction(j: [[f64; 2]; 2], s: [f64; 2]) -> Option<[f64; 2]> {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    // delta = -J^{-1} s
    Some([
        -(j[1][1] * s[0] - j[0][1] * s[1]) / det,
        -(-j[1][0] * s[0] + j[0][0] * s[1]) / det,
    ])
}

/// Solver settings for [`fit_naive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub init: Option<ModelParams>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            init: None,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Starting point `(log(mean(y) + eps), 0)`.
pub fn default_init(data: &Dataset) -> ModelParams {
    ModelParams {
        beta0: (data.mean_y() + INIT_EPS).ln(),
        beta1: 0.0,
    }
}

/// Solves the naive score equation by damped Newton iteration.
///
/// Returns `Err(NonConvergence)` carrying the last iterate when the score
/// norm has not dropped to `tol` within `max_iter` iterations, or when step
/// halving can no longer reduce it.
pub fn fit_naive(data: &Dataset, opts: &FitOptions) -> Result<NaiveEstimate> {
    if !(opts.tol > 0.0) || opts.max_iter < 1 {
        return Err(EivError::InvalidParameter(format!(
            "tol must be > 0 and max_iter >= 1, got tol={}, max_iter={}",
            opts.tol, opts.max_iter
        )));
    }
    if data.y.iter().all(|&y| y == 0) {
        return Err(EivError::AllZeroCounts);
    }

    let mut b = opts.init.unwrap_or_else(|| default_init(data));
    let mut s = score(&b, data)?;
    let mut norm = norm2(s);
    let mut iterations = 0;

    let stalled = |b: ModelParams, iterations: usize, norm: f64| {
        EivError::NonConvergence(Box::new(NaiveEstimate {
            params: b,
            iterations,
            converged: false,
            score_norm: norm,
        }))
    };

    while norm > opts.tol {
        if iterations == opts.max_iter {
            return Err(stalled(b, iterations, norm));
        }
        iterations += 1;

        let j = score_jacobian(&b, data)?;
        let Some(delta) = newton_direction(j, s) else {
            return Err(stalled(b, iterations, norm));
        };

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = ModelParams {
                beta0: b.beta0 + step * delta[0],
                beta1: b.beta1 + step * delta[1],
            };
            // An overflowing trial point counts as a failed step.
            if let Ok(ts) = score(&trial, data) {
                let tn = norm2(ts);
                if tn < norm {
                    accepted = Some((trial, ts, tn));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((nb, ns, nn)) => {
                b = nb;
                s = ns;
                norm = nn;
            }
            None => return Err(stalled(b, iterations, norm)),
        }
    }

    Ok(NaiveEstimate {
        params: b,
        iterations,
        converged: true,
        score_norm: norm,
    })
}
