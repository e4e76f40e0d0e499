//! Corrected naive estimator.
//!
//! The slope is corrected by the inverse map `h = g^{-1}`, the root in
//! `beta1` of `K_X'(beta1) = K_W'(b1) - E[U]`, and the intercept by
//! `beta0 = b0 + K_W(b1) - K_X(beta1)`. Nuisance parameters of the Gamma
//! covariate law can be recovered from the first two sample moments of `W`.

use serde::Serialize;

use crate::bias::{closed_family, MapPath, MapSolution, ROOT_TOL};
use crate::dist::{DistSpec, IndependentSum, Law};
use crate::error::{EivError, Result};
use crate::naive::{ModelParams, NaiveEstimate};
use crate::roots::solve_increasing;

/// Right-hand side `K_W'(b1) - E[U]`, after checking `b1 ∈ dom M_X ∩ dom M_U`.
fn h_target(x: &DistSpec, u: &DistSpec, b1: f64) -> Result<f64> {
    let w = IndependentSum::new(*x, *u);
    let dom = w.mgf_domain();
    if !dom.contains(b1) {
        return Err(EivError::Domain {
            what: "b1",
            t: b1,
            lo: dom.lo,
            hi: dom.hi,
            law: format!("{x} + {u}"),
        });
    }
    Ok(w.cgf_prime(b1)? - u.mean())
}

fn gamma_range_err(target: f64, x: &DistSpec) -> EivError {
    EivError::NoRoot(format!(
        "K_X' of {x} takes only positive values, but the target is {target}"
    ))
}

/// Inverse map `h` solved numerically on `dom M_X`.
pub fn inverse_map_h_generic(x: &DistSpec, u: &DistSpec, b1: f64) -> Result<MapSolution> {
    let target = h_target(x, u, b1)?;
    let root = solve_increasing(
        |beta1| Ok(x.cgf_prime(beta1)? - target),
        0.0,
        x.mgf_domain(),
        ROOT_TOL,
    )?;
    Ok(MapSolution {
        value: root.x,
        path: MapPath::Generic,
        iterations: root.iterations,
        rejected_branch: None,
    })
}

/// Inverse map `h`: the true slope whose naive limit is `b1`.
pub fn inverse_map_h_detailed(x: &DistSpec, u: &DistSpec, b1: f64) -> Result<MapSolution> {
    let path = closed_family(x, u);
    let closed = |value| MapSolution {
        value,
        path,
        iterations: 0,
        rejected_branch: None,
    };
    match (path, x.law(), u.law()) {
        (MapPath::Identity, ..) => {
            h_target(x, u, b1)?;
            Ok(closed(b1))
        }
        (
            MapPath::GammaNormal,
            Law::Gamma { shape: k, rate: l },
            Law::Normal { variance: s2, .. },
        ) => {
            // K_X' maps (-inf, lambda) onto (0, inf).
            let target = h_target(x, u, b1)?;
            if !(target > 0.0) {
                return Err(gamma_range_err(target, x));
            }
            let num = s2 * l * b1 * b1 - (k + l * l * s2) * b1;
            let den = s2 * b1 * b1 - l * s2 * b1 - k;
            Ok(closed(num / den))
        }
        (MapPath::GammaGamma, Law::Gamma { shape: k1, rate: l }, Law::Gamma { shape: k2, .. }) => {
            let target = h_target(x, u, b1)?;
            let den = k1 * l + k2 * b1;
            if !(target > 0.0 && den > 0.0) {
                return Err(gamma_range_err(target, x));
            }
            Ok(closed((k1 + k2) * b1 * l / den))
        }
        _ => inverse_map_h_generic(x, u, b1),
    }
}

pub fn inverse_map_h(x: &DistSpec, u: &DistSpec, b1: f64) -> Result<f64> {
    inverse_map_h_detailed(x, u, b1).map(|s| s.value)
}

/// Corrected estimate with the naive fit and the laws it was corrected under.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectedEstimate {
    pub params: ModelParams,
    pub naive: NaiveEstimate,
    pub x_spec: DistSpec,
    pub u_spec: DistSpec,
    pub path: MapPath,
    pub root_iterations: usize,
}

/// Applies the bias correction to a naive estimate under the given laws.
///
/// Fails with `Domain` when the naive slope lies outside `dom M_X ∩ dom M_U`
/// (for Gamma laws, when it is not below the rate); no clamping is done.
pub fn correct_estimate(
    naive: &NaiveEstimate,
    x: &DistSpec,
    u: &DistSpec,
) -> Result<CorrectedEstimate> {
    let nb = naive.params;
    let sol = inverse_map_h_detailed(x, u, nb.beta1)?;
    let params = if sol.path == MapPath::Identity {
        nb
    } else {
        let beta1 = sol.value;
        let beta0 = nb.beta0 + x.cgf(nb.beta1)? + u.cgf(nb.beta1)? - x.cgf(beta1)?;
        ModelParams::new(beta0, beta1)?
    };
    Ok(CorrectedEstimate {
        params,
        naive: naive.clone(),
        x_spec: *x,
        u_spec: *u,
        path: sol.path,
        root_iterations: sol.iterations,
    })
}

/// Sample mean and the 1/n sample variance.
fn moments(w: &[f64]) -> Result<(f64, f64)> {
    if w.len() < 2 {
        return Err(EivError::DegenerateMoment(
            "at least two observations are required".into(),
        ));
    }
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, var))
}

/// Moment estimates `(k, lambda)` of a Gamma covariate observed with
/// `N(0, sigma2)` error: `lambda = mean / (var - sigma2)`, `k = mean * lambda`.
pub fn estimate_nuisance_normal_error(w: &[f64], sigma2: f64) -> Result<(f64, f64)> {
    let (mean, var) = moments(w)?;
    let x_var = var - sigma2;
    if !(x_var > 0.0) {
        return Err(EivError::DegenerateMoment(format!(
            "sample variance {var} does not exceed the error variance {sigma2}"
        )));
    }
    let lambda = mean / x_var;
    let k = mean * lambda;
    if !(lambda > 0.0 && k > 0.0) {
        return Err(EivError::DegenerateMoment(format!(
            "non-positive gamma estimates k={k}, lambda={lambda}"
        )));
    }
    Ok((k, lambda))
}

/// Moment estimates `(k1, lambda)` of a Gamma covariate observed with
/// `Gamma(k2, lambda)` error: `lambda = mean / var`, `k1 = mean * lambda - k2`.
pub fn estimate_nuisance_gamma_error(w: &[f64], k2: f64) -> Result<(f64, f64)> {
    let (mean, var) = moments(w)?;
    if !(var > 0.0) {
        return Err(EivError::DegenerateMoment("sample variance is zero".into()));
    }
    let lambda = mean / var;
    let k1 = mean * lambda - k2;
    if !(lambda > 0.0 && k1 > 0.0) {
        return Err(EivError::DegenerateMoment(format!(
            "non-positive gamma estimates k1={k1}, lambda={lambda}"
        )));
    }
    Ok((k1, lambda))
}

/// Covariate and error laws implied by moment estimation from `w`, for the two
/// supported error families. `u_template` supplies the family and its known
/// parameter (`sigma2` for Normal, `k2` for Gamma).
pub fn moment_laws(w: &[f64], u_template: &DistSpec) -> Result<(DistSpec, DistSpec)> {
    match u_template.law() {
        Law::Normal { mean: 0.0, variance } => {
            let (k, lambda) = estimate_nuisance_normal_error(w, variance)?;
            Ok((DistSpec::gamma(k, lambda)?, *u_template))
        }
        Law::Gamma { shape: k2, .. } => {
            let (k1, lambda) = estimate_nuisance_gamma_error(w, k2)?;
            Ok((DistSpec::gamma(k1, lambda)?, DistSpec::gamma(k2, lambda)?))
        }
        _ => Err(EivError::Config(format!(
            "moment estimation needs a normal:0:sigma2 or gamma:k2:lambda error law, got {u_template}"
        ))),
    }
}
