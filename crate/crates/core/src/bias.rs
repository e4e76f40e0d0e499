//! Population limit of the naive estimator and its asymptotic bias.
//!
//! The naive slope converges to the root `b1` of
//! `G(beta1, b1) = K_W'(b1) - E[U] - K_X'(beta1)`, written `b1 = g(beta1)`,
//! and the naive intercept to `b0 = beta0 + K_X(beta1) - K_W(b1)`. The
//! asymptotic MSE is the squared asymptotic bias because the naive
//! estimator's variance vanishes.

use serde::Serialize;

use crate::dist::{DistSpec, IndependentSum, Law, MgfDomain};
use crate::error::{EivError, Result};
use crate::naive::ModelParams;
use crate::roots::solve_increasing;

/// `|G|` tolerance for numerically located roots.
pub const ROOT_TOL: f64 = 1e-12;

/// Covariate law, error law and true coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EivModel {
    pub x_spec: DistSpec,
    pub u_spec: DistSpec,
    pub beta: ModelParams,
}

impl EivModel {
    pub fn new(x_spec: DistSpec, u_spec: DistSpec, beta: ModelParams) -> Result<Self> {
        let dom = x_spec.mgf_domain();
        if !dom.contains(beta.beta1) {
            return Err(EivError::Domain {
                what: "beta1",
                t: beta.beta1,
                lo: dom.lo,
                hi: dom.hi,
                law: x_spec.to_string(),
            });
        }
        Ok(EivModel {
            x_spec,
            u_spec,
            beta,
        })
    }

    pub fn w_law(&self) -> IndependentSum {
        IndependentSum::new(self.x_spec, self.u_spec)
    }
}

/// Naive limit `b`, asymptotic bias `b - beta` and asymptotic MSE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasReport {
    pub b: ModelParams,
    pub bias: [f64; 2],
    pub asy_mse: [f64; 2],
}

impl BiasReport {
    pub fn zero(beta: ModelParams) -> Self {
        BiasReport {
            b: beta,
            bias: [0.0; 2],
            asy_mse: [0.0; 2],
        }
    }
}

/// Which route produced a value of `g` or `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapPath {
    /// Error law is a point mass at zero, so the map is the identity.
    Identity,
    GammaNormal,
    GammaGamma,
    Generic,
}

impl MapPath {
    pub fn is_closed_form(self) -> bool {
        !matches!(self, MapPath::Generic)
    }
}

/// Value of `g` or `h` together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapSolution {
    pub value: f64,
    pub path: MapPath,
    /// Root-finder iterations; zero on closed-form paths.
    pub iterations: usize,
    /// For Gamma X with Normal U: the other root of `G = 0`, which fails the
    /// antilogarithm condition and is never returned as `value`.
    pub rejected_branch: Option<f64>,
}

pub(crate) fn closed_family(x: &DistSpec, u: &DistSpec) -> MapPath {
    match (x.law(), u.law()) {
        (_, Law::DegenerateZero) => MapPath::Identity,
        (Law::Gamma { .. }, Law::Normal { variance, .. }) if variance > 0.0 => MapPath::GammaNormal,
        (Law::Gamma { rate: l1, .. }, Law::Gamma { rate: l2, .. }) if l1 == l2 => {
            MapPath::GammaGamma
        }
        _ => MapPath::Generic,
    }
}

fn domain_err(what: &'static str, t: f64, dom: MgfDomain, x: &DistSpec, u: &DistSpec) -> EivError {
    EivError::Domain {
        what,
        t,
        lo: dom.lo,
        hi: dom.hi,
        law: format!("{x} + {u}"),
    }
}

/// `G(beta1, b1) = K_X'(b1) + K_U'(b1) - E[U] - K_X'(beta1)`.
pub fn big_g(x: &DistSpec, u: &DistSpec, beta1: f64, b1: f64) -> Result<f64> {
    Ok(x.cgf_prime(b1)? + u.cgf_prime(b1)? - u.mean() - x.cgf_prime(beta1)?)
}

struct GammaNormalRoots {
    admissible: f64,
    rejected: f64,
    discriminant: f64,
}

/// Both roots in `b1` of `k/(lambda - b1) + sigma2 b1 = k/(lambda - beta1)`.
fn gamma_normal_roots(k: f64, lambda: f64, sigma2: f64, beta1: f64) -> GammaNormalRoots {
    let a = lambda - beta1;
    let lead = a * lambda * sigma2 + k;
    let dev = a * lambda * sigma2 - k;
    let s = dev * dev + 4.0 * a * a * sigma2 * k;
    let root_s = s.sqrt();
    // (lead - sqrt(s)) / (2 a sigma2) rewritten using lead^2 - s = 4 a sigma2 k beta1
    // to avoid cancellation for small sigma2.
    let admissible = 2.0 * k * beta1 / (lead + root_s);
    let rejected = (lead + root_s) / (2.0 * a * sigma2);
    GammaNormalRoots {
        admissible,
        rejected,
        discriminant: s,
    }
}

/// Forward map `g` solved numerically: the root of the increasing
/// `b1 -> G(beta1, b1)` on `dom M_X ∩ dom M_U`, bracketed outward from 0.
pub fn forward_map_g_generic(x: &DistSpec, u: &DistSpec, beta1: f64) -> Result<MapSolution> {
    let rhs = u.mean() + x.cgf_prime(beta1)?;
    let w = IndependentSum::new(*x, *u);
    let root = solve_increasing(
        |b1| Ok(w.cgf_prime(b1)? - rhs),
        0.0,
        w.mgf_domain(),
        ROOT_TOL,
    )?;
    Ok(MapSolution {
        value: root.x,
        path: MapPath::Generic,
        iterations: root.iterations,
        rejected_branch: None,
    })
}

/// Forward map `g`: the naive-limit slope `b1` for true slope `beta1`.
pub fn forward_map_g_detailed(x: &DistSpec, u: &DistSpec, beta1: f64) -> Result<MapSolution> {
    let xdom = x.mgf_domain();
    if !xdom.contains(beta1) {
        return Err(domain_err("beta1", beta1, xdom, x, u));
    }
    let closed = |value, rejected_branch| MapSolution {
        value,
        path: closed_family(x, u),
        iterations: 0,
        rejected_branch,
    };
    match (closed_family(x, u), x.law(), u.law()) {
        (MapPath::Identity, ..) => Ok(closed(beta1, None)),
        (MapPath::GammaNormal, Law::Gamma { shape, rate }, Law::Normal { variance, .. }) => {
            let r = gamma_normal_roots(shape, rate, variance, beta1);
            debug_assert!(r.discriminant > 0.0);
            Ok(closed(r.admissible, Some(r.rejected)))
        }
        (MapPath::GammaGamma, Law::Gamma { shape: k1, rate }, Law::Gamma { shape: k2, .. }) => {
            let b1 = k1 * rate * beta1 / (k1 * rate + k2 * (rate - beta1));
            Ok(closed(b1, None))
        }
        _ => forward_map_g_generic(x, u, beta1),
    }
}

pub fn forward_map_g(x: &DistSpec, u: &DistSpec, beta1: f64) -> Result<f64> {
    forward_map_g_detailed(x, u, beta1).map(|s| s.value)
}

/// Naive limit `b` of the model and the asymptotic bias and MSE of the naive estimator.
pub fn naive_limit(model: &EivModel) -> Result<BiasReport> {
    let (x, u, beta) = (&model.x_spec, &model.u_spec, model.beta);
    if u.is_degenerate_zero() {
        return Ok(BiasReport::zero(beta));
    }
    let b1 = forward_map_g(x, u, beta.beta1)?;
    let wdom = model.w_law().mgf_domain();
    if !wdom.contains(b1) {
        return Err(domain_err("b1", b1, wdom, x, u));
    }
    let b0 = beta.beta0 + x.cgf(beta.beta1)? - x.cgf(b1)? - u.cgf(b1)?;
    let bias = [b0 - beta.beta0, b1 - beta.beta1];
    Ok(BiasReport {
        b: ModelParams {
            beta0: b0,
            beta1: b1,
        },
        bias,
        asy_mse: [bias[0] * bias[0], bias[1] * bias[1]],
    })
}
