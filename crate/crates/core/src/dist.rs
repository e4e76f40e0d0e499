//! Parametric laws for the covariate and the measurement error.
//!
//! Each law carries closed-form moment and cumulant generating function
//! analytics together with the open interval on which its MGF is finite.
//! Only Gamma, Normal and a point mass at zero are supported; these are the
//! families for which the bias map has closed forms.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{EivError, Result};

/// The family and parameters of a law. Use [`DistSpec`] constructors to build
/// a validated value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Law {
    /// Gamma with shape `k` and rate `lambda` (mean `k / lambda`).
    Gamma { shape: f64, rate: f64 },
    /// Normal parameterised by mean and variance.
    Normal { mean: f64, variance: f64 },
    /// Point mass at zero.
    DegenerateZero,
}

/// A validated distribution specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DistSpec(Law);

/// Open interval `(lo, hi)` of arguments where the MGF is finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MgfDomain {
    pub lo: f64,
    pub hi: f64,
}

impl MgfDomain {
    pub const REAL_LINE: MgfDomain = MgfDomain {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }

    pub fn intersect(&self, other: &MgfDomain) -> MgfDomain {
        MgfDomain {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }
}

impl DistSpec {
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) || !(rate.is_finite() && rate > 0.0) {
            return Err(EivError::InvalidParameter(format!(
                "gamma requires shape > 0 and rate > 0, got shape={shape}, rate={rate}"
            )));
        }
        Ok(DistSpec(Law::Gamma { shape, rate }))
    }

    /// Normal law; a zero variance is accepted as a degenerate error model.
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance.is_finite() && variance >= 0.0) {
            return Err(EivError::InvalidParameter(format!(
                "normal requires a finite mean and variance >= 0, got mean={mean}, variance={variance}"
            )));
        }
        Ok(DistSpec(Law::Normal { mean, variance }))
    }

    pub fn degenerate_zero() -> Self {
        DistSpec(Law::DegenerateZero)
    }

    pub fn from_law(law: Law) -> Result<Self> {
        match law {
            Law::Gamma { shape, rate } => Self::gamma(shape, rate),
            Law::Normal { mean, variance } => Self::normal(mean, variance),
            Law::DegenerateZero => Ok(Self::degenerate_zero()),
        }
    }

    pub fn law(&self) -> Law {
        self.0
    }

    pub fn is_degenerate_zero(&self) -> bool {
        matches!(self.0, Law::DegenerateZero)
    }

    pub fn mgf_domain(&self) -> MgfDomain {
        match self.0 {
            Law::Gamma { rate, .. } => MgfDomain {
                lo: f64::NEG_INFINITY,
                hi: rate,
            },
            Law::Normal { .. } | Law::DegenerateZero => MgfDomain::REAL_LINE,
        }
    }

    fn check(&self, t: f64) -> Result<()> {
        let dom = self.mgf_domain();
        if dom.contains(t) {
            Ok(())
        } else {
            Err(EivError::Domain {
                what: "t",
                t,
                lo: dom.lo,
                hi: dom.hi,
                law: self.to_string(),
            })
        }
    }

    /// `M(t) = E[exp(tV)]`.
    pub fn mgf(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(match self.0 {
            Law::Gamma { shape, rate } => (1.0 - t / rate).powf(-shape),
            Law::Normal { mean, variance } => (mean * t + 0.5 * variance * t * t).exp(),
            Law::DegenerateZero => 1.0,
        })
    }

    /// `K(t) = log M(t)`, evaluated without forming `M(t)`.
    pub fn cgf(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(match self.0 {
            Law::Gamma { shape, rate } => -shape * (-t / rate).ln_1p(),
            Law::Normal { mean, variance } => mean * t + 0.5 * variance * t * t,
            Law::DegenerateZero => 0.0,
        })
    }

    /// `K'(t) = M'(t) / M(t)`; equals the mean at `t = 0`.
    pub fn cgf_prime(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(match self.0 {
            Law::Gamma { shape, rate } => shape / (rate - t),
            Law::Normal { mean, variance } => mean + variance * t,
            Law::DegenerateZero => 0.0,
        })
    }

    /// `K''(t)`; equals the variance at `t = 0`.
    pub fn cgf_double_prime(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(match self.0 {
            Law::Gamma { shape, rate } => shape / ((rate - t) * (rate - t)),
            Law::Normal { variance, .. } => variance,
            Law::DegenerateZero => 0.0,
        })
    }

    pub fn mean(&self) -> f64 {
        match self.0 {
            Law::Gamma { shape, rate } => shape / rate,
            Law::Normal { mean, .. } => mean,
            Law::DegenerateZero => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match self.0 {
            Law::Gamma { shape, rate } => shape / (rate * rate),
            Law::Normal { variance, .. } => variance,
            Law::DegenerateZero => 0.0,
        }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.0 {
            // Parameters were validated at construction, so these cannot fail.
            Law::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate)
                .expect("validated gamma parameters")
                .sample(rng),
            Law::Normal { mean, variance } => Normal::new(mean, variance.sqrt())
                .expect("validated normal parameters")
                .sample(rng),
            Law::DegenerateZero => 0.0,
        }
    }

    /// `n` i.i.d. draws. The output is a pure function of the generator state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        match self.0 {
            Law::Gamma { shape, rate } => {
                let d = Gamma::new(shape, 1.0 / rate).expect("validated gamma parameters");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Law::Normal { mean, variance } => {
                let d = Normal::new(mean, variance.sqrt()).expect("validated normal parameters");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Law::DegenerateZero => vec![0.0; n],
        }
    }
}

impl fmt::Display for DistSpec {
    /// Formats in the `gamma:k:lambda` / `normal:mu:sigma2` / `degenerate` syntax.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Law::Gamma { shape, rate } => write!(f, "gamma:{shape}:{rate}"),
            Law::Normal { mean, variance } => write!(f, "normal:{mean}:{variance}"),
            Law::DegenerateZero => write!(f, "degenerate"),
        }
    }
}

impl std::str::FromStr for DistSpec {
    type Err = EivError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').map(str::trim).collect();
        let num = |p: &str| -> Result<f64> {
            p.parse::<f64>()
                .map_err(|_| EivError::InvalidParameter(format!("bad number {p:?} in law {s:?}")))
        };
        match parts.as_slice() {
            [fam, a, b] if fam.eq_ignore_ascii_case("gamma") => DistSpec::gamma(num(a)?, num(b)?),
            [fam, a, b] if fam.eq_ignore_ascii_case("normal") => DistSpec::normal(num(a)?, num(b)?),
            [fam] if fam.eq_ignore_ascii_case("degenerate") => Ok(DistSpec::degenerate_zero()),
            _ => Err(EivError::InvalidParameter(format!(
                "unrecognised law {s:?}; expected gamma:k:lambda, normal:mu:sigma2 or degenerate"
            ))),
        }
    }
}

impl<'de> Deserialize<'de> for DistSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let law = Law::deserialize(d)?;
        DistSpec::from_law(law).map_err(serde::de::Error::custom)
    }
}

/// Law of `W = X + U` for independent `X` and `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependentSum {
    pub x: DistSpec,
    pub u: DistSpec,
}

impl IndependentSum {
    pub fn new(x: DistSpec, u: DistSpec) -> Self {
        IndependentSum { x, u }
    }

    pub fn mgf_domain(&self) -> MgfDomain {
        self.x.mgf_domain().intersect(&self.u.mgf_domain())
    }

    pub fn mgf(&self, t: f64) -> Result<f64> {
        Ok(self.x.mgf(t)? * self.u.mgf(t)?)
    }

    pub fn cgf(&self, t: f64) -> Result<f64> {
        Ok(self.x.cgf(t)? + self.u.cgf(t)?)
    }

    pub fn cgf_prime(&self, t: f64) -> Result<f64> {
        Ok(self.x.cgf_prime(t)? + self.u.cgf_prime(t)?)
    }

    pub fn cgf_double_prime(&self, t: f64) -> Result<f64> {
        Ok(self.x.cgf_double_prime(t)? + self.u.cgf_double_prime(t)?)
    }

    /// `K_W'` written directly for the two closed-form families: Gamma plus
    /// Normal, and Gamma plus Gamma with a shared rate (whose sum is again
    /// Gamma). `None` for any other pair.
    pub fn closed_form_cgf_prime(&self, t: f64) -> Option<Result<f64>> {
        match (self.x.law(), self.u.law()) {
            (Law::Gamma { shape, rate }, Law::Normal { mean, variance }) => Some(
                self.mgf_domain_check(t)
                    .map(|_| shape / (rate - t) + mean + variance * t),
            ),
            (
                Law::Gamma {
                    shape: k1,
                    rate: l1,
                },
                Law::Gamma {
                    shape: k2,
                    rate: l2,
                },
            ) if l1 == l2 => Some(DistSpec::gamma(k1 + k2, l1).and_then(|w| w.cgf_prime(t))),
            _ => None,
        }
    }

    fn mgf_domain_check(&self, t: f64) -> Result<()> {
        self.x.cgf(t)?;
        self.u.cgf(t)?;
        Ok(())
    }
}
