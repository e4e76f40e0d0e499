//! Scenario files for the `simulate` command.
//!
//! A scenario file is TOML. Top-level keys are shared by every row; each
//! `[[scenario]]` table names one error law to simulate:
//!
//! ```toml
//! schema_version = 1
//! seed = 20240601
//! n = 500
//! mc = 1000
//! nuisance = "moment"      # or "known"
//! x = "gamma:2:1.2"
//! beta = [0.2, 0.3]
//!
//! [[scenario]]
//! label = "sigma2=0.05"
//! u = "normal:0:0.05"
//! # error_param = 0.05    # optional; defaults to sigma2 (normal) or k2 (gamma)
//! ```

use serde::Deserialize;

use crate::bias::EivModel;
use crate::dist::{DistSpec, Law};
use crate::error::{EivError, Result};
use crate::naive::ModelParams;
use crate::sim::{NuisanceMode, SimConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenarioFile {
    schema_version: u32,
    seed: u64,
    n: usize,
    mc: usize,
    #[serde(default = "default_mode")]
    nuisance: NuisanceMode,
    x: String,
    beta: [f64; 2],
    scenario: Vec<RawRow>,
}

fn default_mode() -> NuisanceMode {
    NuisanceMode::Moment
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    label: String,
    u: String,
    error_param: Option<f64>,
}

/// A parsed scenario file: one labelled [`SimConfig`] per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub rows: Vec<(String, SimConfig)>,
}

/// Known parameter of an error law: `sigma2` for Normal, `k2` for Gamma.
pub fn default_error_param(u: &DistSpec) -> Option<f64> {
    match u.law() {
        Law::Normal { variance, .. } => Some(variance),
        Law::Gamma { shape, .. } => Some(shape),
        Law::DegenerateZero => None,
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawScenarioFile =
            toml::from_str(text).map_err(|e| EivError::Config(format!("scenario file: {e}")))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(EivError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                raw.schema_version
            )));
        }
        if raw.scenario.is_empty() {
            return Err(EivError::Config("no [[scenario]] rows".into()));
        }
        let x: DistSpec = raw.x.parse()?;
        let beta = ModelParams::new(raw.beta[0], raw.beta[1])?;
        let mut rows = Vec::with_capacity(raw.scenario.len());
        for row in raw.scenario {
            let u: DistSpec = row.u.parse()?;
            let config = SimConfig {
                model: EivModel::new(x, u, beta)?,
                n: raw.n,
                mc: raw.mc,
                seed: raw.seed,
                nuisance_mode: raw.nuisance,
                error_known_param: row.error_param.or_else(|| default_error_param(&u)),
            };
            config.validate()?;
            rows.push((row.label, config));
        }
        Ok(ScenarioFile { rows })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        for (_, c) in &mut self.rows {
            c.seed = seed;
        }
        self
    }
}
