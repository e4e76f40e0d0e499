#![allow(dead_code)]

use poisson_eiv::dist::MgfDomain;
use poisson_eiv::sim::{generate_dataset, replication_rng};
use poisson_eiv::{Dataset, DistSpec, EivModel, ModelParams};

/// Laws covered by the derivative checks.
pub fn catalog() -> Vec<DistSpec> {
    vec![
        DistSpec::gamma(2.0, 1.2).unwrap(),
        DistSpec::gamma(0.072, 1.2).unwrap(),
        DistSpec::gamma(2.88, 1.2).unwrap(),
        DistSpec::gamma(1.5, 2.0).unwrap(),
        DistSpec::normal(0.0, 0.05).unwrap(),
        DistSpec::normal(0.0, 2.0).unwrap(),
        DistSpec::normal(-1.3, 0.7).unwrap(),
        DistSpec::normal(0.0, 0.0).unwrap(),
        DistSpec::degenerate_zero(),
    ]
}

/// `n` evenly spaced points strictly inside `dom`, clipped to `[-3, 3]`.
pub fn interior_grid(dom: MgfDomain, n: usize) -> Vec<f64> {
    let lo = dom.lo.max(-3.0);
    let hi = dom.hi.min(3.0);
    let span = hi - lo;
    (0..n)
        .map(|i| lo + span * (i as f64 + 1.0) / (n as f64 + 1.0))
        .collect()
}

/// Five nuisance settings for Gamma X with Normal U: `(k, lambda, sigma2)`.
pub const GAMMA_NORMAL_GRID: [(f64, f64, f64); 5] = [
    (2.0, 1.2, 0.05),
    (2.0, 1.2, 0.5),
    (2.0, 1.2, 2.0),
    (0.7, 0.8, 1.0),
    (5.0, 3.0, 0.2),
];

/// Five nuisance settings for Gamma X with Gamma U: `(k1, k2, lambda)`.
pub const GAMMA_GAMMA_GRID: [(f64, f64, f64); 5] = [
    (2.0, 0.072, 1.2),
    (2.0, 0.72, 1.2),
    (2.0, 2.88, 1.2),
    (0.7, 1.5, 0.8),
    (5.0, 0.3, 3.0),
];

pub fn gamma_normal_pairs() -> Vec<(DistSpec, DistSpec)> {
    GAMMA_NORMAL_GRID
        .iter()
        .map(|&(k, l, s2)| {
            (
                DistSpec::gamma(k, l).unwrap(),
                DistSpec::normal(0.0, s2).unwrap(),
            )
        })
        .collect()
}

pub fn gamma_gamma_pairs() -> Vec<(DistSpec, DistSpec)> {
    GAMMA_GAMMA_GRID
        .iter()
        .map(|&(k1, k2, l)| {
            (
                DistSpec::gamma(k1, l).unwrap(),
                DistSpec::gamma(k2, l).unwrap(),
            )
        })
        .collect()
}

/// 50 admissible slopes in `[lambda - 3, lambda - 0.05]` for a Gamma covariate.
pub fn admissible_slopes(x: &DistSpec) -> Vec<f64> {
    let hi = x.mgf_domain().hi;
    (0..50)
        .map(|i| (hi - 3.0) + (2.95 * i as f64) / 49.0)
        .collect()
}

/// `|actual - printed|` is within half a unit in the fourth significant digit.
pub fn matches_4sig(actual: f64, printed: f64) -> bool {
    if printed == 0.0 {
        return actual == 0.0;
    }
    let half = 0.5 * 10f64.powi(printed.abs().log10().floor() as i32 - 3);
    (actual - printed).abs() <= half * (1.0 + 1e-9)
}

pub fn case1_model(sigma2: f64) -> EivModel {
    EivModel::new(
        DistSpec::gamma(2.0, 1.2).unwrap(),
        DistSpec::normal(0.0, sigma2).unwrap(),
        ModelParams::new(0.2, 0.3).unwrap(),
    )
    .unwrap()
}

pub fn case2_model(k2: f64) -> EivModel {
    EivModel::new(
        DistSpec::gamma(2.0, 1.2).unwrap(),
        DistSpec::gamma(k2, 1.2).unwrap(),
        ModelParams::new(0.2, 0.3).unwrap(),
    )
    .unwrap()
}

pub fn simulated(model: &EivModel, n: usize, seed: u64) -> Dataset {
    generate_dataset(model, n, &mut replication_rng(seed, 0)).unwrap()
}
