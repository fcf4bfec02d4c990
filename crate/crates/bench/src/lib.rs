//! Fixtures shared by the benchmarks.

use pmgauss_core::experiments::{log_space, ScenarioConfig};
use pmgauss_core::{EnvParams, ProbeParams};

/// The three scattering regimes of the default scenario.
pub const LAMBDAS: [f64; 3] = [3e15, 3e20, 3e22];

/// A probe and environment per regime at a fixed correlation.
pub fn regimes(gamma: f64) -> Vec<(ProbeParams, EnvParams)> {
    LAMBDAS
        .iter()
        .map(|&l| {
            (
                ProbeParams::fullerene(gamma),
                EnvParams::air(l).expect("positive lambda"),
            )
        })
        .collect()
}

/// Log-spaced evaluation times over the default window.
pub fn times(n: usize) -> Vec<f64> {
    log_space(1e-8, 1e-4, n)
}

/// Default scenario with `n` points on every sweep axis.
pub fn small_config(n: usize) -> ScenarioConfig {
    let text = format!(
        "t_points = {n}\ngamma_points = {n}\ncontour_t_points = {n}\ncontour_gamma_points = {n}\n"
    );
    ScenarioConfig::parse(&text).expect("valid bench config")
}
