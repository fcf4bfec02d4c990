//! Physical constants (CODATA exact values).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Identifier written into every output provenance header.
pub const CONSTANTS_VERSION: &str = "CODATA-2018 (hbar=1.054571817e-34, kB=1.380649e-23)";
