//! Simultaneous estimation of a position-momentum correlation `γ` and a
//! scattering decoherence constant `Λ` with a single-mode Gaussian probe.
//!
//! The crate is organised bottom-up:
//!
//! * [`phase_space`]: probe and environment parameters, the evolved
//!   covariance matrix and its parameter derivatives.
//! * [`qfim`]: quantum Fisher information matrix over `(γ, Λ)`, the
//!   multiparameter bounds derived from it and the SLD compatibility trace.
//! * [`decoherence`]: the `Λ(T)` thermometry map, the evolved density matrix
//!   and a quadrature propagator used as an independent oracle.
//! * [`wigner`]: Gaussian Wigner functions and phase-space grids.
//! * [`experiments`]: configurable sweeps producing [`ResultTable`]s.
//!
//! All computations are pure functions of immutable inputs.

pub mod constants;
pub mod decoherence;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod phase_space;
pub mod qfim;
pub mod quadrature;
pub mod wigner;

pub use decoherence::{RhoParameters, ThermometryConstants};
pub use error::{Error, Result};
pub use experiments::{ResultTable, ScenarioConfig};
pub use phase_space::{
    CovDerivative, CovarianceMatrix, EnvParams, Param, ProbeParams, SymplecticForm,
};
pub use qfim::{PrecisionReport, QfimMatrix};
pub use wigner::PhaseSpaceGrid;
