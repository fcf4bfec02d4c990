//! Probe and environment parameters and the evolved second moments.
//!
//! Covariance matrices are dimensionless: positions are measured in units of
//! the initial width `σ₀`, momenta in `ħ/σ₀`, and the matrix is built from
//! anticommutators so that a pure state has `det σ = 1`. Internally time is
//! measured in units of `τ₀ = mσ₀²/ħ` and `Λ` in units of `1/(σ₀²τ₀)`; SI
//! values are accepted and returned at the API boundary.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::decoherence::ThermometryConstants;
use crate::error::{invalid, Error, Result};
use crate::linalg::Mat2;

/// Tolerance on the uncertainty relation `det σ ≥ 1`.
pub const VALIDITY_TOL: f64 = 1e-9;

/// Fullerene probe used throughout the reference scenario.
pub const DEFAULT_MASS: f64 = 1.2e-24;
pub const DEFAULT_SIGMA0: f64 = 7.8e-9;
pub const DEFAULT_ELL0: f64 = 50e-9;

/// Initial correlated Gaussian probe.
///
/// `ell0` is the transverse coherence length; `f64::INFINITY` selects the
/// fully coherent (pure) source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeParams {
    mass: f64,
    sigma0: f64,
    ell0: f64,
    gamma: f64,
}

impl ProbeParams {
    pub fn new(mass: f64, sigma0: f64, ell0: f64, gamma: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(invalid(
                "mass",
                format!("must be positive and finite, got {mass}"),
            ));
        }
        if !(sigma0.is_finite() && sigma0 > 0.0) {
            return Err(invalid(
                "sigma0",
                format!("must be positive and finite, got {sigma0}"),
            ));
        }
        if ell0.is_nan() || ell0 <= 0.0 {
            return Err(invalid(
                "ell0",
                format!("must be positive (or +inf), got {ell0}"),
            ));
        }
        if !gamma.is_finite() {
            return Err(invalid("gamma", format!("must be finite, got {gamma}")));
        }
        Ok(Self {
            mass,
            sigma0,
            ell0,
            gamma,
        })
    }

    /// The fullerene probe (m = 1.2e-24 kg, σ₀ = 7.8 nm, ℓ₀ = 50 nm).
    pub fn fullerene(gamma: f64) -> Self {
        Self::new(DEFAULT_MASS, DEFAULT_SIGMA0, DEFAULT_ELL0, gamma)
            .expect("default probe parameters are valid")
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn ell0(&self) -> f64 {
        self.ell0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_fully_coherent(&self) -> bool {
        self.ell0.is_infinite()
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.mass, self.sigma0, self.ell0, gamma)
    }

    pub fn with_ell0(self, ell0: f64) -> Result<Self> {
        Self::new(self.mass, self.sigma0, ell0, self.gamma)
    }

    /// Characteristic time `mσ₀²/ħ` in seconds.
    pub fn tau0(&self) -> f64 {
        self.mass * self.sigma0 * self.sigma0 / HBAR
    }

    /// `σ₀²/ℓ₀²`, exactly zero for an infinite coherence length.
    pub fn coherence_ratio(&self) -> f64 {
        if self.ell0.is_infinite() {
            0.0
        } else {
            (self.sigma0 / self.ell0).powi(2)
        }
    }

    /// SI value of one unit of the dimensionless scattering constant.
    pub fn lambda_unit(&self) -> f64 {
        1.0 / (self.sigma0 * self.sigma0 * self.tau0())
    }
}

/// Free function form of [`ProbeParams::tau0`].
pub fn tau0(probe: &ProbeParams) -> f64 {
    probe.tau0()
}

/// Scattering environment: `Λ` in m⁻²s⁻¹ plus the gas constants that map it
/// to a temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvParams {
    lambda: f64,
    gas: ThermometryConstants,
}

impl EnvParams {
    pub fn new(lambda: f64, gas: ThermometryConstants) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid(
                "lambda",
                format!("must be finite and >= 0, got {lambda}"),
            ));
        }
        Ok(Self { lambda, gas })
    }

    /// Air at the given scattering constant.
    pub fn air(lambda: f64) -> Result<Self> {
        Self::new(lambda, ThermometryConstants::air())
    }

    /// Environment whose `Λ` is derived from a bath temperature.
    pub fn from_temperature(temperature: f64, gas: ThermometryConstants) -> Result<Self> {
        Self::new(gas.lambda_of_temperature(temperature)?, gas)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gas(&self) -> &ThermometryConstants {
        &self.gas
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.gas)
    }

    /// Bath temperature in kelvin; `None` when `Λ = 0`.
    pub fn temperature(&self) -> Option<f64> {
        self.gas.temperature_of_lambda(self.lambda).ok()
    }
}

/// Estimated parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Gamma,
    Lambda,
}

impl Param {
    pub const ALL: [Param; 2] = [Param::Gamma, Param::Lambda];

    pub fn name(self) -> &'static str {
        match self {
            Param::Gamma => "gamma",
            Param::Lambda => "lambda",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(Param::Gamma),
            "lambda" => Ok(Param::Lambda),
            other => Err(invalid("param", format!("unknown parameter `{other}`"))),
        }
    }
}

/// Symplectic form `Ω = [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SymplecticForm;

impl SymplecticForm {
    pub const MATRIX: Mat2 = [[0.0, 1.0], [-1.0, 0.0]];

    pub fn matrix(&self) -> Mat2 {
        Self::MATRIX
    }
}

/// Symmetric 2×2 covariance matrix of the dimensionless quadratures.
///
/// The determinant is carried alongside the entries. Near the pure limit
/// `σ_xx σ_pp − σ_xp²` cancels to roughly `ε σ_xx σ_pp`, so constructors
/// that know `det σ` in closed form store it directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceMatrix {
    pub sxx: f64,
    pub sxp: f64,
    pub spp: f64,
    det: f64,
}

impl CovarianceMatrix {
    pub fn new(sxx: f64, sxp: f64, spp: f64) -> Self {
        // Kahan's fma form: exact up to a few ulps of the result
        let p = sxp * sxp;
        let err = sxp.mul_add(sxp, -p);
        let det = sxx.mul_add(spp, -p) - err;
        Self { sxx, sxp, spp, det }
    }

    /// Entries with a determinant known more accurately than the entries'
    /// product.
    pub fn with_det(sxx: f64, sxp: f64, spp: f64, det: f64) -> Self {
        Self { sxx, sxp, spp, det }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn to_mat2(&self) -> Mat2 {
        [[self.sxx, self.sxp], [self.sxp, self.spp]]
    }

    /// First moments; the probe is never displaced.
    pub fn displacement(&self) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Positive diagonal and `det σ ≥ 1 − tol`.
    pub fn is_physical(&self) -> bool {
        self.sxx > 0.0 && self.spp > 0.0 && self.det() >= 1.0 - VALIDITY_TOL
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        if !(det > 0.0) {
            return Err(Error::Unphysical { det });
        }
        Ok([
            [self.spp / det, -self.sxp / det],
            [-self.sxp / det, self.sxx / det],
        ])
    }

    /// Uniform scaling, used to step off the pure-state manifold.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::with_det(
            self.sxx * factor,
            self.sxp * factor,
            self.spp * factor,
            self.det * factor * factor,
        )
    }

    /// Orientation of the major axis of the covariance ellipse, radians.
    pub fn orientation(&self) -> f64 {
        0.5 * (2.0 * self.sxp).atan2(self.sxx - self.spp)
    }
}

/// Entrywise derivative of a [`CovarianceMatrix`] with respect to one
/// parameter, in the parameter's SI units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CovDerivative {
    pub dxx: f64,
    pub dxp: f64,
    pub dpp: f64,
}

impl CovDerivative {
    pub fn new(dxx: f64, dxp: f64, dpp: f64) -> Self {
        Self { dxx, dxp, dpp }
    }

    pub fn to_mat2(&self) -> Mat2 {
        [[self.dxx, self.dxp], [self.dxp, self.dpp]]
    }

    pub fn max_abs(&self) -> f64 {
        self.dxx.abs().max(self.dxp.abs()).max(self.dpp.abs())
    }

    /// Largest entrywise difference relative to the largest entry of `self`.
    pub fn rel_diff(&self, other: &CovDerivative) -> f64 {
        let diff = (self.dxx - other.dxx)
            .abs()
            .max((self.dxp - other.dxp).abs())
            .max((self.dpp - other.dpp).abs());
        let scale = self.max_abs();
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

/// Evolution variables in units of `σ₀`, `τ₀` and `1/(σ₀²τ₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Scaled {
    pub s: f64,
    pub gamma: f64,
    pub r: f64,
    pub lam: f64,
}

impl Scaled {
    pub fn new(probe: &ProbeParams, env: &EnvParams, t: f64) -> Result<Self> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let tau0 = probe.tau0();
        Ok(Self {
            s: t / tau0,
            gamma: probe.gamma,
            r: probe.coherence_ratio(),
            lam: env.lambda * probe.sigma0 * probe.sigma0 * tau0,
        })
    }

    // σ_xx = (t/τ₀)²[1 + (τ₀/t + γ)² + 2σ₀²/ℓ₀² + 4Λtσ₀²/3], expanded so t = 0 is regular
    pub fn covariance(&self) -> CovarianceMatrix {
        let Scaled { s, gamma, r, lam } = *self;
        let beta = 1.0 + gamma * gamma;
        let g = 1.0 + gamma * s;
        // det σ − 1 expanded: every term carries r or λ̃
        let s3 = s * s * s;
        let excess = 2.0 * r
            + 4.0 * lam * s
            + 4.0 * gamma * lam * s * s
            + 4.0 / 3.0 * lam * s3 * (1.0 + 2.0 * r + gamma * gamma)
            + 4.0 / 3.0 * lam * lam * s3 * s;
        CovarianceMatrix::with_det(
            g * g + s * s * (1.0 + 2.0 * r) + 4.0 / 3.0 * lam * s3,
            gamma + s * beta + 2.0 * r * s + 2.0 * lam * s * s,
            beta + 2.0 * r + 4.0 * lam * s,
            1.0 + excess,
        )
    }
}

/// Covariance matrix of the probe after evolving for `t` seconds.
pub fn covariance(probe: &ProbeParams, env: &EnvParams, t: f64) -> Result<CovarianceMatrix> {
    Ok(Scaled::new(probe, env, t)?.covariance())
}

/// Analytic derivative of [`covariance`] with respect to `which`.
///
/// `∂_γ` is dimensionless; `∂_Λ` carries m²s.
pub fn d_covariance(
    probe: &ProbeParams,
    env: &EnvParams,
    t: f64,
    which: Param,
) -> Result<CovDerivative> {
    let sc = Scaled::new(probe, env, t)?;
    let s = sc.s;
    Ok(match which {
        Param::Gamma => CovDerivative {
            dxx: 2.0 * s * (1.0 + sc.gamma * s),
            dxp: 1.0 + 2.0 * sc.gamma * s,
            dpp: 2.0 * sc.gamma,
        },
        Param::Lambda => {
            let unit = probe.sigma0 * probe.sigma0 * probe.tau0();
            CovDerivative {
                dxx: 4.0 / 3.0 * s * s * s * unit,
                dxp: 2.0 * s * s * unit,
                dpp: 4.0 * s * unit,
            }
        }
    })
}

/// Central-difference step for [`finite_diff_covariance`].
///
/// The entries are quadratic in `γ` and linear in `Λ`, so central
/// differences carry no truncation error and only roundoff remains, which
/// shrinks as the step grows. The step is therefore the largest natural one
/// that keeps `Λ − h ≥ 0`: `max(|γ|, 1)` for `γ` and `Λ` itself for `Λ`.
/// At `Λ = 0` no central step stays in the valid domain; the returned
/// `ε^{1/3}/(σ₀²τ₀)` is rejected by [`finite_diff_covariance`].
pub fn default_step(probe: &ProbeParams, env: &EnvParams, which: Param) -> f64 {
    match which {
        Param::Gamma => probe.gamma.abs().max(1.0),
        Param::Lambda if env.lambda > 0.0 => env.lambda,
        Param::Lambda => f64::EPSILON.cbrt() * probe.lambda_unit(),
    }
}

/// Central finite difference `(σ(θ+h) − σ(θ−h)) / 2h`, entrywise.
pub fn finite_diff_covariance(
    probe: &ProbeParams,
    env: &EnvParams,
    t: f64,
    which: Param,
    step: f64,
) -> Result<CovDerivative> {
    if !(step.is_finite() && step > 0.0) {
        return Err(invalid("step", format!("must be positive, got {step}")));
    }
    let value = match which {
        Param::Gamma => probe.gamma,
        Param::Lambda => env.lambda,
    };
    let (up, down) = (value + step, value - step);
    if up == value || down == value {
        return Err(Error::StepUnderflow { step, value });
    }
    let (plus, minus) = match which {
        Param::Gamma => (
            covariance(&probe.with_gamma(up)?, env, t)?,
            covariance(&probe.with_gamma(down)?, env, t)?,
        ),
        Param::Lambda => (
            covariance(probe, &env.with_lambda(up)?, t)?,
            covariance(probe, &env.with_lambda(down)?, t)?,
        ),
    };
    // divide by the step actually realised in floating point
    let width = up - down;
    Ok(CovDerivative {
        dxx: (plus.sxx - minus.sxx) / width,
        dxp: (plus.sxp - minus.sxp) / width,
        dpp: (plus.spp - minus.spp) / width,
    })
}

/// Gaussian purity `Tr ρ² = 1/√det σ`.
pub fn purity(cov: &CovarianceMatrix) -> Result<f64> {
    let det = cov.det();
    if !(det > 0.0) || !cov.is_physical() {
        return Err(Error::Unphysical { det });
    }
    Ok(1.0 / det.sqrt())
}
