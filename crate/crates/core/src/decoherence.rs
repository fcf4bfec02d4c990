//! Scattering decoherence: the `Λ(T)` thermometry map, the evolved density
//! matrix in position representation, and a quadrature propagator that
//! serves as an independent check of both.
//!
//! The evolved state is
//! `ρ(x, x′) = 𝒩 exp(−𝒜x² − ℬx′² + 𝒞xx′)` with
//! `𝒜 = A₁ + A₂ − iA₃`, `ℬ = 𝒜*` and `𝒞 = 2A₂`, which is the unique
//! Hermitian assembly whose diagonal is normalised by `𝒩 = √(2A₁/π)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::constants::{HBAR, K_B};
use crate::error::{invalid, Result};
use crate::phase_space::{covariance, CovarianceMatrix, EnvParams, ProbeParams, Scaled};
use crate::quadrature::{check_refinement, QuadratureSpec, Rule};

/// Mass of an air molecule, kg.
pub const AIR_MASS: f64 = 5.0e-26;
/// Number density of air molecules, m⁻³.
pub const AIR_NUMBER_DENSITY: f64 = 4.0e14;
/// Size of the probe molecule, m.
pub const MOLECULE_SIZE: f64 = 7e-10;

/// Gas and probe constants entering the long-wavelength scattering constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermometryConstants {
    air_mass: f64,
    number_density: f64,
    molecule_size: f64,
}

impl ThermometryConstants {
    pub fn new(air_mass: f64, number_density: f64, molecule_size: f64) -> Result<Self> {
        for (name, v) in [
            ("air_mass", air_mass),
            ("number_density", number_density),
            ("molecule_size", molecule_size),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        Ok(Self {
            air_mass,
            number_density,
            molecule_size,
        })
    }

    /// Dilute air scattering off a fullerene.
    pub fn air() -> Self {
        Self {
            air_mass: AIR_MASS,
            number_density: AIR_NUMBER_DENSITY,
            molecule_size: MOLECULE_SIZE,
        }
    }

    pub fn air_mass(&self) -> f64 {
        self.air_mass
    }

    pub fn number_density(&self) -> f64 {
        self.number_density
    }

    pub fn molecule_size(&self) -> f64 {
        self.molecule_size
    }

    // Λ = prefactor · T^{3/2}
    fn prefactor(&self) -> f64 {
        8.0 / (3.0 * HBAR * HBAR)
            * (2.0 * PI * self.air_mass).sqrt()
            * K_B.powf(1.5)
            * self.number_density
            * self.molecule_size
            * self.molecule_size
    }

    /// `Λ(T) = (8/3ħ²) √(2π m_air) (k_B T)^{3/2} N w²`.
    pub fn lambda_of_temperature(&self, temperature: f64) -> Result<f64> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(invalid(
                "temperature",
                format!("must be positive, got {temperature}"),
            ));
        }
        Ok(self.prefactor() * temperature.powf(1.5))
    }

    /// Inverse of [`lambda_of_temperature`](Self::lambda_of_temperature).
    pub fn temperature_of_lambda(&self, lambda: f64) -> Result<f64> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", format!("must be positive, got {lambda}")));
        }
        Ok((lambda / self.prefactor()).powf(2.0 / 3.0))
    }
}

pub fn lambda_of_temperature(temperature: f64, c: &ThermometryConstants) -> Result<f64> {
    c.lambda_of_temperature(temperature)
}

pub fn temperature_of_lambda(lambda: f64, c: &ThermometryConstants) -> Result<f64> {
    c.temperature_of_lambda(lambda)
}

/// Time over which coherence across `delta_x` is lost, `1/(Λ Δx²)`.
///
/// Infinite when `Λ = 0`.
pub fn decoherence_timescale(lambda: f64, delta_x: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid(
            "lambda",
            format!("must be non-negative, got {lambda}"),
        ));
    }
    if !(delta_x.is_finite() && delta_x > 0.0) {
        return Err(invalid(
            "delta_x",
            format!("must be positive, got {delta_x}"),
        ));
    }
    Ok(1.0 / (lambda * delta_x * delta_x))
}

/// Parameters of the evolved density matrix in SI units (m⁻², m⁻¹).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoParameters {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b_sq: f64,
    pub n_t: f64,
    pub a_t: Complex64,
    pub b_t: Complex64,
    pub c_t: Complex64,
    /// `A₂` with the `Λt/(12σ₀²B²)` bracket read as `(Λt + 1/(2σ₀²) + 2/ℓ₀²)`.
    /// Kept for the discrepancy report; it misses `Λt/(24σ₀⁴B²)`.
    pub a2_short: f64,
    sigma0: f64,
}

impl RhoParameters {
    /// `ρ(x, x′)` in m⁻¹ for positions in metres.
    pub fn density(&self, x: f64, xp: f64) -> Complex64 {
        let exponent = -self.a_t * x * x - self.b_t * xp * xp + self.c_t * x * xp;
        self.n_t * exponent.exp()
    }

    /// `ρ` in units of `σ₀` (positions in σ₀, density per σ₀).
    pub fn density_scaled(&self, x: f64, xp: f64) -> Complex64 {
        self.sigma0 * self.density(x * self.sigma0, xp * self.sigma0)
    }

    /// Second moments of the Gaussian kernel in the dimensionless convention
    /// of [`CovarianceMatrix`].
    pub fn covariance(&self) -> CovarianceMatrix {
        let s2 = self.sigma0 * self.sigma0;
        // ρ = 𝒩 exp(−aX² − bu² + icXu) with X = (x+x′)/2, u = x − x′.
        // a = 2Re𝒜 − 𝒞 = 2A₁ is taken from the parts, which avoids the
        // cancellation when A₂ ≫ A₁.
        let a = 2.0 * self.a1 * s2;
        let b = (0.5 * self.a1 + self.a2) * s2;
        let c = 2.0 * self.a3 * s2;
        CovarianceMatrix::with_det(1.0 / a, c / a, c * c / a + 4.0 * b, 4.0 * b / a)
    }

    /// `Tr ρ²` from the Gaussian overlap integral.
    pub fn purity(&self) -> f64 {
        let two_re = 2.0 * self.a_t.re;
        let c = self.c_t.re;
        self.n_t * self.n_t * PI / (two_re * two_re - c * c).sqrt()
    }

    /// `|ρ(x, −x)|`, the coherence between mirror points.
    pub fn coherence(&self, x: f64) -> f64 {
        self.density(x, -x).norm()
    }

    pub fn is_hermitian(&self) -> bool {
        self.b_t == self.a_t.conj() && self.c_t.im == 0.0
    }
}

/// Density-matrix parameters after evolving for `t > 0` seconds.
pub fn rho_parameters(probe: &ProbeParams, env: &EnvParams, t: f64) -> Result<RhoParameters> {
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid("t", format!("propagator requires t > 0, got {t}")));
    }
    let m = probe.mass();
    let s0 = probe.sigma0();
    let s2 = s0 * s0;
    let s4 = s2 * s2;
    let inv_l2 = if probe.is_fully_coherent() {
        0.0
    } else {
        1.0 / (probe.ell0() * probe.ell0())
    };
    let gamma = probe.gamma();
    let lt = env.lambda() * t;
    let mh = m / (HBAR * t);

    let b_sq = 1.0 / (4.0 * s4)
        + inv_l2 / (2.0 * s2)
        + (mh / 2.0 + gamma / (2.0 * s2)).powi(2)
        + lt / (3.0 * s2);
    let a1 = mh * mh / (8.0 * s2 * b_sq);
    let a2_tail = mh * mh / (4.0 * b_sq) * (inv_l2 / 2.0 + lt)
        + m * env.lambda() * gamma / (4.0 * HBAR * s2 * b_sq)
        + lt * gamma * gamma / (12.0 * s4 * b_sq);
    let a2 = a2_tail + lt / (12.0 * s2 * b_sq) * (lt + 1.0 / s2 + 2.0 * inv_l2);
    let a2_short = a2_tail + lt / (12.0 * s2 * b_sq) * (lt + 1.0 / (2.0 * s2) + 2.0 * inv_l2);
    let a3 = mh / (4.0 * s2 * b_sq) * (lt + 1.0 / (2.0 * s2) + inv_l2)
        + mh * gamma / (8.0 * s2 * b_sq) * (mh + gamma / s2);
    let n_t = (2.0 * a1 / PI).sqrt();

    let a_t = Complex64::new(a1 + a2, -a3);
    let params = RhoParameters {
        a1,
        a2,
        a3,
        b_sq,
        n_t,
        a_t,
        b_t: a_t.conj(),
        c_t: Complex64::new(2.0 * a2, 0.0),
        a2_short,
        sigma0: s0,
    };
    if !(a1 > 0.0 && b_sq > 0.0 && params.a_t.re.is_finite() && a3.is_finite()) {
        return Err(invalid(
            "rho",
            format!("unphysical kernel: A1 = {a1}, B2 = {b_sq}"),
        ));
    }
    Ok(params)
}

/// Numerical evaluation of the propagator double integral in units of `σ₀`
/// and `τ₀`.
///
/// The integral over the initial coordinates is carried out in centre and
/// difference variables `X₀ = (x₀+x₀′)/2`, `u₀ = x₀ − x₀′`, each truncated at
/// eight standard deviations of its Gaussian envelope.
#[derive(Debug, Clone)]
pub struct Propagator {
    sc: Scaled,
    x_nodes: Vec<(f64, f64)>,
    rule: Rule,
}

/// Value of `ρ(X + u/2, X − u/2)` and its first two `u`-derivatives at `u = 0`.
#[derive(Debug, Clone, Copy)]
struct DiagonalJet {
    value: Complex64,
    du: Complex64,
    duu: Complex64,
}

impl Propagator {
    pub fn new(probe: &ProbeParams, env: &EnvParams, t: f64, nodes: usize) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(invalid("t", format!("propagator requires t > 0, got {t}")));
        }
        let sc = Scaled::new(probe, env, t)?;
        let rule = Rule::new(nodes)?;
        let half = 8.0 / 2f64.sqrt();
        Ok(Self {
            sc,
            x_nodes: rule.on(-half, half),
            rule,
        })
    }

    fn decay(&self) -> f64 {
        self.sc.lam * self.sc.s / 3.0
    }

    fn u_nodes(&self, u: f64) -> Vec<(f64, f64)> {
        let kappa = 0.25 + 0.5 * self.sc.r + self.decay();
        let centre = -self.decay() * u / (2.0 * kappa);
        let half = 8.0 / (2.0 * kappa).sqrt();
        self.rule.on(centre - half, centre + half)
    }

    // integrand of the propagator at (X, u) without the 1/(2πs√π) prefactor
    fn kernel(&self, x_c: f64, u: f64, x0: f64, u0: f64) -> Complex64 {
        let Scaled { s, gamma, r, .. } = self.sc;
        let re = -x0 * x0
            - u0 * u0 / 4.0
            - r * u0 * u0 / 2.0
            - self.decay() * (u * u + u0 * u0 + u * u0);
        let im = gamma * x0 * u0 + (u - u0) * (x_c - x0) / s;
        Complex64::from_polar(re.exp(), im)
    }

    fn prefactor(&self) -> f64 {
        1.0 / (2.0 * PI * self.sc.s * PI.sqrt())
    }

    /// `ρ(x, x′)` with positions in units of `σ₀`.
    pub fn density(&self, x: f64, xp: f64) -> Complex64 {
        let x_c = 0.5 * (x + xp);
        let u = x - xp;
        let mut acc = Complex64::new(0.0, 0.0);
        for &(u0, wu) in &self.u_nodes(u) {
            for &(x0, wx) in &self.x_nodes {
                acc += wu * wx * self.kernel(x_c, u, x0, u0);
            }
        }
        acc * self.prefactor()
    }

    fn jet(&self, x_c: f64) -> DiagonalJet {
        let Scaled { s, .. } = self.sc;
        let decay = self.decay();
        let mut jet = DiagonalJet {
            value: Complex64::new(0.0, 0.0),
            du: Complex64::new(0.0, 0.0),
            duu: Complex64::new(0.0, 0.0),
        };
        for &(u0, wu) in &self.u_nodes(0.0) {
            for &(x0, wx) in &self.x_nodes {
                let k = wu * wx * self.kernel(x_c, 0.0, x0, u0);
                // ∂_u of the exponent at u = 0
                let d = Complex64::new(-decay * u0, (x_c - x0) / s);
                jet.value += k;
                jet.du += k * d;
                jet.duu += k * (d * d - 2.0 * decay);
            }
        }
        let pre = self.prefactor();
        jet.value *= pre;
        jet.du *= pre;
        jet.duu *= pre;
        jet
    }

    /// Trace, second moments and the largest imaginary residue of the
    /// moment integrals, integrating the diagonal over `[-half, half]`.
    pub fn moments(&self, half: f64, outer_nodes: usize) -> Result<PropagatedMoments> {
        let outer = Rule::new(outer_nodes)?.on(-half, half);
        let jets: Vec<(f64, f64, DiagonalJet)> = outer
            .par_iter()
            .map(|&(x, w)| (x, w, self.jet(x)))
            .collect();
        let mut trace = Complex64::new(0.0, 0.0);
        let mut xx = Complex64::new(0.0, 0.0);
        let mut xp = Complex64::new(0.0, 0.0);
        let mut pp = Complex64::new(0.0, 0.0);
        for (x, w, jet) in jets {
            trace += w * jet.value;
            xx += w * x * x * jet.value;
            xp += w * x * jet.du;
            pp += w * jet.duu;
        }
        // ⟨{x,p}⟩ = −2i ∫ X ∂_uρ, ⟨p²⟩ = −∫ ∂²_uρ
        let sxp = Complex64::new(0.0, -2.0) * xp;
        let spp = -2.0 * pp;
        let sxx = 2.0 * xx;
        let imaginary_residue = trace
            .im
            .abs()
            .max(sxx.im.abs())
            .max(sxp.im.abs())
            .max(spp.im.abs());
        Ok(PropagatedMoments {
            trace: trace.re,
            covariance: CovarianceMatrix::new(sxx.re, sxp.re, spp.re),
            imaginary_residue,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatedMoments {
    pub trace: f64,
    pub covariance: CovarianceMatrix,
    pub imaginary_residue: f64,
}

/// `ρ(x_i, x_j)` on a square grid of sample positions (units of `σ₀`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDensity {
    pub xs: Vec<f64>,
    pub values: Vec<Vec<Complex64>>,
    /// Nodes per axis of the accepted (refined) evaluation.
    pub nodes: usize,
}

impl SampledDensity {
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest `|ρ(x, x′) − ρ*(x′, x)|` over the grid.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.xs.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.values[i][j] - self.values[j][i].conj()).norm());
            }
        }
        worst
    }
}

fn sample(prop: &Propagator, xs: &[f64]) -> Vec<Vec<Complex64>> {
    xs.par_iter()
        .map(|&x| xs.iter().map(|&xp| prop.density(x, xp)).collect())
        .collect()
}

/// Evaluate the evolved density matrix by direct quadrature of the
/// propagator, at `spec.nodes` and `2·spec.nodes` nodes per axis.
///
/// Fails with [`Unresolved`](crate::Error::Unresolved) when the two evaluations differ by more
/// than `spec.tolerance` relative to the largest sample.
pub fn propagate_numeric(
    probe: &ProbeParams,
    env: &EnvParams,
    t: f64,
    xs: &[f64],
    spec: QuadratureSpec,
) -> Result<SampledDensity> {
    let coarse = sample(&Propagator::new(probe, env, t, spec.nodes)?, xs);
    let fine_spec = spec.refined();
    let fine = sample(&Propagator::new(probe, env, t, fine_spec.nodes)?, xs);
    let sampled = SampledDensity {
        xs: xs.to_vec(),
        values: fine,
        nodes: fine_spec.nodes,
    };
    let scale = sampled.max_abs();
    let change = coarse
        .iter()
        .flatten()
        .zip(sampled.values.iter().flatten())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
    check_refinement(0.0, change, scale, spec.tolerance)?;
    Ok(sampled)
}

/// Moments of the propagated state with a doubling check on both the inner
/// and the outer quadrature. The diagonal is integrated over ten standard
/// deviations of the analytic position spread.
pub fn propagate_moments(
    probe: &ProbeParams,
    env: &EnvParams,
    t: f64,
    spec: QuadratureSpec,
) -> Result<PropagatedMoments> {
    let spread = covariance(probe, env, t)?.sxx;
    let half = 10.0 * (spread / 2.0).sqrt();
    let coarse = Propagator::new(probe, env, t, spec.nodes)?.moments(half, spec.nodes)?;
    let fine_spec = spec.refined();
    let fine = Propagator::new(probe, env, t, fine_spec.nodes)?.moments(half, fine_spec.nodes)?;
    let (c, f) = (coarse.covariance, fine.covariance);
    let scale = f.sxx.abs().max(f.spp.abs());
    for (a, b) in [(c.sxx, f.sxx), (c.sxp, f.sxp), (c.spp, f.spp)] {
        check_refinement(a, b, scale, spec.tolerance)?;
    }
    check_refinement(coarse.trace, fine.trace, 1.0, spec.tolerance)?;
    Ok(fine)
}

/// Relative error of moments recovered from the density-matrix parameters
/// against the analytic covariance, as the largest entrywise difference over
/// the largest entry.
pub fn moment_mismatch(a: &CovarianceMatrix, b: &CovarianceMatrix) -> f64 {
    let diff = (a.sxx - b.sxx)
        .abs()
        .max((a.sxp - b.sxp).abs())
        .max((a.spp - b.spp).abs());
    diff / b.sxx.abs().max(b.spp.abs()).max(b.sxp.abs())
}
