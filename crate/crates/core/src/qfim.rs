//! Quantum Fisher information matrix over `(γ, Λ)` and the estimation
//! bounds derived from it.
//!
//! For a Gaussian state with covariance `σ` and displacement `d`,
//!
//! ```text
//! F_ij = ½ vec[∂ᵢσ]ᵀ M⁻¹ vec[∂ⱼσ] + 2 (∂ᵢd)ᵀ σ⁻¹ (∂ⱼd),   M = σ⊗σ − Ω⊗Ω,
//! ```
//!
//! and the SLD weak-commutativity condition reads
//! `vec[∂ᵢσ]ᵀ M⁻¹(σ⊗Ω − Ω⊗σ)M⁻¹ vec[∂ⱼσ] = 0` when `d = 0`.

use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, mat4_mul, mat4_vec, max_abs4, Mat2, Mat4, Vec4};
use crate::phase_space::{
    covariance, d_covariance, CovDerivative, CovarianceMatrix, EnvParams, Param, ProbeParams,
    SymplecticForm, VALIDITY_TOL,
};

pub use crate::linalg::{kron2, vec2};

/// Number of estimated parameters.
pub const KAPPA: f64 = 2.0;

/// `|det σ − 1|` below which `M` is treated as singular.
pub const PURE_STATE_TOL: f64 = 1e-9;

/// Relative inflation of `σ` used to step off the pure-state manifold.
pub const PURE_STATE_INFLATION: f64 = 1e-7;

/// `|det F| ≤ SINGULAR_QFIM_TOL · F_γγ F_ΛΛ` counts as singular.
pub const SINGULAR_QFIM_TOL: f64 = 1e-12;

/// Symmetric 2×2 Fisher information over `(γ, Λ)`.
///
/// `f_gg` is dimensionless, `f_gl` carries m²s and `f_ll` m⁴s².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfimMatrix {
    pub f_gg: f64,
    pub f_gl: f64,
    pub f_ll: f64,
}

impl QfimMatrix {
    pub fn new(f_gg: f64, f_gl: f64, f_ll: f64) -> Self {
        Self { f_gg, f_gl, f_ll }
    }

    pub fn det(&self) -> f64 {
        qfim_determinant(self)
    }

    pub fn to_mat2(&self) -> Mat2 {
        [[self.f_gg, self.f_gl], [self.f_gl, self.f_ll]]
    }

    pub fn get(&self, i: Param, j: Param) -> f64 {
        match (i, j) {
            (Param::Gamma, Param::Gamma) => self.f_gg,
            (Param::Lambda, Param::Lambda) => self.f_ll,
            _ => self.f_gl,
        }
    }

    /// `F_γΛ / √(F_γγ F_ΛΛ)`, the scale-free parameter correlation.
    pub fn correlation(&self) -> f64 {
        self.f_gl / (self.f_gg * self.f_ll).sqrt()
    }

    /// Positive semidefinite up to `tol` relative to the diagonal product.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.f_gg >= 0.0 && self.f_ll >= 0.0 && self.det() >= -tol * self.f_gg * self.f_ll
    }

    /// Same matrix with `Λ` measured in units of `scale`, e.g. `F_ΛΛ·Λ²`
    /// for the relative-error form.
    pub fn rescaled(&self, scale: f64) -> Self {
        Self::new(self.f_gg, self.f_gl * scale, self.f_ll * scale * scale)
    }
}

/// Estimation bounds derived from a [`QfimMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub tilde_gg: f64,
    pub tilde_ll: f64,
    /// `1/F_γγ + 1/F_ΛΛ`.
    pub delta_i: f64,
    /// `κ⁻¹ Tr F⁻¹`.
    pub delta_s: f64,
    pub ratio: f64,
    pub det_f: f64,
}

/// A general-formula QFIM element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfimElement {
    pub value: f64,
    /// Set when `σ` was inflated off the pure-state manifold.
    pub approximate: bool,
}

/// General-formula QFIM with its provenance flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfimEvaluation {
    pub matrix: QfimMatrix,
    pub approximate: bool,
    pub det_sigma: f64,
}

/// `σ⊗σ − Ω⊗Ω`.
pub fn m_matrix(cov: &CovarianceMatrix) -> Mat4 {
    let s = cov.to_mat2();
    let omega = SymplecticForm::MATRIX;
    linalg::sub4(&kron2(&s, &s), &kron2(&omega, &omega))
}

/// Symplectic normal form `σ = ν S Sᵀ` with `ν = √det σ` and
/// `S = (σ/ν)^{1/2}`, which has unit determinant and is therefore
/// symplectic. Holds `T = S⁻¹`.
struct NormalForm {
    det: f64,
    t: Mat2,
}

impl NormalForm {
    fn new(cov: &CovarianceMatrix) -> Result<Self> {
        let det = cov.det();
        if !(cov.sxx > 0.0 && cov.spp > 0.0) || det < 1.0 - VALIDITY_TOL {
            return Err(Error::Unphysical { det });
        }
        if !(det > 1.0) {
            return Err(Error::SingularM { det_sigma: det });
        }
        let nu = det.sqrt();
        let (a, b, d) = (cov.sxx / nu, cov.sxp / nu, cov.spp / nu);
        // principal square root of a unit-determinant SPD matrix
        let k = 1.0 / (a + d + 2.0).sqrt();
        let (s11, s12, s22) = ((a + 1.0) * k, b * k, (d + 1.0) * k);
        Ok(Self {
            det,
            t: [[s22, -s12], [-s12, s11]],
        })
    }

    // (T⊗T) X (T⊗T)
    fn sandwich(&self, x: &Mat4) -> Mat4 {
        let tt = kron2(&self.t, &self.t);
        mat4_mul(&mat4_mul(&tt, x), &tt)
    }

    // (ν²I − Ω⊗Ω)⁻¹ = (ν²I + Ω⊗Ω)/(ν⁴ − 1), using (Ω⊗Ω)² = I
    fn middle_inverse(&self) -> Mat4 {
        let omega = SymplecticForm::MATRIX;
        let n = linalg::add4(
            &linalg::scale4(&linalg::identity4(), self.det),
            &kron2(&omega, &omega),
        );
        // ν⁴ − 1 without cancellation
        linalg::scale4(&n, 1.0 / ((self.det - 1.0) * (self.det + 1.0)))
    }
}

fn check_finite(m: Mat4, det: f64) -> Result<Mat4> {
    if m.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::SingularM { det_sigma: det });
    }
    Ok(m)
}

/// `M⁻¹` through the symplectic normal form of `σ`.
///
/// Since `Ω = SΩSᵀ`, `M = (S⊗S)(ν²I − Ω⊗Ω)(S⊗S)ᵀ` and the middle factor
/// inverts in closed form. Generic elimination loses about `cond(M)·ε`,
/// which reaches 1e-3 for the broad states of long interaction times.
pub fn m_inverse(cov: &CovarianceMatrix) -> Result<Mat4> {
    let nf = NormalForm::new(cov)?;
    let inv = check_finite(nf.sandwich(&nf.middle_inverse()), nf.det)?;
    let cond = linalg::norm1_4(&m_matrix(cov)) * linalg::norm1_4(&inv);
    if cond > linalg::ILL_CONDITIONED {
        log::debug!(
            "M is ill-conditioned (cond1 = {cond:e}, det σ = {})",
            nf.det
        );
    }
    Ok(inv)
}

// σ actually used by the moment formula, inflated near the pure limit
fn working_covariance(cov: &CovarianceMatrix) -> Result<(CovarianceMatrix, bool)> {
    let det = cov.det();
    if !(cov.sxx > 0.0 && cov.spp > 0.0) || det < 1.0 - VALIDITY_TOL {
        return Err(Error::Unphysical { det });
    }
    if (det - 1.0).abs() < PURE_STATE_TOL {
        Ok((cov.scaled(1.0 + PURE_STATE_INFLATION), true))
    } else {
        Ok((*cov, false))
    }
}

fn dvec(d: &CovDerivative) -> Vec4 {
    vec2(&d.to_mat2())
}

/// `½ vec(∂ᵢσ)ᵀ M⁻¹ vec(∂ⱼσ)` using
/// `M⁻¹ = (det²σ⁻¹⊗σ⁻¹ + Ω⊗Ω)/(det² − 1)`, which follows from
/// `σ⁻¹Ωσ⁻¹ = Ω/det σ`.
///
/// Contracting the explicit 4×4 inverse instead cancels terms of order
/// `|∂σ|²‖M⁻¹‖` and loses about 1e-5 relative for elongated states.
fn moment_term(cov: &CovarianceMatrix, di: &CovDerivative, dj: &CovDerivative) -> Result<f64> {
    let det = cov.det();
    if !(det > 1.0) {
        return Err(Error::SingularM { det_sigma: det });
    }
    let inv = cov.inverse()?;
    let pi = linalg::mat2_mul(&inv, &di.to_mat2());
    let pj = linalg::mat2_mul(&inv, &dj.to_mat2());
    let trace =
        pi[0][0] * pj[0][0] + pi[0][1] * pj[1][0] + pi[1][0] * pj[0][1] + pi[1][1] * pj[1][1];
    // vec(A)ᵀ(Ω⊗Ω)vec(B) = Tr(Aᵀ Ω B Ωᵀ) for symmetric A, B
    let omega = di.dxx * dj.dpp + di.dpp * dj.dxx - 2.0 * di.dxp * dj.dxp;
    let value = 0.5 * (det * det * trace + omega) / ((det - 1.0) * (det + 1.0));
    if !value.is_finite() {
        return Err(Error::SingularM { det_sigma: det });
    }
    Ok(value)
}

/// One element of the QFIM from the Gaussian moment formula.
pub fn qfim_element_general(
    cov: &CovarianceMatrix,
    dcov_i: &CovDerivative,
    dcov_j: &CovDerivative,
    dd_i: [f64; 2],
    dd_j: [f64; 2],
) -> Result<QfimElement> {
    let (work, approximate) = working_covariance(cov)?;
    let second = moment_term(&work, dcov_i, dcov_j)?;
    let first = if dd_i == [0.0; 2] || dd_j == [0.0; 2] {
        0.0
    } else {
        let inv = work.inverse()?;
        let v = [
            inv[0][0] * dd_j[0] + inv[0][1] * dd_j[1],
            inv[1][0] * dd_j[0] + inv[1][1] * dd_j[1],
        ];
        2.0 * (dd_i[0] * v[0] + dd_i[1] * v[1])
    };
    Ok(QfimElement {
        value: second + first,
        approximate,
    })
}

/// Full QFIM from a covariance and its two parameter derivatives.
pub fn qfim_from_derivatives(
    cov: &CovarianceMatrix,
    d_gamma: &CovDerivative,
    d_lambda: &CovDerivative,
) -> Result<QfimEvaluation> {
    let zero = [0.0; 2];
    let gg = qfim_element_general(cov, d_gamma, d_gamma, zero, zero)?;
    let gl = qfim_element_general(cov, d_gamma, d_lambda, zero, zero)?;
    let ll = qfim_element_general(cov, d_lambda, d_lambda, zero, zero)?;
    Ok(QfimEvaluation {
        matrix: QfimMatrix::new(gg.value, gl.value, ll.value),
        approximate: gg.approximate,
        det_sigma: cov.det(),
    })
}

/// QFIM of the evolved probe at time `t` via the moment formula.
pub fn qfim(probe: &ProbeParams, env: &EnvParams, t: f64) -> Result<QfimEvaluation> {
    let cov = covariance(probe, env, t)?;
    let dg = d_covariance(probe, env, t, Param::Gamma)?;
    let dl = d_covariance(probe, env, t, Param::Lambda)?;
    qfim_from_derivatives(&cov, &dg, &dl)
}

/// Denominator `α` of the reference closed forms.
pub fn closed_form_alpha(probe: &ProbeParams, env: &EnvParams, t: f64) -> Result<f64> {
    Ok(ClosedFormInputs::new(probe, env, t)?.alpha())
}

struct ClosedFormInputs {
    m: f64,
    s0: f64,
    l0: f64,
    g: f64,
    b: f64,
    t: f64,
    lam: f64,
    h: f64,
}

impl ClosedFormInputs {
    fn new(probe: &ProbeParams, env: &EnvParams, t: f64) -> Result<Self> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        if probe.is_fully_coherent() {
            return Err(invalid(
                "ell0",
                "closed forms require a finite coherence length",
            ));
        }
        let g = probe.gamma();
        Ok(Self {
            m: probe.mass(),
            s0: probe.sigma0(),
            l0: probe.ell0(),
            g,
            b: 1.0 + g * g,
            t,
            lam: env.lambda(),
            h: HBAR,
        })
    }

    fn alpha(&self) -> f64 {
        let Self {
            m,
            s0,
            l0,
            g,
            b,
            t,
            lam,
            h,
        } = *self;
        let (s2, l2) = (s0 * s0, l0 * l0);
        (2.0 * s2 * l2 * t.powi(4) * h * h * lam * lam
            + (6.0 * m * s2 * l2 * h * g * t * t
                + 2.0 * t.powi(3) * h * h * (2.0 * s2 + b * l2)
                + 6.0 * m * m * s2 * s2 * l2 * t)
                * lam
            + 3.0 * m * s2 * s2)
            * (1.0 + l2 / s2)
    }

    fn evaluate(&self) -> Result<QfimMatrix> {
        let Self {
            m,
            s0,
            l0,
            g,
            b,
            t,
            lam,
            h,
        } = *self;
        let alpha = self.alpha();
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(Error::DegenerateAlpha);
        }
        let (s2, l2) = (s0 * s0, l0 * l0);
        let (s4, l4) = (s2 * s2, l2 * l2);
        let f_gg = l2 / (2.0 * alpha)
            * ((12.0 * m * m * s4 * l2 * h * h * t.powi(4)
                + 16.0 * l2 * h.powi(4) * g * g * t.powi(6)
                + 48.0 * m * s2 * l2 * h.powi(3) * g * t.powi(5))
                * lam
                * lam
                + (6.0 * m * m * s2 * h * h * t.powi(3) * (2.0 * s2 + b * l2)
                    + 18.0 * m.powi(4) * s2 * s4 * l2 * t
                    + 18.0 * m.powi(3) * s4 * l2 * h * g * t * t)
                    * lam
                + 9.0 * m.powi(4) * s2 * s4);
        let k = 3.0 * m * s2 + 2.0 * g * t * h;
        let f_gl =
            l2 * s2 * h * t * (2.0 * l2 * h * h * t.powi(4) * k * lam * lam - 3.0 * m * m * s2 * k)
                / alpha;
        let f_ll = (2.0
            * t
            * t
            * (2.0 * s4 * l4 * t * t * lam * lam
                + 2.0
                    * s2
                    * l2
                    * (2.0 * s2 * t.powi(5) * h.powi(4)
                        + l2 * b * t.powi(5) * h.powi(4)
                        + 3.0 * m * s2 * l2 * g * t.powi(4) * h.powi(3)
                        + 3.0 * m * m * s4 * l2 * t.powi(3) * h * h)
                    * lam)
            + (6.0 * m * s2 * l2 * g * t.powi(3) * h.powi(3) * (2.0 * s2 + l2 * b)
                + h.powi(4) * t.powi(4) * b * (l4 * b + 4.0 * s2 * l2)
                + 9.0 * m.powi(4) * s4 * s4 * l4
                + 18.0 * m.powi(3) * s2 * s4 * l4 * g * t * h))
            / alpha;
        Ok(QfimMatrix::new(f_gg, f_gl, f_ll))
    }
}

/// The reference closed-form QFIM elements, term by term.
///
/// These do not agree with [`qfim`]; see [`compare_closed_form`].
pub fn qfim_closed_form(probe: &ProbeParams, env: &EnvParams, t: f64) -> Result<QfimMatrix> {
    ClosedFormInputs::new(probe, env, t)?.evaluate()
}

/// Closed form against moment formula at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormComparison {
    pub general: QfimMatrix,
    pub closed: QfimMatrix,
    pub alpha: f64,
    pub rel_gg: f64,
    pub rel_gl: f64,
    pub rel_ll: f64,
}

impl ClosedFormComparison {
    pub fn max_rel(&self) -> f64 {
        self.rel_gg.max(self.rel_gl).max(self.rel_ll)
    }

    pub fn agrees(&self, tol: f64) -> bool {
        self.max_rel() <= tol
    }
}

fn rel(a: f64, reference: f64) -> f64 {
    if a == reference {
        0.0
    } else {
        (a - reference).abs() / reference.abs()
    }
}

pub fn compare_closed_form(
    probe: &ProbeParams,
    env: &EnvParams,
    t: f64,
) -> Result<ClosedFormComparison> {
    let general = qfim(probe, env, t)?.matrix;
    let inputs = ClosedFormInputs::new(probe, env, t)?;
    let closed = inputs.evaluate()?;
    Ok(ClosedFormComparison {
        general,
        closed,
        alpha: inputs.alpha(),
        rel_gg: rel(closed.f_gg, general.f_gg),
        rel_gl: rel(closed.f_gl, general.f_gl),
        rel_ll: rel(closed.f_ll, general.f_ll),
    })
}

/// Effective information on each parameter when the other is unknown:
/// `F̃_γγ = F_γγ − F_γΛ²/F_ΛΛ`, `F̃_ΛΛ = F_ΛΛ − F_γΛ²/F_γγ`.
pub fn tilde_bounds(f: &QfimMatrix) -> Result<(f64, f64)> {
    if !(f.f_gg > 0.0) {
        return Err(Error::NonPositiveDiagonal("f_gg"));
    }
    if !(f.f_ll > 0.0) {
        return Err(Error::NonPositiveDiagonal("f_ll"));
    }
    let c = f.f_gl * f.f_gl;
    Ok((f.f_gg - c / f.f_ll, f.f_ll - c / f.f_gg))
}

pub fn qfim_determinant(f: &QfimMatrix) -> f64 {
    f.f_gg * f.f_ll - f.f_gl * f.f_gl
}

fn check_invertible(f: &QfimMatrix) -> Result<f64> {
    let det = f.det();
    if !det.is_finite() || det.abs() <= SINGULAR_QFIM_TOL * (f.f_gg * f.f_ll).abs() {
        return Err(Error::SingularQfim { det });
    }
    Ok(det)
}

pub fn qfim_inverse(f: &QfimMatrix) -> Result<Mat2> {
    let det = check_invertible(f)?;
    Ok([[f.f_ll / det, -f.f_gl / det], [-f.f_gl / det, f.f_gg / det]])
}

/// Total variances of individual and simultaneous estimation and their
/// ratio `ℛ = Δ_I/Δ_S`, which never exceeds `κ = 2`.
pub fn performance_ratio(f: &QfimMatrix) -> Result<PrecisionReport> {
    let (tilde_gg, tilde_ll) = tilde_bounds(f)?;
    let det_f = check_invertible(f)?;
    if det_f < 0.0 {
        return Err(Error::SingularQfim { det: det_f });
    }
    let delta_i = 1.0 / f.f_gg + 1.0 / f.f_ll;
    let delta_s = (1.0 / tilde_gg + 1.0 / tilde_ll) / KAPPA;
    Ok(PrecisionReport {
        tilde_gg,
        tilde_ll,
        delta_i,
        delta_s,
        ratio: delta_i / delta_s,
        det_f,
    })
}

/// `σ⊗Ω − Ω⊗σ`.
pub fn commutator_matrix(cov: &CovarianceMatrix) -> Mat4 {
    let s = cov.to_mat2();
    let omega = SymplecticForm::MATRIX;
    linalg::sub4(&kron2(&s, &omega), &kron2(&omega, &s))
}

/// `M⁻¹(σ⊗Ω − Ω⊗σ)M⁻¹` by explicit products, carried out in the
/// symplectic normal frame where `σ⊗Ω − Ω⊗σ = (S⊗S) ν(I⊗Ω − Ω⊗I)(S⊗S)ᵀ`.
///
/// In the lab frame the product cancels over many orders of magnitude for
/// nearly pure, strongly correlated states.
pub fn compat_middle_direct(cov: &CovarianceMatrix) -> Result<Mat4> {
    let nf = NormalForm::new(cov)?;
    let omega = SymplecticForm::MATRIX;
    let id = [[1.0, 0.0], [0.0, 1.0]];
    let c0 = linalg::scale4(
        &linalg::sub4(&kron2(&id, &omega), &kron2(&omega, &id)),
        nf.det.sqrt(),
    );
    let n_inv = nf.middle_inverse();
    check_finite(
        nf.sandwich(&mat4_mul(&mat4_mul(&n_inv, &c0), &n_inv)),
        nf.det,
    )
}

/// `M⁻¹(σ⊗Ω − Ω⊗σ)M⁻¹` multiplied out in the lab frame.
pub fn compat_middle_lab(cov: &CovarianceMatrix) -> Result<Mat4> {
    let m_inv = m_inverse(cov)?;
    Ok(mat4_mul(&mat4_mul(&m_inv, &commutator_matrix(cov)), &m_inv))
}

/// `M⁻¹(σ⊗Ω − Ω⊗σ)M⁻¹` from its closed single-mode form.
pub fn compat_middle_closed(cov: &CovarianceMatrix) -> Result<Mat4> {
    let det = cov.det();
    if (1.0 - det).abs() < PURE_STATE_TOL {
        return Err(Error::SingularM { det_sigma: det });
    }
    let CovarianceMatrix { sxx, sxp, spp, .. } = *cov;
    let k = [
        [0.0, spp, -spp, 0.0],
        [-spp, 0.0, 2.0 * sxp, -sxx],
        [spp, -2.0 * sxp, 0.0, sxx],
        [0.0, sxx, -sxx, 0.0],
    ];
    Ok(linalg::scale4(&k, 1.0 / (1.0 - det).powi(2)))
}

/// `Tr(ρ[L_γ, L_Λ])` for the undisplaced probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityTrace {
    pub value: f64,
    /// `|value| / (‖vec ∂_γσ‖ ‖K‖_F ‖vec ∂_Λσ‖)` with `K` the middle matrix.
    pub normalized: f64,
    /// Largest entrywise gap between the two middle-matrix routes, relative
    /// to the largest entry.
    pub route_discrepancy: f64,
}

pub fn compatibility_trace(
    cov: &CovarianceMatrix,
    dcov_gamma: &CovDerivative,
    dcov_lambda: &CovDerivative,
) -> Result<CompatibilityTrace> {
    let det = cov.det();
    if det <= 1.0 + PURE_STATE_TOL {
        return Err(Error::SingularM { det_sigma: det });
    }
    let direct = compat_middle_direct(cov)?;
    let closed = compat_middle_closed(cov)?;
    let route_discrepancy = max_abs4(&linalg::sub4(&direct, &closed)) / max_abs4(&closed);
    let (vg, vl) = (dvec(dcov_gamma), dvec(dcov_lambda));
    let value = linalg::dot4(&vg, &mat4_vec(&direct, &vl));
    let scale = linalg::norm4(&vg) * linalg::frobenius4(&direct) * linalg::norm4(&vl);
    let normalized = if scale == 0.0 {
        0.0
    } else {
        value.abs() / scale
    };
    Ok(CompatibilityTrace {
        value,
        normalized,
        route_discrepancy,
    })
}

/// Compatibility trace of the evolved probe at time `t`.
pub fn compatibility(probe: &ProbeParams, env: &EnvParams, t: f64) -> Result<CompatibilityTrace> {
    let cov = covariance(probe, env, t)?;
    let dg = d_covariance(probe, env, t, Param::Gamma)?;
    let dl = d_covariance(probe, env, t, Param::Lambda)?;
    compatibility_trace(&cov, &dg, &dl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{det4, identity4};
    use crate::phase_space::{default_step, finite_diff_covariance};
    use proptest::prelude::*;

    fn env(lambda: f64) -> EnvParams {
        EnvParams::air(lambda).unwrap()
    }

    fn psd() -> impl Strategy<Value = QfimMatrix> {
        (0.01..10.0f64, 0.01..10.0f64, -0.999..0.999f64)
            .prop_map(|(a, b, rho)| QfimMatrix::new(a, rho * (a * b).sqrt(), b))
    }

    #[test]
    fn kron_of_symplectic_squares_to_identity() {
        let o = SymplecticForm::MATRIX;
        let k = kron2(&o, &o);
        assert_eq!(mat4_mul(&k, &k), identity4());
    }

    #[test]
    fn m_matrix_layout() {
        let cov = CovarianceMatrix::new(2.0, 0.7, 3.0);
        let CovarianceMatrix { sxx, sxp, spp, .. } = cov;
        let expected = [
            [sxx * sxx, sxx * sxp, sxx * sxp, sxp * sxp - 1.0],
            [sxx * sxp, sxx * spp, sxp * sxp + 1.0, spp * sxp],
            [sxx * sxp, sxp * sxp + 1.0, sxx * spp, spp * sxp],
            [sxp * sxp - 1.0, spp * sxp, spp * sxp, spp * spp],
        ];
        let m = m_matrix(&cov);
        for i in 0..4 {
            for j in 0..4 {
                assert!((m[i][j] - expected[i][j]).abs() < 1e-15);
            }
        }
        let id = m_matrix(&CovarianceMatrix::identity());
        assert_eq!(id[0][3], -1.0);
        assert_eq!(id[1][2], 1.0);
        assert_eq!(id[1][1], 1.0);
    }

    #[test]
    fn m_inverse_matches_elimination() {
        for cov in [
            CovarianceMatrix::new(2.0, 0.7, 3.0),
            CovarianceMatrix::new(1.1, -0.2, 1.3),
            CovarianceMatrix::new(5.0, 4.0, 4.0),
        ] {
            let fast = m_inverse(&cov).unwrap();
            let slow = linalg::invert4(&m_matrix(&cov)).unwrap().inverse;
            let scale = max_abs4(&slow);
            for i in 0..4 {
                for j in 0..4 {
                    assert!((fast[i][j] - slow[i][j]).abs() < 1e-12 * scale);
                }
            }
        }
        assert!(matches!(
            m_inverse(&CovarianceMatrix::new(1.0, 0.5, 1.25)),
            Err(Error::SingularM { .. })
        ));
    }

    #[test]
    fn m_determinant_factorises() {
        for cov in [
            CovarianceMatrix::new(2.0, 0.7, 3.0),
            CovarianceMatrix::new(65.0, 29.1, 17.4),
            CovarianceMatrix::new(1.1, -0.2, 1.3),
        ] {
            let d = cov.det();
            let expected = (d - 1.0).powi(2) * (d + 1.0).powi(2);
            assert!((det4(&m_matrix(&cov)) - expected).abs() < 1e-9 * expected);
        }
        // pure states make M singular
        let pure = CovarianceMatrix::new(1.0, 0.5, 1.25);
        assert!(det4(&m_matrix(&pure)).abs() < 1e-12);
    }

    #[test]
    fn zero_derivative_gives_zero_element() {
        let cov = CovarianceMatrix::new(2.0, 0.3, 1.5);
        let zero = CovDerivative::default();
        let d = CovDerivative::new(1.0, 0.2, -0.4);
        let e = qfim_element_general(&cov, &zero, &d, [0.0; 2], [0.0; 2]).unwrap();
        assert_eq!(e.value, 0.0);
        let e = qfim_element_general(&cov, &d, &d, [0.0; 2], [0.0; 2]).unwrap();
        assert!(e.value > 0.0 && !e.approximate);
    }

    #[test]
    fn displacement_term() {
        // σ = 2I: ½vᵀM⁻¹v vanishes for zero ∂σ; displacement term is 2 dᵀσ⁻¹d = |d|²
        let cov = CovarianceMatrix::new(2.0, 0.0, 2.0);
        let zero = CovDerivative::default();
        let e = qfim_element_general(&cov, &zero, &zero, [1.0, 0.0], [1.0, 2.0]).unwrap();
        assert!((e.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pure_state_takes_flagged_path() {
        let p = ProbeParams::fullerene(0.5)
            .with_ell0(f64::INFINITY)
            .unwrap();
        let eval = qfim(&p, &env(0.0), 1e-6).unwrap();
        assert!(eval.approximate);
        assert!(eval.matrix.f_gg.is_finite() && eval.matrix.f_gg > 0.0);
        // unphysical σ is rejected outright
        let bad = CovarianceMatrix::new(0.5, 0.0, 0.5);
        let d = CovDerivative::new(1.0, 0.0, 0.0);
        assert!(matches!(
            qfim_element_general(&bad, &d, &d, [0.0; 2], [0.0; 2]),
            Err(Error::Unphysical { .. })
        ));
    }

    #[test]
    fn argument_order_symmetry() {
        let p = ProbeParams::fullerene(0.3);
        let e = env(3e20);
        let t = 4e-5;
        let cov = covariance(&p, &e, t).unwrap();
        let dg = d_covariance(&p, &e, t, Param::Gamma).unwrap();
        let dl = d_covariance(&p, &e, t, Param::Lambda).unwrap();
        let a = qfim_element_general(&cov, &dg, &dl, [0.0; 2], [0.0; 2])
            .unwrap()
            .value;
        let b = qfim_element_general(&cov, &dl, &dg, [0.0; 2], [0.0; 2])
            .unwrap()
            .value;
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn tilde_bound_edge_cases() {
        let diag = QfimMatrix::new(3.0, 0.0, 5.0);
        assert_eq!(tilde_bounds(&diag).unwrap(), (3.0, 5.0));
        let rank_one = QfimMatrix::new(4.0, 6.0, 9.0);
        assert_eq!(rank_one.det(), 0.0);
        assert_eq!(tilde_bounds(&rank_one).unwrap().0, 0.0);
        assert!(tilde_bounds(&QfimMatrix::new(0.0, 0.0, 1.0)).is_err());
        assert!(tilde_bounds(&QfimMatrix::new(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn inverse_edge_cases() {
        let inv = qfim_inverse(&QfimMatrix::new(4.0, 0.0, 0.5)).unwrap();
        assert_eq!(inv, [[0.25, 0.0], [0.0, 2.0]]);
        assert!(matches!(
            qfim_inverse(&QfimMatrix::new(4.0, 6.0, 9.0)),
            Err(Error::SingularQfim { .. })
        ));
        // approaching the singular line blows up the diagonal of F⁻¹
        let mut last = 0.0;
        for eps in [1e-1, 1e-3, 1e-5] {
            let inv = qfim_inverse(&QfimMatrix::new(1.0, 1.0 - eps, 1.0)).unwrap();
            assert!(inv[0][0] > last);
            last = inv[0][0];
        }
        assert!(last > 1e4);
    }

    #[test]
    fn independent_parameters_reach_kappa() {
        let report = performance_ratio(&QfimMatrix::new(0.3, 0.0, 7e-43)).unwrap();
        assert_eq!(report.ratio, KAPPA);
        assert!(performance_ratio(&QfimMatrix::new(4.0, 6.0, 9.0)).is_err());
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(qfim_determinant(&QfimMatrix::new(2.0, 0.0, 3.0)), 6.0);
        assert_eq!(qfim_determinant(&QfimMatrix::new(1.0, 2.0, 4.0)), 0.0);
    }

    #[test]
    fn compatibility_middle_routes_agree() {
        let cov = covariance(&ProbeParams::fullerene(0.5), &env(3e20), 4e-6).unwrap();
        let direct = compat_middle_direct(&cov).unwrap();
        let closed = compat_middle_closed(&cov).unwrap();
        let scale = max_abs4(&closed);
        for i in 0..4 {
            for j in 0..4 {
                assert!((direct[i][j] - closed[i][j]).abs() < 1e-10 * scale);
            }
        }
        let lab = compat_middle_lab(&cov).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((lab[i][j] - closed[i][j]).abs() < 1e-8 * scale);
            }
        }
        let c = commutator_matrix(&cov);
        assert_eq!(c[1][2], -2.0 * cov.sxp);
        assert_eq!(c[0][1], cov.sxx);
        assert_eq!(c[3][1], cov.spp);
    }

    #[test]
    fn compatibility_is_antisymmetric() {
        let cov = CovarianceMatrix::new(3.0, 0.4, 2.0);
        // non-symmetric vec inputs expose the antisymmetry of the middle matrix
        let a = CovDerivative::new(1.0, 0.5, 2.0);
        let b = CovDerivative::new(-0.3, 1.5, 0.7);
        let ab = compatibility_trace(&cov, &a, &b).unwrap();
        let ba = compatibility_trace(&cov, &b, &a).unwrap();
        assert!((ab.value + ba.value).abs() < 1e-15);
        let m = compat_middle_direct(&cov).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((m[i][j] + m[j][i]).abs() < 1e-14);
            }
        }
        assert!(compatibility_trace(&CovarianceMatrix::identity(), &a, &b).is_err());
    }

    #[test]
    fn closed_form_with_lambda_zero() {
        // ℱ_γΛ at Λ = 0 keeps only −3m²σ₀²(3mσ₀² + 2γtħ) in the bracket
        let p = ProbeParams::fullerene(0.4);
        let t = 2e-6;
        let f = qfim_closed_form(&p, &env(0.0), t).unwrap();
        let (m, s0, l0, g) = (p.mass(), p.sigma0(), p.ell0(), p.gamma());
        let alpha = closed_form_alpha(&p, &env(0.0), t).unwrap();
        assert!((alpha - 3.0 * m * s0.powi(4) * (1.0 + (l0 / s0).powi(2))).abs() < 1e-12 * alpha);
        let expected = -3.0
            * m
            * m
            * s0.powi(4)
            * l0
            * l0
            * HBAR
            * t
            * (3.0 * m * s0 * s0 + 2.0 * g * t * HBAR)
            / alpha;
        assert!((f.f_gl - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn closed_form_parity_structure() {
        // only the terms odd in γ change under γ → −γ
        let t = 3e-6;
        let e = env(3e20);
        let plus = qfim_closed_form(&ProbeParams::fullerene(0.5), &e, t).unwrap();
        let minus = qfim_closed_form(&ProbeParams::fullerene(-0.5), &e, t).unwrap();
        assert_ne!(plus.f_gg, minus.f_gg);
        let zero_t = qfim_closed_form(&ProbeParams::fullerene(0.5), &e, 0.0).unwrap();
        let zero_t_minus = qfim_closed_form(&ProbeParams::fullerene(-0.5), &e, 0.0).unwrap();
        // at t = 0 every γ-odd term carries a power of t
        assert_eq!(zero_t.f_gg, zero_t_minus.f_gg);
        assert!(qfim_closed_form(
            &ProbeParams::fullerene(0.5)
                .with_ell0(f64::INFINITY)
                .unwrap(),
            &e,
            t
        )
        .is_err());
    }

    #[test]
    fn closed_form_disagrees_with_moment_formula() {
        let cmp = compare_closed_form(&ProbeParams::fullerene(0.5), &env(3e20), 4e-5).unwrap();
        assert!(!cmp.agrees(1e-6));
        assert!(cmp.general.f_gg > 0.0);
    }

    proptest! {
        #[test]
        fn m_inverse_is_inverse(gamma in -3.0..3.0f64, lambda in 1e15..1e23f64, t in 1e-8..1e-4f64) {
            // residual of M·M⁻¹ measured against the natural scale ‖M‖‖M⁻¹‖
            let cov = covariance(&ProbeParams::fullerene(gamma), &env(lambda), t).unwrap();
            let m = m_matrix(&cov);
            let inv = m_inverse(&cov).unwrap();
            let prod = mat4_mul(&m, &inv);
            let scale = max_abs4(&m) * max_abs4(&inv);
            for i in 0..4 {
                for j in 0..4 {
                    let target = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((prod[i][j] - target).abs() < 1e-13 * scale.max(1.0));
                }
            }
        }

        #[test]
        fn ratio_bounded_by_kappa(f in psd()) {
            let r = performance_ratio(&f).unwrap();
            prop_assert!(r.ratio > 0.0 && r.ratio <= KAPPA * (1.0 + 1e-12));
            prop_assert!(r.tilde_gg <= f.f_gg && r.tilde_ll <= f.f_ll);
            // ℛ = κ(1 − ρ²) with ρ the normalised off-diagonal
            let rho = f.correlation();
            prop_assert!((r.ratio - KAPPA * (1.0 - rho * rho)).abs() < 1e-9);
        }

        #[test]
        fn inverse_round_trip(f in psd()) {
            let inv = qfim_inverse(&f).unwrap();
            let prod = crate::linalg::mat2_mul(&f.to_mat2(), &inv);
            prop_assert!((prod[0][0] - 1.0).abs() < 1e-10 && (prod[1][1] - 1.0).abs() < 1e-10);
            prop_assert!(prod[0][1].abs() < 1e-10 && prod[1][0].abs() < 1e-10);
        }

        #[test]
        fn qfim_is_psd_and_compatible(gamma in -3.0..3.0f64, lambda in 1e15..1e23f64, t in 1e-8..1e-4f64) {
            let p = ProbeParams::fullerene(gamma);
            let e = env(lambda);
            let f = qfim(&p, &e, t).unwrap().matrix;
            prop_assert!(f.is_psd(1e-12));
            let c = compatibility(&p, &e, t).unwrap();
            prop_assert!(c.normalized < 1e-9);
            prop_assert!(c.route_discrepancy < 1e-10, "{}", c.route_discrepancy);
        }

        #[test]
        fn qfim_stable_under_finite_difference_derivatives(gamma in -3.0..3.0f64, lambda in 1e15..1e23f64, t in 1e-8..1e-4f64) {
            let p = ProbeParams::fullerene(gamma);
            let e = env(lambda);
            let cov = covariance(&p, &e, t).unwrap();
            let exact = qfim(&p, &e, t).unwrap().matrix;
            let dg = finite_diff_covariance(&p, &e, t, Param::Gamma, default_step(&p, &e, Param::Gamma)).unwrap();
            let dl = finite_diff_covariance(&p, &e, t, Param::Lambda, default_step(&p, &e, Param::Lambda)).unwrap();
            let fd = qfim_from_derivatives(&cov, &dg, &dl).unwrap().matrix;
            let scale_gl = (exact.f_gg * exact.f_ll).sqrt();
            prop_assert!((fd.f_gg - exact.f_gg).abs() <= 1e-10 * exact.f_gg);
            prop_assert!((fd.f_ll - exact.f_ll).abs() <= 1e-10 * exact.f_ll);
            prop_assert!((fd.f_gl - exact.f_gl).abs() <= 1e-10 * scale_gl);
        }
    }
}
