//! Wigner functions of the evolved probe.
//!
//! Phase-space axes are the quadratures whose covariance is the
//! dimensionless [`CovarianceMatrix`]: `x_w = √2 x/σ₀` and `p_w = √2 p σ₀/ħ`.
//! On these axes the Gaussian Wigner function is the normalised density
//! `exp(−½ rᵀσ⁻¹r)/(2π√det σ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::phase_space::CovarianceMatrix;
use crate::quadrature::{check_refinement, QuadratureSpec, Rule};

/// Minimum half-width of a grid, in standard deviations per axis.
pub const MIN_SPAN_SIGMAS: f64 = 5.0;

/// Gaussian Wigner function at `(x, p)`.
pub fn wigner_gaussian(cov: &CovarianceMatrix, point: (f64, f64)) -> Result<f64> {
    let inv = cov.inverse()?;
    let (x, p) = point;
    let q = inv[0][0] * x * x + 2.0 * inv[0][1] * x * p + inv[1][1] * p * p;
    Ok((-0.5 * q).exp() / (2.0 * PI * cov.det().sqrt()))
}

/// A Wigner value obtained by quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerSample {
    pub value: f64,
    /// `|Im W|` left over by the integration.
    pub imaginary_residue: f64,
    pub nodes: usize,
}

fn transform<F>(rho: &F, point: (f64, f64), half: f64, nodes: usize) -> Result<Complex64>
where
    F: Fn(f64, f64) -> Complex64,
{
    let (xi, eta) = (point.0 / 2f64.sqrt(), point.1 / 2f64.sqrt());
    let rule = Rule::new(nodes)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (y, w) in rule.on(-half, half) {
        acc += w * Complex64::from_polar(1.0, 2.0 * eta * y) * rho(xi - y, xi + y);
    }
    // 1/π from the transform, ½ from the √2 change of axes
    Ok(acc / (2.0 * PI))
}

/// Half-width in `y` (units of `σ₀`) that covers the coherence length of a
/// state with covariance `cov` by `sigmas` standard deviations.
pub fn coherence_half_width(cov: &CovarianceMatrix, sigmas: f64) -> f64 {
    // |ρ(ξ−y, ξ+y)| ∝ exp(−det σ y²/σ_xx)
    sigmas * (cov.sxx / (2.0 * cov.det())).sqrt()
}

/// Wigner transform of a density matrix sampled in units of `σ₀`,
/// integrated over `y ∈ [−half, half]` at `spec.nodes` and twice as many
/// nodes.
///
/// `scale` sets the size the refinement change is measured against,
/// typically the peak of the expected Wigner function.
pub fn wigner_from_rho<F>(
    rho: &F,
    point: (f64, f64),
    half: f64,
    scale: f64,
    spec: QuadratureSpec,
) -> Result<WignerSample>
where
    F: Fn(f64, f64) -> Complex64,
{
    if !(half > 0.0 && half.is_finite()) {
        return Err(invalid("half", "integration half-width must be positive"));
    }
    let coarse = transform(rho, point, half, spec.nodes)?;
    let fine_spec = spec.refined();
    let fine = transform(rho, point, half, fine_spec.nodes)?;
    check_refinement(0.0, (coarse - fine).norm(), scale, spec.tolerance)?;
    Ok(WignerSample {
        value: fine.re,
        imaginary_residue: fine.im.abs(),
        nodes: fine_spec.nodes,
    })
}

/// `∫ W(x, p) dp` by Gauss–Legendre quadrature over `±10√σ_pp`.
pub fn marginal_x(cov: &CovarianceMatrix, x: f64, nodes: usize) -> Result<f64> {
    let half = 10.0 * cov.spp.sqrt();
    let rule = Rule::new(nodes)?;
    let mut acc = 0.0;
    for (p, w) in rule.on(-half, half) {
        acc += w * wigner_gaussian(cov, (x, p))?;
    }
    Ok(acc)
}

/// `∬ W` by tensor Gauss–Legendre quadrature over `±10` standard deviations.
pub fn normalization_quadrature(cov: &CovarianceMatrix, nodes: usize) -> Result<f64> {
    let rule = Rule::new(nodes)?;
    let xs = rule.on(-10.0 * cov.sxx.sqrt(), 10.0 * cov.sxx.sqrt());
    let ps = rule.on(-10.0 * cov.spp.sqrt(), 10.0 * cov.spp.sqrt());
    let mut acc = 0.0;
    for &(x, wx) in &xs {
        for &(p, wp) in &ps {
            acc += wx * wp * wigner_gaussian(cov, (x, p))?;
        }
    }
    Ok(acc)
}

/// Sampling layout for [`wigner_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub nx: usize,
    pub np: usize,
}

impl GridSpec {
    /// `±span` standard deviations of `cov` on each axis, `n` points per axis.
    pub fn centred(cov: &CovarianceMatrix, span: f64, n: usize) -> Self {
        let (hx, hp) = (span * cov.sxx.sqrt(), span * cov.spp.sqrt());
        Self {
            x_range: (-hx, hx),
            p_range: (-hp, hp),
            nx: n,
            np: n,
        }
    }

    /// ±6σ at 201 points per axis.
    pub fn standard(cov: &CovarianceMatrix) -> Self {
        Self::centred(cov, 6.0, 201)
    }

    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.np < 2 {
            return Err(invalid("grid", "need at least two points per axis"));
        }
        for (lo, hi) in [self.x_range, self.p_range] {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(invalid("grid", format!("bad range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

/// Wigner function sampled on a regular grid. `values[i][j]` sits at
/// `(xs[i], ps[j])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpaceGrid {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub nx: usize,
    pub np: usize,
    pub values: Vec<Vec<f64>>,
    /// Riemann sum of the samples times the cell area.
    pub normalization: f64,
    /// Smallest half-width of the grid in standard deviations.
    pub span_sigmas: f64,
    /// Set when [`span_sigmas`](Self::span_sigmas) is below [`MIN_SPAN_SIGMAS`].
    pub under_spanned: bool,
}

impl PhaseSpaceGrid {
    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x_range.0, self.x_range.1, self.nx)
    }

    pub fn ps(&self) -> Vec<f64> {
        linspace(self.p_range.0, self.p_range.1, self.np)
    }

    pub fn cell_area(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / (self.nx - 1) as f64 * (self.p_range.1 - self.p_range.0)
            / (self.np - 1) as f64
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Second moments of the sampled distribution.
    pub fn sample_covariance(&self) -> CovarianceMatrix {
        let (xs, ps) = (self.xs(), self.ps());
        let (mut w, mut xx, mut xp, mut pp) = (0.0, 0.0, 0.0, 0.0);
        for (i, x) in xs.iter().enumerate() {
            for (j, p) in ps.iter().enumerate() {
                let v = self.values[i][j];
                w += v;
                xx += v * x * x;
                xp += v * x * p;
                pp += v * p * p;
            }
        }
        CovarianceMatrix::new(xx / w, xp / w, pp / w)
    }

    /// Tilt of the level-set ellipses, from the sampled moments.
    pub fn orientation(&self) -> f64 {
        self.sample_covariance().orientation()
    }
}

/// Sample [`wigner_gaussian`] on a grid, rows in parallel.
pub fn wigner_grid(cov: &CovarianceMatrix, spec: &GridSpec) -> Result<PhaseSpaceGrid> {
    spec.validate()?;
    if !cov.is_physical() {
        return Err(Error::Unphysical { det: cov.det() });
    }
    let xs = linspace(spec.x_range.0, spec.x_range.1, spec.nx);
    let ps = linspace(spec.p_range.0, spec.p_range.1, spec.np);
    let values = xs
        .par_iter()
        .map(|&x| ps.iter().map(|&p| wigner_gaussian(cov, (x, p))).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let span_x = spec.x_range.0.abs().min(spec.x_range.1.abs()) / cov.sxx.sqrt();
    let span_p = spec.p_range.0.abs().min(spec.p_range.1.abs()) / cov.spp.sqrt();
    let span_sigmas = span_x.min(span_p);
    let under_spanned = span_sigmas < MIN_SPAN_SIGMAS;
    if under_spanned {
        log::warn!("Wigner grid spans only {span_sigmas:.2} standard deviations");
    }
    let mut grid = PhaseSpaceGrid {
        x_range: spec.x_range,
        p_range: spec.p_range,
        nx: spec.nx,
        np: spec.np,
        values,
        normalization: 0.0,
        span_sigmas,
        under_spanned,
    };
    grid.normalization = grid.values.iter().flatten().sum::<f64>() * grid.cell_area();
    Ok(grid)
}

/// Tilt of the Wigner ellipses of `cov`, radians.
pub fn orientation(cov: &CovarianceMatrix) -> f64 {
    cov.orientation()
}

/// Difference of two ellipse orientations modulo `π`, in `(−π/2, π/2]`.
pub fn orientation_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    if d > PI / 2.0 {
        d - PI
    } else {
        d
    }
}

/// A 5×5 set of points in the bulk of the state: `x` at `0, ±1, ±2`
/// standard deviations and `p` at the same offsets in conditional standard
/// deviations about the regression line `p = (σ_xp/σ_xx) x`.
pub fn spot_points(cov: &CovarianceMatrix) -> Vec<(f64, f64)> {
    let sx = cov.sxx.sqrt();
    let sp_cond = (cov.det() / cov.sxx).sqrt();
    let mut out = Vec::with_capacity(25);
    for i in -2..=2 {
        for j in -2..=2 {
            let x = i as f64 * sx;
            out.push((x, cov.sxp / cov.sxx * x + j as f64 * sp_cond));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoherence::rho_parameters;
    use crate::phase_space::{covariance, EnvParams, ProbeParams};
    use proptest::prelude::*;

    fn air_state(gamma: f64, t: f64) -> CovarianceMatrix {
        covariance(
            &ProbeParams::fullerene(gamma),
            &EnvParams::air(3e22).unwrap(),
            t,
        )
        .unwrap()
    }

    #[test]
    fn peak_and_identity() {
        let cov = CovarianceMatrix::new(3.0, 1.0, 2.0);
        let peak = wigner_gaussian(&cov, (0.0, 0.0)).unwrap();
        assert!((peak - 1.0 / (2.0 * PI * 5f64.sqrt())).abs() < 1e-15);
        let id = CovarianceMatrix::identity();
        let w = wigner_gaussian(&id, (0.3, -1.2)).unwrap();
        assert!((w - (-(0.09 + 1.44) / 2.0f64).exp() / (2.0 * PI)).abs() < 1e-15);
        assert!(wigner_gaussian(&CovarianceMatrix::new(1.0, 1.0, 1.0), (0.0, 0.0)).is_err());
    }

    #[test]
    fn initial_tilt_follows_gamma() {
        let pos = orientation(&air_state(0.5, 0.0));
        let neg = orientation(&air_state(-0.5, 0.0));
        assert!(pos > 0.0 && neg < 0.0);
        let coherent = ProbeParams::fullerene(0.0)
            .with_ell0(f64::INFINITY)
            .unwrap();
        let circle = covariance(&coherent, &EnvParams::air(0.0).unwrap(), 0.0).unwrap();
        assert_eq!(orientation(&circle), 0.0);
        for gamma in [-1.0, 1.0] {
            let c = covariance(
                &coherent.with_gamma(gamma).unwrap(),
                &EnvParams::air(0.0).unwrap(),
                0.0,
            )
            .unwrap();
            assert_eq!(orientation(&c).signum(), gamma);
        }
    }

    #[test]
    fn orientation_gap_wraps() {
        assert!((orientation_gap(PI / 2.0 - 0.01, -PI / 2.0 + 0.01) + 0.02).abs() < 1e-12);
        assert_eq!(orientation_gap(0.3, 0.1), 0.3 - 0.1);
    }

    #[test]
    fn standard_grid_is_normalised() {
        for gamma in [-0.5, 0.0, 0.5] {
            for t in [0.0, 2.2e-6] {
                let cov = air_state(gamma, t);
                let grid = wigner_grid(&cov, &GridSpec::standard(&cov)).unwrap();
                assert!(
                    (grid.normalization - 1.0).abs() < 1e-3,
                    "{}",
                    grid.normalization
                );
                assert!(grid.min_value() >= 0.0);
                assert!(!grid.under_spanned);
                let est = grid.orientation();
                assert!(orientation_gap(est, cov.orientation()).abs() < 1e-2);
            }
        }
    }

    #[test]
    fn narrow_grid_is_flagged() {
        let cov = CovarianceMatrix::identity();
        let grid = wigner_grid(&cov, &GridSpec::centred(&cov, 3.0, 51)).unwrap();
        assert!(grid.under_spanned);
        assert!(grid.normalization < 0.999);
    }

    #[test]
    fn quadrature_normalisation_and_marginal() {
        let cov = air_state(-0.5, 2.2e-6);
        assert!((normalization_quadrature(&cov, 200).unwrap() - 1.0).abs() < 1e-6);
        let rho = rho_parameters(
            &ProbeParams::fullerene(-0.5),
            &EnvParams::air(3e22).unwrap(),
            2.2e-6,
        )
        .unwrap();
        for x in [-10.0, 0.0, 3.0, 12.0] {
            let m = marginal_x(&cov, x, 200).unwrap();
            // position density on the √2-scaled axis
            let diag = rho.density_scaled(x / 2f64.sqrt(), x / 2f64.sqrt()).re / 2f64.sqrt();
            assert!((m - diag).abs() < 1e-6 * diag.max(1e-300), "{m} vs {diag}");
        }
    }

    #[test]
    fn transform_matches_gaussian() {
        let (probe, env, t) = (
            ProbeParams::fullerene(0.0),
            EnvParams::air(3e22).unwrap(),
            2.2e-6,
        );
        let cov = covariance(&probe, &env, t).unwrap();
        let rho = rho_parameters(&probe, &env, t).unwrap();
        let sampler = |x: f64, xp: f64| rho.density_scaled(x, xp);
        let peak = wigner_gaussian(&cov, (0.0, 0.0)).unwrap();
        let half = coherence_half_width(&cov, 10.0);
        {
            for point in spot_points(&cov) {
                let got = wigner_from_rho(&sampler, point, half, peak, QuadratureSpec::default())
                    .unwrap();
                let want = wigner_gaussian(&cov, point).unwrap();
                assert!(
                    (got.value - want).abs() < 1e-4 * want,
                    "{point:?}: {} vs {want}",
                    got.value
                );
                assert!(got.imaginary_residue < 1e-8 * peak);
            }
        }
    }

    #[test]
    fn truncated_transform_is_unresolved() {
        let cov = CovarianceMatrix::identity();
        // pure vacuum in σ₀ units: ρ = exp(−(x² + x′²)/2)/√π
        let rho =
            |x: f64, xp: f64| Complex64::new((-(x * x + xp * xp) / 2.0).exp() / PI.sqrt(), 0.0);
        let spec = QuadratureSpec::new(4, 1e-10).unwrap();
        assert!(matches!(
            wigner_from_rho(&rho, (0.0, 3.0), 12.0, 1.0 / (2.0 * PI), spec),
            Err(Error::Unresolved { .. })
        ));
        let ok = wigner_from_rho(
            &rho,
            (0.5, 0.5),
            12.0,
            1.0 / (2.0 * PI),
            QuadratureSpec::default(),
        )
        .unwrap();
        assert!((ok.value - wigner_gaussian(&cov, (0.5, 0.5)).unwrap()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn gaussian_is_nonnegative_and_bounded(sxx in 1.0..50.0f64, c in -0.9..0.9f64, extra in 0.0..5.0f64, x in -20.0..20.0f64, p in -20.0..20.0f64) {
            // σ_pp chosen so det σ ≥ 1
            let sxp = c * sxx.sqrt();
            let spp = (1.0 + sxp * sxp) / sxx + extra;
            let cov = CovarianceMatrix::new(sxx, sxp, spp);
            let w = wigner_gaussian(&cov, (x, p)).unwrap();
            prop_assert!(w >= 0.0);
            prop_assert!(w <= wigner_gaussian(&cov, (0.0, 0.0)).unwrap());
        }
    }
}
