//! Gauss–Legendre rules on finite intervals with a doubling convergence check.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{invalid, Error, Result};

/// Quadrature resolution: nodes per axis, and the tolerance the result must
/// meet when the node count is doubled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub nodes: usize,
    pub tolerance: f64,
}

impl QuadratureSpec {
    pub fn new(nodes: usize, tolerance: f64) -> Result<Self> {
        if nodes < 2 {
            return Err(invalid(
                "nodes",
                format!("need at least 2 nodes, got {nodes}"),
            ));
        }
        if !(tolerance > 0.0) {
            return Err(invalid("tolerance", "must be positive"));
        }
        Ok(Self { nodes, tolerance })
    }

    pub fn refined(&self) -> Self {
        Self {
            nodes: 2 * self.nodes,
            tolerance: self.tolerance,
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 200,
            tolerance: 1e-8,
        }
    }
}

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pairs: Vec<(f64, f64)>,
}

impl Rule {
    pub fn new(nodes: usize) -> Result<Self> {
        let degree =
            NonZeroUsize::new(nodes).ok_or_else(|| invalid("nodes", "must be non-zero"))?;
        let rule = GaussLegendre::new(degree);
        Ok(Self {
            pairs: rule.as_node_weight_pairs().to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.pairs
            .iter()
            .map(|&(x, w)| (mid + half * x, half * w))
            .collect()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).into_iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Compare a coarse and a refined evaluation; error when they differ by more
/// than `tolerance` relative to `scale`.
pub(crate) fn check_refinement(coarse: f64, fine: f64, scale: f64, tolerance: f64) -> Result<()> {
    let change = (coarse - fine).abs() / scale.max(f64::MIN_POSITIVE);
    if change > tolerance || !change.is_finite() {
        return Err(Error::Unresolved { change, tolerance });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_gaussian() {
        let rule = Rule::new(200).unwrap();
        let got = rule.integrate(-8.0, 8.0, |x| (-x * x / 2.0).exp());
        assert!((got - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn exact_for_low_degree_polynomials() {
        let rule = Rule::new(5).unwrap();
        // ∫₀² x⁹ dx = 2¹⁰/10
        let got = rule.integrate(0.0, 2.0, |x| x.powi(9));
        assert!((got - 102.4).abs() < 1e-11);
        assert_eq!(rule.len(), 5);
    }

    #[test]
    fn refinement_check() {
        assert!(check_refinement(1.0, 1.0 + 1e-12, 1.0, 1e-10).is_ok());
        assert!(matches!(
            check_refinement(1.0, 1.1, 1.0, 1e-10),
            Err(Error::Unresolved { .. })
        ));
        assert!(QuadratureSpec::new(1, 1e-8).is_err());
        assert_eq!(QuadratureSpec::default().refined().nodes, 400);
    }
}
