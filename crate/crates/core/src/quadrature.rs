//! Gauss-Legendre panel rules, an adaptive bisection integrator, and the
//! periodic trapezoid rule.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Nodes and weights of a composite Gauss-Legendre rule over consecutive panels.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PanelRule {
    /// `edges` must be strictly increasing; each panel gets `points` nodes.
    pub fn new(edges: &[f64], points: usize) -> Result<Self> {
        if edges.len() < 2
            || edges
                .windows(2)
                .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::validation(
                "panel edges",
                "need >= 2 strictly increasing edges",
            ));
        }
        let rule = GaussLegendre::new(points)
            .map_err(|_| Error::validation("points per panel", "must be >= 2"))?;
        let mut nodes = Vec::with_capacity(points * (edges.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in edges.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (x, wt) in pairs {
                nodes.push(mid + half * x);
                weights.push(half * wt);
            }
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

const ADAPTIVE_POINTS: usize = 16;
const ADAPTIVE_MAX_DEPTH: u32 = 30;

fn base_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(ADAPTIVE_POINTS).expect("fixed degree is valid"))
}

/// Adaptive Gauss-Legendre on `[a, b]` by recursive bisection until the
/// whole-vs-halves estimates agree to `rel_tol` of the running magnitude.
pub fn adaptive_gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let rule = base_rule();
    let whole = rule.integrate(a, b, &f);
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    refine(&f, rule, a, b, whole, rel_tol * scale, ADAPTIVE_MAX_DEPTH)
}

fn refine(
    f: &impl Fn(f64) -> f64,
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    abs_tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = rule.integrate(a, m, f);
    let right = rule.integrate(m, b, f);
    let halves = left + right;
    if depth == 0 || (halves - whole).abs() <= abs_tol {
        return halves;
    }
    refine(f, rule, a, m, left, 0.5 * abs_tol, depth - 1)
        + refine(f, rule, m, b, right, 0.5 * abs_tol, depth - 1)
}

/// Mean of a `period`-periodic function by the `n`-point trapezoid rule,
/// which converges geometrically for analytic integrands.
pub fn periodic_mean(f: impl Fn(f64) -> f64, period: f64, n: usize) -> f64 {
    let h = period / n as f64;
    (0..n).map(|j| f(j as f64 * h)).sum::<f64>() / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn panels_integrate_exponential() {
        let rule = PanelRule::new(&[0.0, 5.0, 20.0, 60.0], 40).unwrap();
        assert_eq!(rule.len(), 120);
        assert!(rule.nodes.windows(2).all(|w| w[1] > w[0]));
        let v = rule.integrate(|x| x * (-x).exp());
        assert_relative_eq!(v, 1.0 - 61.0 * (-60.0_f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn bad_edges_rejected() {
        assert!(PanelRule::new(&[0.0], 10).is_err());
        assert!(PanelRule::new(&[1.0, 1.0], 10).is_err());
        assert!(PanelRule::new(&[0.0, 1.0], 1).is_err());
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let v = adaptive_gauss_legendre(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12);
        let exact = 2.0 / 1e-2 * (1.0 / 1e-2_f64).atan();
        assert_relative_eq!(v, exact, max_relative = 1e-10);
        assert_eq!(adaptive_gauss_legendre(|x| x, 2.0, 2.0, 1e-12), 0.0);
    }

    #[test]
    fn trapezoid_is_spectral_for_periodic() {
        // Mean of 1/(2 + cos x) is 1/sqrt(3).
        let v = periodic_mean(|x| 1.0 / (2.0 + x.cos()), std::f64::consts::TAU, 40);
        assert_relative_eq!(v, 1.0 / 3.0_f64.sqrt(), max_relative = 1e-14);
    }
}
