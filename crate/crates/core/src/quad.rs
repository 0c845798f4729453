//! Composite Gauss–Legendre rules and deterministic summation.

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::{Error, Result};

/// Panel order used by [`Rule::with_points`].
pub const PANEL_ORDER: usize = 16;

/// A one-dimensional quadrature rule: nodes and weights on an interval.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// `panels` equal subintervals of `[a, b]`, each carrying an `order`-point
    /// Gauss–Legendre rule.
    pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Result<Rule> {
        if !(a.is_finite() && b.is_finite() && a < b) || panels == 0 {
            return Err(Error::InvalidParameter(format!(
                "bad quadrature interval [{a}, {b}] with {panels} panels"
            )));
        }
        let gl = GaussLegendre::new(order)
            .map_err(|_| Error::InvalidParameter(format!("Gauss-Legendre order {order} < 2")))?;
        let mut ref_nodes: Vec<(f64, f64)> =
            gl.nodes().copied().zip(gl.weights().copied()).collect();
        ref_nodes.sort_by(|x, y| x.0.total_cmp(&y.0));
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for i in 0..panels {
            let lo = a + h * i as f64;
            for &(x, w) in &ref_nodes {
                nodes.push(lo + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        Ok(Rule { nodes, weights })
    }

    /// A composite rule on `[-r, r]` with at least `n_points` nodes.
    pub fn symmetric(r: f64, n_points: usize) -> Result<Rule> {
        Self::with_points(-r, r, n_points)
    }

    pub fn with_points(a: f64, b: f64, n_points: usize) -> Result<Rule> {
        let panels = n_points.div_ceil(PANEL_ORDER).max(1);
        Self::composite(a, b, panels, PANEL_ORDER)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        let terms: Vec<Complex64> =
            self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).collect();
        pairwise_sum(&terms)
    }
}

/// Tensor-product integration of `f` over `[rule]^d`.
pub fn tensor_integrate(rule: &Rule, d: usize, f: impl Fn(&[f64]) -> Complex64) -> Complex64 {
    let n = rule.len();
    let total = n.pow(d as u32);
    let mut x = vec![0.0; d];
    let mut terms = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut w = 1.0;
        for axis in (0..d).rev() {
            let i = rem % n;
            rem /= n;
            x[axis] = rule.nodes[i];
            w *= rule.weights[i];
        }
        terms.push(f(&x) * w);
    }
    pairwise_sum(&terms)
}

/// Sum with a fixed binary-tree topology, so the result only depends on the
/// order of `xs`.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |acc, z| acc + z);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
