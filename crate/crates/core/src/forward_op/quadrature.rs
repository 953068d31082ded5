use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fault_model::Rect;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(n).expect("quadrature order must be positive");
    let mut pairs = GaussLegendre::new(n).as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Composite Gauss rule on consecutive breakpoints, `order` nodes per panel.
pub fn composite_gauss(breaks: &[f64], order: usize) -> Vec<(f64, f64)> {
    let base = gauss_legendre(order);
    let mut out = Vec::with_capacity(base.len() * breaks.len().saturating_sub(1));
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        out.extend(base.iter().map(|&(t, wt)| (mid + half * t, half * wt)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub q1: usize,
    pub q2: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { q1: 24, q2: 24 }
    }
}

/// Tensor-product rule over a rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    rect: Rect,
    spec: QuadSpec,
    nodes: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn tensor(rect: Rect, spec: QuadSpec) -> Result<Self> {
        rect.validate()?;
        if spec.q1 < 4 || spec.q2 < 4 {
            return Err(Error::config("quad", format!("orders must be at least 4, got {}×{}", spec.q1, spec.q2)));
        }
        let r1 = composite_gauss(&rect.y1, spec.q1);
        let r2 = composite_gauss(&rect.y2, spec.q2);
        let mut nodes = Vec::with_capacity(r1.len() * r2.len());
        let mut weights = Vec::with_capacity(r1.len() * r2.len());
        for &(y2, w2) in &r2 {
            for &(y1, w1) in &r1 {
                nodes.push([y1, y2]);
                weights.push(w1 * w2);
            }
        }
        Ok(Self {
            rect,
            spec,
            nodes,
            weights,
        })
    }

    pub fn rect(&self) -> &Rect {
        &self.rect
    }

    pub fn spec(&self) -> QuadSpec {
        self.spec
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn refined(&self) -> Self {
        Self::tensor(
            self.rect,
            QuadSpec {
                q1: 2 * self.spec.q1,
                q2: 2 * self.spec.q2,
            },
        )
        .expect("refining a valid rule")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_area() {
        let rect = Rect::new([-1.0, 2.0], [0.0, 0.5]).unwrap();
        let q = QuadratureRule::tensor(rect, QuadSpec { q1: 7, q2: 12 }).unwrap();
        assert!(q.weights().iter().all(|&w| w > 0.0));
        assert!((q.weights().iter().sum::<f64>() - rect.area()).abs() < 1e-12);
    }

    #[test]
    fn exact_for_polynomials() {
        let rect = Rect::default();
        let q = QuadratureRule::tensor(rect, QuadSpec { q1: 5, q2: 5 }).unwrap();
        let s: f64 = q
            .nodes()
            .iter()
            .zip(q.weights())
            .map(|(p, w)| w * p[0].powi(8) * p[1].powi(2))
            .sum();
        assert!((s - (2.0 / 9.0) * (2.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn low_orders_rejected() {
        assert!(QuadratureRule::tensor(Rect::default(), QuadSpec { q1: 3, q2: 8 }).is_err());
    }

    #[test]
    fn composite_rule_integrates_across_panels() {
        let r = composite_gauss(&[0.0, 0.1, 0.5, 2.0], 10);
        let s: f64 = r.iter().map(|(x, w)| w * x.exp()).sum();
        assert!((s - (2f64.exp() - 1.0)).abs() < 1e-13);
    }
}
