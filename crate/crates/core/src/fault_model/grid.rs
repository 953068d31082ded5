use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernels::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridRule {
    #[default]
    Simpson,
    Trapezoid,
}

/// Surface window `V = [x1] × [x2]` sampled on a uniform tensor grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub n1: usize,
    pub n2: usize,
    #[serde(default)]
    pub rule: GridRule,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x1: [-3.0, 3.0],
            x2: [-3.0, 3.0],
            n1: 17,
            n2: 17,
            rule: GridRule::Simpson,
        }
    }
}

fn weights_1d(n: usize, len: f64, rule: GridRule) -> Vec<f64> {
    let h = len / (n - 1) as f64;
    match rule {
        GridRule::Trapezoid => (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
            .collect(),
        GridRule::Simpson => (0..n)
            .map(|i| {
                let c = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect(),
    }
}

/// Observation points on `x3 = 0` with quadrature weights for the discrete `L²(V)` norm.
///
/// Data vectors are laid out point-major: entry `3 p + k` is component `k` at point `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationGrid {
    spec: GridSpec,
    points: Vec<Point3>,
    weights: Vec<f64>,
}

impl ObservationGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let ok = |s: [f64; 2]| s[0].is_finite() && s[1].is_finite() && s[0] < s[1];
        if !ok(spec.x1) || !ok(spec.x2) {
            return Err(Error::config("grid", "window bounds must be finite and increasing"));
        }
        if spec.n1 < 2 || spec.n2 < 2 {
            return Err(Error::config("grid", "need at least two points per direction"));
        }
        if spec.rule == GridRule::Simpson && (spec.n1.is_multiple_of(2) || spec.n2.is_multiple_of(2)) {
            return Err(Error::config("grid", "Simpson weights need an odd number of points per direction"));
        }
        let w1 = weights_1d(spec.n1, spec.x1[1] - spec.x1[0], spec.rule);
        let w2 = weights_1d(spec.n2, spec.x2[1] - spec.x2[0], spec.rule);
        let coord = |s: [f64; 2], n: usize, i: usize| s[0] + (s[1] - s[0]) * i as f64 / (n - 1) as f64;
        let mut points = Vec::with_capacity(spec.n1 * spec.n2);
        let mut weights = Vec::with_capacity(spec.n1 * spec.n2);
        for (j, wj) in w2.iter().enumerate() {
            for (i, wi) in w1.iter().enumerate() {
                points.push(Point3::new(coord(spec.x1, spec.n1, i), coord(spec.x2, spec.n2, j), 0.0));
                weights.push(wi * wj);
            }
        }
        Ok(Self { spec, points, weights })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Length of a data vector (three components per point).
    pub fn data_len(&self) -> usize {
        3 * self.points.len()
    }

    pub fn area(&self) -> f64 {
        (self.spec.x1[1] - self.spec.x1[0]) * (self.spec.x2[1] - self.spec.x2[0])
    }

    /// Square roots of the weights, repeated per component.
    pub fn sqrt_weights(&self) -> Vec<f64> {
        self.weights.iter().flat_map(|w| [w.sqrt(); 3]).collect()
    }

    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.data_len());
        debug_assert_eq!(v.len(), self.data_len());
        self.weights
            .iter()
            .enumerate()
            .map(|(p, w)| w * (0..3).map(|k| u[3 * p + k] * v[3 * p + k]).sum::<f64>())
            .sum()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.dot(u, u).sqrt()
    }

    /// Weighted norm of a scalar field sampled at the points.
    pub fn scalar_norm(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (p, w) in self.points.iter().zip(&self.weights) {
            for v in [p.x, p.y, p.z, *w] {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_norm_squared_is_area() {
        for rule in [GridRule::Simpson, GridRule::Trapezoid] {
            let g = ObservationGrid::new(GridSpec {
                x1: [-2.0, 3.0],
                x2: [0.5, 1.7],
                n1: 11,
                n2: 7,
                rule,
            })
            .unwrap();
            let ones = vec![1.0; g.len()];
            assert!((g.scalar_norm(&ones).powi(2) - g.area()).abs() < 1e-12);
            assert!(g.points().iter().all(|p| p.z == 0.0));
            assert!(g.weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn simpson_rejects_even_counts() {
        let spec = GridSpec {
            n1: 10,
            ..Default::default()
        };
        assert!(ObservationGrid::new(spec).is_err());
    }

    #[test]
    fn norm_converges_under_refinement() {
        let field = |p: &Point3| 1.0 / (1.0 + (p.x - 0.3).powi(2) + (p.y + 0.2).powi(2)).powf(1.5);
        let norm_at = |n: usize| {
            let g = ObservationGrid::new(GridSpec {
                n1: n,
                n2: n,
                ..Default::default()
            })
            .unwrap();
            let f: Vec<f64> = g.points().iter().map(field).collect();
            g.scalar_norm(&f)
        };
        let (a, b, c) = (norm_at(17), norm_at(33), norm_at(65));
        assert!(((c - b) / c).abs() < 1e-4);
        assert!(((c - b) / (b - a)).abs() < 0.2);
    }
}
