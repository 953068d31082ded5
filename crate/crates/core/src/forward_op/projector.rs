use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How many left singular vectors span the retained range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Exactly `k` vectors.
    Rank(usize),
    /// All vectors with `σ_i ≥ τ σ_1`.
    Relative(f64),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Relative(1e-6)
    }
}

/// Orthogonal projection onto the leading left singular subspace of an
/// operator, in the weighted `L²(V)` inner product.
///
/// Stored in whitened coordinates `W^{1/2} d`, where it is the Euclidean
/// projector `U Uᵀ`.
#[derive(Debug, Clone)]
pub struct RangeProjector {
    u: DMatrix<f64>,
    sqrt_w: DVector<f64>,
    singular_values: Vec<f64>,
}

pub(crate) fn numerical_rank(s: &[f64], rows: usize, cols: usize) -> usize {
    let Some(&top) = s.first() else { return 0 };
    let tol = top * f64::EPSILON * rows.max(cols) as f64;
    s.iter().take_while(|&&v| v > tol).count()
}

impl RangeProjector {
    pub(crate) fn from_whitened(m: DMatrix<f64>, sqrt_w: Vec<f64>, truncation: Truncation) -> Result<Self> {
        let (rows, cols) = m.shape();
        let svd = m.svd(true, false);
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let available = numerical_rank(&s, rows, cols);
        let k = match truncation {
            Truncation::Rank(k) => {
                if k > available {
                    return Err(Error::RankTooLarge {
                        requested: k,
                        available,
                    });
                }
                k
            }
            Truncation::Relative(tau) => {
                if !(tau > 0.0 && tau < 1.0) {
                    return Err(Error::config("truncation.relative", "must lie in (0, 1)"));
                }
                s.iter().take_while(|&&v| v >= tau * s[0] && v > 0.0).count().min(available)
            }
        };
        let full = svd.u.expect("requested");
        let u = DMatrix::from_fn(rows, k, |r, c| full[(r, order[c])]);
        Ok(Self {
            u,
            sqrt_w: DVector::from_vec(sqrt_w),
            singular_values: s,
        })
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// All singular values of the operator, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// `σ_k / σ_{k+1}`; infinite when nothing is discarded.
    pub fn gap(&self) -> f64 {
        let k = self.rank();
        if k == 0 {
            return f64::NAN;
        }
        match self.singular_values.get(k) {
            Some(&next) if next > 0.0 => self.singular_values[k - 1] / next,
            _ => f64::INFINITY,
        }
    }

    fn whiten(&self, data: &[f64]) -> Result<DVector<f64>> {
        if data.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: data.len(),
            });
        }
        Ok(DVector::from_iterator(data.len(), data.iter().zip(self.sqrt_w.iter()).map(|(d, s)| d * s)))
    }

    pub fn apply(&self, data: &[f64]) -> Result<Vec<f64>> {
        let d = self.whiten(data)?;
        let p = &self.u * (self.u.transpose() * d);
        Ok(p.iter().zip(self.sqrt_w.iter()).map(|(v, s)| v / s).collect())
    }

    /// `‖(I − P) data‖` in the weighted norm.
    pub fn residual(&self, data: &[f64]) -> Result<f64> {
        let d = self.whiten(data)?;
        let r = &d - &self.u * (self.u.transpose() * &d);
        Ok(r.norm())
    }

    /// Dense matrix of `P` acting on unweighted data vectors.
    pub fn dense(&self) -> DMatrix<f64> {
        let mut p = &self.u * self.u.transpose();
        for r in 0..p.nrows() {
            for c in 0..p.ncols() {
                p[(r, c)] *= self.sqrt_w[c] / self.sqrt_w[r];
            }
        }
        p
    }

    /// Weighted operator norm `‖P − Q‖`.
    pub fn distance(&self, other: &RangeProjector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let leak = |a: &DMatrix<f64>, b: &DMatrix<f64>| -> f64 {
            if a.ncols() == 0 {
                return 0.0;
            }
            let m = a - b * (b.transpose() * a);
            m.singular_values().iter().copied().fold(0.0, f64::max)
        };
        Ok(leak(&self.u, &other.u).max(leak(&other.u, &self.u)))
    }
}
