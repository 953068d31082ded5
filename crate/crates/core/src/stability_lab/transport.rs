use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use serde::Serialize;

use super::AffineFunction;
use crate::error::{Error, Result};
use crate::fault_model::Rect;

#[derive(Debug, Clone, Serialize)]
pub struct TransportResult {
    pub n: usize,
    pub sigma_min: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `u ↦ ∂_τ(f u) + α u` on the `n × n` interior nodes of a uniform grid over
/// `rect`, central differences, zero boundary values eliminated. Unknowns
/// are ordered with `y1` fastest.
pub fn transport_operator(f: &AffineFunction, tau: [f64; 2], alpha: f64, rect: &Rect, n: usize) -> Result<CscMatrix<f64>> {
    if tau == [0.0, 0.0] || !tau.iter().all(|c| c.is_finite()) {
        return Err(Error::config("transport.tau", "must be a nonzero finite vector"));
    }
    if n < 2 {
        return Err(Error::config("transport.n", "need at least two interior nodes per direction"));
    }
    rect.validate()?;
    let h1 = rect.width() / (n + 1) as f64;
    let h2 = rect.height() / (n + 1) as f64;
    let node = |i: usize, j: usize| {
        (
            rect.y1[0] + (i + 1) as f64 * h1,
            rect.y2[0] + (j + 1) as f64 * h2,
        )
    };
    let idx = |i: usize, j: usize| j * n + i;
    let fval = |i: usize, j: usize| {
        let (y1, y2) = node(i, j);
        f.eval(y1, y2)
    };
    let mut coo = CooMatrix::new(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let row = idx(i, j);
            if alpha != 0.0 {
                coo.push(row, row, alpha);
            }
            let c1 = tau[0] / (2.0 * h1);
            if c1 != 0.0 {
                if i + 1 < n {
                    coo.push(row, idx(i + 1, j), c1 * fval(i + 1, j));
                }
                if i > 0 {
                    coo.push(row, idx(i - 1, j), -c1 * fval(i - 1, j));
                }
            }
            let c2 = tau[1] / (2.0 * h2);
            if c2 != 0.0 {
                if j + 1 < n {
                    coo.push(row, idx(i, j + 1), c2 * fval(i, j + 1));
                }
                if j > 0 {
                    coo.push(row, idx(i, j - 1), -c2 * fval(i, j - 1));
                }
            }
        }
    }
    Ok(CscMatrix::from(&coo))
}

/// Smallest singular value of [`transport_operator`] as a map between
/// grid-weighted `L²` spaces, by inverse iteration on `MᵀM`.
pub fn transport_triviality(
    f: &AffineFunction,
    tau: [f64; 2],
    alpha: f64,
    rect: &Rect,
    n: usize,
) -> Result<TransportResult> {
    if f.is_zero() {
        return Err(Error::config("transport.f", "must not vanish identically"));
    }
    let m = transport_operator(f, tau, alpha, rect, n)?;
    let mtm = &m.transpose() * &m;
    // both sides carry the same cell weight, so it cancels from the ratio
    let chol = match CscCholesky::factor(&mtm) {
        Ok(c) => c,
        Err(_) => {
            return Ok(TransportResult {
                n,
                sigma_min: 0.0,
                iterations: 0,
                converged: true,
            })
        }
    };
    let size = n * n;
    let mut x: DMatrix<f64> = DMatrix::from_fn(size, 1, |r, _| 1.0 + ((r * 7919) % 104729) as f64 / 104729.0);
    x /= x.norm();
    let mut mu = 0.0;
    let max_iter = 2000;
    for it in 1..=max_iter {
        let y = chol.solve(x.view_range(.., ..));
        let next = x.dot(&y);
        let ny = y.norm();
        if !(ny > 0.0) || !ny.is_finite() {
            return Ok(TransportResult {
                n,
                sigma_min: 0.0,
                iterations: it,
                converged: true,
            });
        }
        x = y / ny;
        if it > 1 && (next - mu).abs() <= 1e-13 * next.abs() {
            return Ok(TransportResult {
                n,
                sigma_min: (1.0 / next).sqrt(),
                iterations: it,
                converged: true,
            });
        }
        mu = next;
    }
    Ok(TransportResult {
        n,
        sigma_min: (1.0 / mu).sqrt(),
        iterations: max_iter,
        converged: false,
    })
}
