use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use super::projector::{RangeProjector, Truncation};
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::fault_model::{lift, FaultGeometry, ObservationGrid, SlipBasis, SlipField};
use crate::kernels::{arr, HalfspaceSource, LameParams};

/// Discretized fault-to-surface operator `A_m`.
///
/// Rows are point-major (`3 p + k`), columns follow [`SlipBasis`] ordering:
/// the `g1` block, then the `g2` block.
#[derive(Debug, Clone)]
pub struct ForwardOperator {
    pub matrix: DMatrix<f64>,
    pub geometry: FaultGeometry,
    pub grid: ObservationGrid,
    pub quad: QuadratureRule,
    pub lame: LameParams,
    pub basis: SlipBasis,
}

/// `∂φ/∂a`, `∂φ/∂b`, `∂φ/∂d` at one geometry for a fixed slip.
#[derive(Debug, Clone)]
pub struct GeometryJacobian {
    pub columns: [Vec<f64>; 3],
    pub slip: SlipField,
}

fn check_inputs(geom: &FaultGeometry, quad: &QuadratureRule, basis_rect: &crate::fault_model::Rect) -> Result<FaultGeometry> {
    // re-validate: fields are public and may have been edited after construction
    let g = FaultGeometry::new(geom.a, geom.b, geom.d, geom.rect, geom.depth_min)?;
    if quad.rect() != &g.rect || basis_rect != &g.rect {
        return Err(Error::Domain("quadrature, basis and geometry must share the rectangle R".into()));
    }
    let s = quad.spec();
    if s.q1 < 4 || s.q2 < 4 {
        return Err(Error::config("quad", "orders must be at least 4"));
    }
    Ok(g)
}

#[inline]
fn mul(h: &Matrix3<f64>, v: &[f64; 3]) -> Vector3<f64> {
    h * Vector3::new(v[0], v[1], v[2])
}

/// Sum over quadrature nodes of `f(node, weight, source)` for one receiver,
/// in node order.
fn for_each_node<F: FnMut(usize, [f64; 3], f64, &HalfspaceSource)>(
    lame: &LameParams,
    geom: &FaultGeometry,
    quad: &QuadratureRule,
    x: [f64; 3],
    with_dy3: bool,
    mut f: F,
) {
    for (q, (node, &w)) in quad.nodes().iter().zip(quad.weights()).enumerate() {
        let y = [node[0], node[1], geom.height(node[0], node[1])];
        let src = HalfspaceSource::eval_unchecked(lame, &x, &y, with_dy3);
        f(q, y, w, &src);
    }
}

pub fn assemble(
    lame: &LameParams,
    geom: &FaultGeometry,
    grid: &ObservationGrid,
    quad: &QuadratureRule,
    basis: &SlipBasis,
) -> Result<ForwardOperator> {
    let geometry = check_inputs(geom, quad, &basis.rect)?;
    let n = basis.per_component();
    let cols = 2 * n;
    let modes: Vec<Vec<f64>> = quad.nodes().iter().map(|p| basis.mode_values(p[0], p[1])).collect();
    let ns = geometry.scaled_normal();
    let ta = [1.0, 0.0, geometry.a];
    let tb = [0.0, 1.0, geometry.b];

    let blocks: Vec<Vec<f64>> = grid
        .points()
        .par_iter()
        .map(|x| {
            let mut out = vec![0.0; 3 * cols];
            for_each_node(lame, &geometry, quad, arr(x), false, |q, _, w, src| {
                let h = src.kernel(&ns);
                let ha = mul(&h, &ta) * w;
                let hb = mul(&h, &tb) * w;
                for (idx, &m) in modes[q].iter().enumerate() {
                    for k in 0..3 {
                        out[k * cols + idx] += m * ha[k];
                        out[k * cols + n + idx] += m * hb[k];
                    }
                }
            });
            out
        })
        .collect();

    let rows = grid.data_len();
    let matrix = DMatrix::from_row_iterator(rows, cols, blocks.into_iter().flatten());
    Ok(ForwardOperator {
        matrix,
        geometry,
        grid: grid.clone(),
        quad: quad.clone(),
        lame: *lame,
        basis: *basis,
    })
}

fn lifted_slip(geom: &FaultGeometry, quad: &QuadratureRule, h: &SlipField) -> Vec<[f64; 3]> {
    quad.nodes()
        .iter()
        .map(|p| lift(geom, h.eval_unchecked(p[0], p[1])))
        .collect()
}

/// `φ(m) = A_m h`, integrating the slip directly at the quadrature nodes.
pub fn phi(
    lame: &LameParams,
    geom: &FaultGeometry,
    grid: &ObservationGrid,
    quad: &QuadratureRule,
    h: &SlipField,
) -> Result<Vec<f64>> {
    let geometry = check_inputs(geom, quad, &h.basis.rect)?;
    let hm = lifted_slip(&geometry, quad, h);
    let ns = geometry.scaled_normal();
    let blocks: Vec<[f64; 3]> = grid
        .points()
        .par_iter()
        .map(|x| {
            let mut acc = Vector3::zeros();
            for_each_node(lame, &geometry, quad, arr(x), false, |q, _, w, src| {
                acc += mul(&src.kernel(&ns), &hm[q]) * w;
            });
            [acc.x, acc.y, acc.z]
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

pub fn jacobian_phi(
    lame: &LameParams,
    geom: &FaultGeometry,
    grid: &ObservationGrid,
    quad: &QuadratureRule,
    h: &SlipField,
) -> Result<GeometryJacobian> {
    let geometry = check_inputs(geom, quad, &h.basis.rect)?;
    let hm = lifted_slip(&geometry, quad, h);
    let ns = geometry.scaled_normal();
    let e1 = [1.0, 0.0, 0.0];
    let e2 = [0.0, 1.0, 0.0];
    let blocks: Vec<[[f64; 3]; 3]> = grid
        .points()
        .par_iter()
        .map(|x| {
            let (mut ja, mut jb, mut jd) = (Vector3::zeros(), Vector3::zeros(), Vector3::zeros());
            for_each_node(lame, &geometry, quad, arr(x), true, |q, y, w, src| {
                let hv = &hm[q];
                let k = src.kernel(&ns);
                let dk = src.kernel_dy3(&ns).expect("dy3 requested");
                let d3 = mul(&dk, hv);
                ja += (d3 * y[0] - mul(&src.kernel(&e1), hv) + k.column(2) * hv[0]) * w;
                jb += (d3 * y[1] - mul(&src.kernel(&e2), hv) + k.column(2) * hv[1]) * w;
                jd += d3 * w;
            });
            [ja.into(), jb.into(), jd.into()]
        })
        .collect();
    let mut columns = [Vec::new(), Vec::new(), Vec::new()];
    for b in &blocks {
        for (c, col) in columns.iter_mut().enumerate() {
            col.extend_from_slice(&b[c]);
        }
    }
    Ok(GeometryJacobian {
        columns,
        slip: h.clone(),
    })
}

/// Central-difference check of one Jacobian column at two step sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdColumnCheck {
    pub column: usize,
    pub steps: [f64; 2],
    /// Weighted relative error of the difference quotient at each step.
    pub errors: [f64; 2],
    pub observed_order: f64,
}

/// Compares each column of [`jacobian_phi`] with `(φ(m + t e_c) − φ(m − t e_c)) / 2t`
/// at `steps[0]` and the smaller `steps[1]`. Probe geometries may come up to
/// half of `depth_min` closer to the surface.
pub fn jacobian_fd_check(
    lame: &LameParams,
    geom: &FaultGeometry,
    grid: &ObservationGrid,
    quad: &QuadratureRule,
    h: &SlipField,
    steps: [f64; 2],
) -> Result<[FdColumnCheck; 3]> {
    if !(steps[0] > steps[1] && steps[1] > 0.0) {
        return Err(Error::config("jacobian.steps", "need two positive steps, largest first"));
    }
    let jac = jacobian_phi(lame, geom, grid, quad, h)?;
    let probe = FaultGeometry {
        depth_min: 0.5 * geom.depth_min,
        ..*geom
    };
    let m0 = geom.params();
    let rel = |fd: &[f64], exact: &[f64]| {
        let d: Vec<f64> = fd.iter().zip(exact).map(|(a, b)| a - b).collect();
        grid.norm(&d) / grid.norm(exact)
    };
    let mut out = Vec::with_capacity(3);
    for (c, exact) in jac.columns.iter().enumerate() {
        let mut errors = [0.0; 2];
        for (e, &t) in errors.iter_mut().zip(&steps) {
            let (mut p, mut n) = (m0, m0);
            p[c] += t;
            n[c] -= t;
            let fp = phi(lame, &probe.with_params(p)?, grid, quad, h)?;
            let fm = phi(lame, &probe.with_params(n)?, grid, quad, h)?;
            let fd: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * t)).collect();
            *e = rel(&fd, exact);
        }
        out.push(FdColumnCheck {
            column: c,
            steps,
            errors,
            observed_order: (errors[0] / errors[1]).ln() / (steps[0] / steps[1]).ln(),
        });
    }
    Ok([out[0], out[1], out[2]])
}

impl GeometryJacobian {
    pub fn matrix(&self) -> DMatrix<f64> {
        let rows = self.columns[0].len();
        DMatrix::from_fn(rows, 3, |r, c| self.columns[c][r])
    }

    /// `γ1 ∂φ/∂a + γ2 ∂φ/∂b + γ3 ∂φ/∂d`.
    pub fn directional(&self, q: [f64; 3]) -> Vec<f64> {
        (0..self.columns[0].len())
            .map(|r| (0..3).map(|c| q[c] * self.columns[c][r]).sum())
            .collect()
    }

    /// Singular values (descending) of the Jacobian in the weighted inner product,
    /// with the right singular vector of the smallest one.
    pub fn weighted_svd(&self, grid: &ObservationGrid) -> ([f64; 3], [f64; 3]) {
        let sw = grid.sqrt_weights();
        let m = DMatrix::from_fn(sw.len(), 3, |r, c| sw[r] * self.columns[c][r]);
        let svd = m.svd(false, true);
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let s = idx.map(|i| svd.singular_values[i]);
        let vt = svd.v_t.expect("requested");
        let last = idx[2];
        (s, [vt[(last, 0)], vt[(last, 1)], vt[(last, 2)]])
    }
}

pub fn jacobian_singular_values(j: &GeometryJacobian, grid: &ObservationGrid) -> [f64; 3] {
    j.weighted_svd(grid).0
}

pub fn jacobian_min_singular_value(j: &GeometryJacobian, grid: &ObservationGrid) -> f64 {
    j.weighted_svd(grid).0[2]
}

impl ForwardOperator {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                got: coeffs.len(),
            });
        }
        Ok((&self.matrix * DVector::from_column_slice(coeffs)).as_slice().to_vec())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.matrix.column(j).iter().copied().collect()
    }

    fn whitened(&self) -> DMatrix<f64> {
        let sw = self.grid.sqrt_weights();
        let mut m = self.matrix.clone();
        for (r, s) in sw.iter().enumerate() {
            m.row_mut(r).scale_mut(*s);
        }
        m
    }

    /// Singular values of `A_m` as a map into weighted `L²(V)`, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.whitened().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn range_projector(&self, truncation: Truncation) -> Result<RangeProjector> {
        RangeProjector::from_whitened(self.whitened(), self.grid.sqrt_weights(), truncation)
    }
}

pub fn range_projector(op: &ForwardOperator, truncation: Truncation) -> Result<RangeProjector> {
    op.range_projector(truncation)
}

/// `‖(I − P_m) data‖` in the weighted norm, with the default truncation.
pub fn min_residual(op: &ForwardOperator, data: &[f64]) -> Result<f64> {
    op.range_projector(Truncation::default())?.residual(data)
}
