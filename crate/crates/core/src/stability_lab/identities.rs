use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AffineFunction;
use crate::fault_model::SlipField;
use crate::kernels::scalar::{Dual, Scalar};
use crate::kernels::LameParams;

/// `φ(y1, y2) = Σ_{i+j≤4} c[i][j] y1^i y2^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartic {
    pub c: [[f64; 5]; 5],
}

impl Quartic {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut c = [[0.0; 5]; 5];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if i + j <= 4 {
                    *v = rng.random_range(-1.0..1.0);
                }
            }
        }
        Self { c }
    }

    pub fn constant(v: f64) -> Self {
        let mut c = [[0.0; 5]; 5];
        c[0][0] = v;
        Self { c }
    }

    pub fn eval<T: Scalar>(&self, y1: T, y2: T) -> T {
        let mut acc = T::cst(0.0);
        let mut p1 = T::cst(1.0);
        for row in &self.c {
            let mut p2 = T::cst(1.0);
            for &v in row {
                acc = acc + p1 * p2.scale(v);
                p2 = p2 * y2;
            }
            p1 = p1 * y1;
        }
        acc
    }

    /// Partial derivative in `y_{k+1}`.
    pub fn partial(&self, k: usize) -> Self {
        let mut c = [[0.0; 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                match k {
                    0 if i > 0 => c[i - 1][j] = i as f64 * self.c[i][j],
                    1 if j > 0 => c[i][j - 1] = j as f64 * self.c[i][j],
                    _ => {}
                }
            }
        }
        Self { c }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceCheck {
    pub max_relative_residual: f64,
    pub evaluated: usize,
    /// Samples on or too near the zero set of `f`.
    pub skipped: usize,
}

fn pow_abs(d: Dual, p: f64) -> Dual {
    let a = d.re.abs();
    let s = if d.re > 0.0 {
        1.0
    } else if d.re < 0.0 {
        -1.0
    } else {
        0.0
    };
    Dual::new(a.powf(p), p * a.powf(p - 1.0) * s * d.eps)
}

/// Compares `div(|f|^p ∇φ)`, differentiated automatically, against
/// `p |f|^{p-1} sgn(f) [λ/(λ+2μ) f Δφ + ∇f·∇φ]` with `p = 1 + 2μ/λ`.
pub fn divergence_identity_check(
    params: &LameParams,
    f: &AffineFunction,
    phis: &[Quartic],
    points: &[[f64; 2]],
) -> DivergenceCheck {
    let (l, m) = (params.lambda(), params.mu());
    let p = 1.0 + 2.0 * m / l;
    let r = l / (l + 2.0 * m);
    let mut worst: f64 = 0.0;
    let (mut evaluated, mut skipped) = (0, 0);
    for phi in phis {
        let grad = [phi.partial(0), phi.partial(1)];
        let lap = [grad[0].partial(0), grad[1].partial(1)];
        for &[y1, y2] in points {
            let fv = f.eval(y1, y2);
            if fv.abs() < 1e-8 {
                skipped += 1;
                continue;
            }
            let mut lhs = 0.0;
            for (k, g) in grad.iter().enumerate() {
                let seed = |v: f64, on: bool| Dual::new(v, if on { 1.0 } else { 0.0 });
                let (d1, d2) = (seed(y1, k == 0), seed(y2, k == 1));
                let fd = d1.scale(f.g1) + d2.scale(f.g2) + Dual::new_const(f.g3);
                lhs += (pow_abs(fd, p) * g.eval(d1, d2)).eps;
            }
            let g = [grad[0].eval(y1, y2), grad[1].eval(y1, y2)];
            let laplacian = lap[0].eval(y1, y2) + lap[1].eval(y1, y2);
            let fg = f.g1 * g[0] + f.g2 * g[1];
            let a = fv.abs();
            let mult = p * a.powf(p - 1.0) * fv.signum();
            let rhs = mult * (r * fv * laplacian + fg);
            let scale = a.powf(p) * laplacian.abs() + p * a.powf(p - 1.0) * fg.abs();
            evaluated += 1;
            if scale > 0.0 {
                worst = worst.max((lhs - rhs).abs() / scale);
            } else {
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    DivergenceCheck {
        max_relative_residual: worst,
        evaluated,
        skipped,
    }
}

/// Relative mismatch in `1 + 4(μ/λ)(λ+μ)/(λ+2μ) + (3λ+4μ)/(λ+2μ) = 4 + 2μ/λ`.
pub fn coefficient_identity_residual(params: &LameParams) -> f64 {
    let (l, m) = (params.lambda(), params.mu());
    let lhs = 1.0 + 4.0 * (m / l) * (l + m) / (l + 2.0 * m) + (3.0 * l + 4.0 * m) / (l + 2.0 * m);
    let rhs = 4.0 + 2.0 * m / l;
    (lhs - rhs).abs() / rhs.abs()
}

#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyResidual {
    pub points: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    pub max_abs: f64,
    /// Largest `|h|` over the same points.
    pub slip_sup: f64,
}

fn grid_points(h: &SlipField, n: usize) -> Vec<[f64; 2]> {
    let r = h.basis.rect;
    let n = n.max(2);
    let mut pts = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let y1 = r.y1[0] + r.width() * i as f64 / (n - 1) as f64;
            let y2 = r.y2[0] + r.height() * j as f64 / (n - 1) as f64;
            pts.push([y1, y2]);
        }
    }
    pts
}

/// `λ/(λ+2μ) f div h + ∇f·h` on an `n × n` grid over `R`.
pub fn normal_jump_equation_residual(params: &LameParams, h: &SlipField, f: &AffineFunction, n: usize) -> DegeneracyResidual {
    let (l, m) = (params.lambda(), params.mu());
    let r = l / (l + 2.0 * m);
    let points = grid_points(h, n);
    let mut values = Vec::with_capacity(points.len());
    let mut slip_sup: f64 = 0.0;
    for &[y1, y2] in &points {
        let jet = h.jet(y1, y2);
        slip_sup = slip_sup.max(jet.g[0].hypot(jet.g[1]));
        values.push(r * f.eval(y1, y2) * jet.div() + f.g1 * jet.g[0] + f.g2 * jet.g[1]);
    }
    let max_abs = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    DegeneracyResidual {
        points,
        values,
        max_abs,
        slip_sup,
    }
}

/// Both lines of the tangential system for a tilted plane, rotated so the
/// tangential part of `e3` is `β e1`; `d3f` is the normal derivative of the
/// affine function. Returns `[line 1, line 2]` at `(y1, y2)`.
pub fn remaining_system_residual(
    h: &SlipField,
    f: &AffineFunction,
    beta: f64,
    sigma: f64,
    d3f: f64,
    y1: f64,
    y2: f64,
) -> [f64; 2] {
    let jet = h.jet(y1, y2);
    let fv = f.eval(y1, y2);
    let d1 = |c: usize| f.g1 * jet.g[c] + fv * jet.dg[c][0];
    let bs = beta * sigma;
    [
        -bs * d1(1) - d3f * jet.g[1],
        -bs * d1(0) + bs * (f.g1 * jet.g[0] + f.g2 * jet.g[1]) - d3f * jet.g[0],
    ]
}
