//! Finite-difference probes for displacement fields.
//!
//! These are deliberately independent of the exact derivatives used by the
//! kernels and serve as a cross-check on them.

use crate::kernels::{traction_vector, Direction3, LameParams, Point3, Tensor3x3};

const D1: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
const D2: [(f64, f64); 5] = [
    (-2.0, -1.0 / 12.0),
    (-1.0, 16.0 / 12.0),
    (0.0, -30.0 / 12.0),
    (1.0, 16.0 / 12.0),
    (2.0, -1.0 / 12.0),
];
// one-sided, fourth order, stepping towards negative offsets
const D1_BACK: [(f64, f64); 5] = [
    (0.0, 25.0 / 12.0),
    (-1.0, -48.0 / 12.0),
    (-2.0, 36.0 / 12.0),
    (-3.0, -16.0 / 12.0),
    (-4.0, 3.0 / 12.0),
];

fn shift(x: &Point3, axis: usize, d: f64) -> Point3 {
    let mut p = *x;
    p[axis] += d;
    p
}

/// `grad[(i, j)] = ∂_j u_i`, fourth-order central differences with step `h`.
pub fn gradient<F: Fn(&Point3) -> Direction3>(field: F, x: &Point3, h: f64) -> Tensor3x3 {
    let mut g = Tensor3x3::zeros();
    for j in 0..3 {
        let mut d = Direction3::zeros();
        for &(o, w) in &D1 {
            d += field(&shift(x, j, o * h)) * w;
        }
        g.set_column(j, &(d / h));
    }
    g
}

/// Gradient for a point on `x3 = 0`, using a one-sided stencil in `x3`.
pub fn surface_gradient<F: Fn(&Point3) -> Direction3>(field: F, x: &Point3, h: f64) -> Tensor3x3 {
    let mut g = Tensor3x3::zeros();
    for j in 0..2 {
        let mut d = Direction3::zeros();
        for &(o, w) in &D1 {
            d += field(&shift(x, j, o * h)) * w;
        }
        g.set_column(j, &(d / h));
    }
    let mut d = Direction3::zeros();
    for &(o, w) in &D1_BACK {
        d += field(&shift(x, 2, o * h)) * w;
    }
    g.set_column(2, &(d / h));
    g
}

/// Stress vector on the surface normal `e3` at a point of `x3 = 0`.
pub fn surface_traction<F: Fn(&Point3) -> Direction3>(lame: &LameParams, field: F, x: &Point3, h: f64) -> Direction3 {
    traction_vector(lame, &surface_gradient(field, x, h), &Direction3::z())
}

/// `hess[c][(i, j)] = ∂_i ∂_j u_c`.
pub fn hessian<F: Fn(&Point3) -> Direction3>(field: F, x: &Point3, h: f64) -> [Tensor3x3; 3] {
    let mut out = [Tensor3x3::zeros(); 3];
    let mut put = |i: usize, j: usize, v: Direction3| {
        for (c, m) in out.iter_mut().enumerate() {
            m[(i, j)] = v[c];
            m[(j, i)] = v[c];
        }
    };
    for i in 0..3 {
        let mut d = Direction3::zeros();
        for &(o, w) in &D2 {
            d += field(&shift(x, i, o * h)) * w;
        }
        put(i, i, d / (h * h));
        for j in (i + 1)..3 {
            let mut d = Direction3::zeros();
            for &(oi, wi) in &D1 {
                for &(oj, wj) in &D1 {
                    d += field(&shift(&shift(x, i, oi * h), j, oj * h)) * (wi * wj);
                }
            }
            put(i, j, d / (h * h));
        }
    }
    out
}

/// Relative Navier residual `|μΔu + (λ+μ)∇div u| / (μ|Δu| + (λ+μ)|∇div u|)`.
pub fn navier_residual<F: Fn(&Point3) -> Direction3>(lame: &LameParams, field: F, x: &Point3, h: f64) -> f64 {
    let hs = hessian(field, x, h);
    let lap = Direction3::from_fn(|c, _| hs[c].trace());
    let grad_div = Direction3::from_fn(|i, _| (0..3).map(|j| hs[j][(i, j)]).sum());
    let a = lap * lame.mu();
    let b = grad_div * (lame.lambda() + lame.mu());
    (a + b).norm() / (a.norm() + b.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quartic_field() {
        let f = |p: &Point3| Direction3::new(p.x.powi(4) + p.y * p.z, p.x * p.y * p.y, p.z.powi(3));
        let x = Point3::new(0.3, -0.2, 0.5);
        let g = gradient(f, &x, 0.1);
        let exact = Tensor3x3::new(
            4.0 * 0.3f64.powi(3),
            0.5,
            -0.2,
            0.04,
            2.0 * 0.3 * -0.2,
            0.0,
            0.0,
            0.0,
            3.0 * 0.25,
        );
        assert!((g - exact).norm() < 1e-12);
        let h = hessian(f, &x, 0.1);
        assert!((h[0][(0, 0)] - 12.0 * 0.09).abs() < 1e-10);
        assert!((h[0][(1, 2)] - 1.0).abs() < 1e-10);
        assert!((h[1][(0, 1)] - 2.0 * -0.2).abs() < 1e-10);
        let s = surface_gradient(f, &Point3::new(0.3, -0.2, 0.0), 0.1);
        assert!((s[(2, 2)]).abs() < 1e-12);
        assert!((s[(0, 1)]).abs() < 1e-12);
    }
}
