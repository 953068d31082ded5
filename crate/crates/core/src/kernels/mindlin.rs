//! Point force in a traction-free half-space (Mindlin's solution).
//!
//! The classical formulas are stated for depth `z = -x3 ≥ 0` with the force at
//! depth `c = -y3`; vertical components are flipped back to the upward `x3`
//! axis on output.

use std::f64::consts::PI;

use super::kelvin::Mat3;
use super::scalar::Scalar;
use super::LameParams;

struct Consts {
    k: f64,
    a4: f64,
    b: f64,
    vz: f64,
}

fn consts(lame: &LameParams) -> Consts {
    let nu = lame.poisson_ratio();
    let b = 3.0 - 4.0 * nu;
    Consts {
        k: 1.0 / (16.0 * PI * lame.mu() * (1.0 - nu)),
        a4: 4.0 * (1.0 - nu) * (1.0 - 2.0 * nu),
        b,
        vz: 8.0 * (1.0 - nu) * (1.0 - nu) - b,
    }
}

struct Geometry<T> {
    z: T,
    c: T,
    inv_r1: T,
    inv_r2: T,
    inv_s: T, // 1 / (R2 + z + c)
}

/// Horizontal force along the `p` axis; returns (along, transverse, downward).
fn horizontal<T: Scalar>(k: &Consts, g: &Geometry<T>, p: T, q: T) -> (T, T, T) {
    let one = T::cst(1.0);
    let (z, c) = (g.z, g.c);
    let r1i3 = g.inv_r1 * g.inv_r1 * g.inv_r1;
    let r2i2 = g.inv_r2 * g.inv_r2;
    let r2i3 = r2i2 * g.inv_r2;
    let r2i5 = r2i3 * r2i2;
    let cz = c * z;
    let p2 = p * p;

    let along = g.inv_r1.scale(k.b)
        + g.inv_r2
        + p2 * r1i3
        + (p2 * r2i3).scale(k.b)
        + (cz * r2i3 * (one - (p2 * r2i2).scale(3.0))).scale(2.0)
        + (g.inv_s * (one - p2 * g.inv_r2 * g.inv_s)).scale(k.a4);
    let trans = p
        * q
        * (r1i3 + r2i3.scale(k.b) - (cz * r2i5).scale(6.0) - (g.inv_r2 * g.inv_s * g.inv_s).scale(k.a4));
    let down = p
        * ((z - c) * r1i3 + ((z - c) * r2i3).scale(k.b) - (cz * (z + c) * r2i5).scale(6.0)
            + (g.inv_r2 * g.inv_s).scale(k.a4));
    (along.scale(k.k), trans.scale(k.k), down.scale(k.k))
}

/// Downward force; returns (common horizontal factor, downward displacement).
fn vertical<T: Scalar>(k: &Consts, g: &Geometry<T>) -> (T, T) {
    let (z, c) = (g.z, g.c);
    let r1i3 = g.inv_r1 * g.inv_r1 * g.inv_r1;
    let r2i2 = g.inv_r2 * g.inv_r2;
    let r2i3 = r2i2 * g.inv_r2;
    let r2i5 = r2i3 * r2i2;
    let cz = c * z;
    let zp = z + c;
    let zm = z - c;

    let horiz = zm * r1i3 + (zm * r2i3).scale(k.b) - (g.inv_r2 * g.inv_s).scale(k.a4)
        + (cz * zp * r2i5).scale(6.0);
    let down = g.inv_r1.scale(k.b)
        + g.inv_r2.scale(k.vz)
        + zm * zm * r1i3
        + ((zp * zp).scale(k.b) - cz.scale(2.0)) * r2i3
        + (cz * zp * zp * r2i5).scale(6.0);
    (horiz.scale(k.k), down.scale(k.k))
}

/// `U[k][p]`: displacement at `x` in direction `k` due to a unit force at `y`
/// in direction `p`, with `x3 = 0` traction free.
pub(crate) fn halfspace_point_force<T: Scalar>(lame: &LameParams, x: [T; 3], y: [T; 3]) -> Mat3<T> {
    let k = consts(lame);
    let hx = x[0] - y[0];
    let hy = x[1] - y[1];
    let z = -x[2];
    let c = -y[2];
    let rho2 = hx * hx + hy * hy;
    let zm = z - c;
    let zp = z + c;
    let r1 = (rho2 + zm * zm).sqrt();
    let r2 = (rho2 + zp * zp).sqrt();
    let one = T::cst(1.0);
    let g = Geometry {
        z,
        c,
        inv_r1: one / r1,
        inv_r2: one / r2,
        inv_s: one / (r2 + zp),
    };

    let mut u = [[T::cst(0.0); 3]; 3];
    let (a, t, d) = horizontal(&k, &g, hx, hy);
    u[0][0] = a;
    u[1][0] = t;
    u[2][0] = -d;
    let (a, t, d) = horizontal(&k, &g, hy, hx);
    u[1][1] = a;
    u[0][1] = t;
    u[2][1] = -d;
    let (w, d) = vertical(&k, &g);
    u[0][2] = -(hx * w);
    u[1][2] = -(hy * w);
    u[2][2] = d;
    u
}

#[cfg(test)]
mod tests {
    use super::super::kelvin::kelvin;
    use super::*;

    #[test]
    fn singular_part_is_kelvin() {
        // the image terms stay bounded as x -> y, so U - K converges
        let lame = LameParams::new(1.0, 1.0).unwrap();
        let y = [0.1, -0.2, -1.0];
        let diff = |eps: f64| {
            let x = [y[0] + eps, y[1] + 0.5 * eps, y[2] - 0.3 * eps];
            let u = halfspace_point_force(&lame, x, y);
            let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
            let kv = kelvin(&lame, r);
            let mut d = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    d[i][j] = u[i][j] - kv[i][j];
                }
            }
            d
        };
        let a = diff(1e-4);
        let b = diff(1e-6);
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[i][j] - b[i][j]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn reciprocity() {
        let lame = LameParams::new(2.0, 0.8).unwrap();
        let x = [0.3, 0.4, -0.6];
        let y = [-0.5, 0.2, -1.4];
        let uxy = halfspace_point_force(&lame, x, y);
        let uyx = halfspace_point_force(&lame, y, x);
        for i in 0..3 {
            for j in 0..3 {
                assert!((uxy[i][j] - uyx[j][i]).abs() < 1e-13, "{i}{j}");
            }
        }
    }
}
