//! Free-space (Kelvin) point-force solution and its first derivatives,
//! written in terms of the separation `r = x - y`.

use std::f64::consts::PI;

use super::scalar::Scalar;
use super::LameParams;

pub(crate) type Mat3<T> = [[T; 3]; 3];
pub(crate) type Grad3<T> = [Mat3<T>; 3];

struct Coeffs {
    c: f64,
    a: f64,
    b: f64,
}

fn coeffs(lame: &LameParams) -> Coeffs {
    let (l, m) = (lame.lambda(), lame.mu());
    Coeffs {
        c: 1.0 / (8.0 * PI * m * (l + 2.0 * m)),
        a: l + m,
        b: l + 3.0 * m,
    }
}

#[inline]
fn norm<T: Scalar>(r: &[T; 3]) -> T {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

/// `K_ij = c [ a r_i r_j / |r|^3 + b δ_ij / |r| ]`.
pub(crate) fn kelvin<T: Scalar>(lame: &LameParams, r: [T; 3]) -> Mat3<T> {
    let k = coeffs(lame);
    let rn = norm(&r);
    let inv = T::cst(1.0) / rn;
    let inv3 = inv * inv * inv;
    let mut out = [[T::cst(0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut v = (r[i] * r[j] * inv3).scale(k.a);
            if i == j {
                v = v + inv.scale(k.b);
            }
            out[i][j] = v.scale(k.c);
        }
    }
    out
}

/// `out[l][i][j] = ∂K_ij / ∂r_l`.
pub(crate) fn kelvin_grad<T: Scalar>(lame: &LameParams, r: [T; 3]) -> Grad3<T> {
    let k = coeffs(lame);
    let rn = norm(&r);
    let inv = T::cst(1.0) / rn;
    let inv3 = inv * inv * inv;
    let inv5 = inv3 * inv * inv;
    let zero = T::cst(0.0);
    let mut out = [[[zero; 3]; 3]; 3];
    for (l, slab) in out.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                let mut v = (r[i] * r[j] * r[l] * inv5).scale(-3.0 * k.a);
                if i == l {
                    v = v + (r[j] * inv3).scale(k.a);
                }
                if j == l {
                    v = v + (r[i] * inv3).scale(k.a);
                }
                if i == j {
                    v = v - (r[l] * inv3).scale(k.b);
                }
                slab[i][j] = v.scale(k.c);
            }
        }
    }
    out
}

/// Contracts the source-side stress of a point-force displacement tensor
/// with the direction `v`.
///
/// `du[q][k][p]` is `∂U_kp / ∂y_q`, where `U_kp(x, y)` is the displacement at
/// `x` in direction `k` due to a unit force at `y` in direction `p`. The
/// result is `D_ki = Σ_j v_j [ λ δ_ij Σ_p ∂_p U_kp + μ (∂_j U_ki + ∂_i U_kj) ]`.
pub(crate) fn source_traction<T: Scalar>(lame: &LameParams, du: &Grad3<T>, v: [T; 3]) -> Mat3<T> {
    let (l, m) = (lame.lambda(), lame.mu());
    let zero = T::cst(0.0);
    let mut out = [[zero; 3]; 3];
    for k in 0..3 {
        let div = du[0][k][0] + du[1][k][1] + du[2][k][2];
        for i in 0..3 {
            let mut acc = (div * v[i]).scale(l);
            for j in 0..3 {
                acc = acc + ((du[j][k][i] + du[i][k][j]) * v[j]).scale(m);
            }
            out[k][i] = acc;
        }
    }
    out
}

/// Free-space dislocation kernel `G(x, y, v)` evaluated in scalar type `T`.
pub(crate) fn free_space<T: Scalar>(lame: &LameParams, x: [T; 3], y: [T; 3], v: [T; 3]) -> Mat3<T> {
    let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let mut du = kelvin_grad(lame, r);
    // ∂/∂y = -∂/∂r
    for slab in du.iter_mut() {
        for row in slab.iter_mut() {
            for e in row.iter_mut() {
                *e = -*e;
            }
        }
    }
    source_traction(lame, &du, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_central_differences() {
        let lame = LameParams::new(1.3, 0.7).unwrap();
        let r = [0.4, -0.9, 0.35];
        let g = kelvin_grad(&lame, r);
        let h = 1e-5;
        for l in 0..3 {
            let mut rp = r;
            let mut rm = r;
            rp[l] += h;
            rm[l] -= h;
            let kp = kelvin(&lame, rp);
            let km = kelvin(&lame, rm);
            for i in 0..3 {
                for j in 0..3 {
                    let fd = (kp[i][j] - km[i][j]) / (2.0 * h);
                    assert!((fd - g[l][i][j]).abs() < 1e-8, "l={l} i={i} j={j}");
                }
            }
        }
    }
}
