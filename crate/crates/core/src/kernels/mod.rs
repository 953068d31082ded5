//! Closed-form elastostatic kernels.
//!
//! * [`kelvin_tensor`]: free-space point-force solution `K(x, y)`.
//! * [`free_space_kernel`]: dislocation kernel `G(x, y, v) = (T_v(y) K(x, y))ᵀ`.
//! * [`halfspace_kernel`]: the traction-free half-space analogue `H(x, y, n)`,
//!   obtained by applying the same source-side traction operator to the
//!   half-space point-force solution. `H − G` is smooth across `x = y`.
//!
//! Index convention for every 3×3 tensor: row = receiver component,
//! column = source (slip) component. Derivatives with respect to source
//! coordinates are exact (dual numbers), never differenced.

mod kelvin;
mod mindlin;
pub mod scalar;

use nalgebra::{Matrix3, Point3 as NaPoint3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use kelvin::{Grad3, Mat3};
use scalar::{Dual, HyperDual};

pub type Point3 = NaPoint3<f64>;
pub type Direction3 = Vector3<f64>;
pub type Tensor3x3 = Matrix3<f64>;

/// The two Lamé constants of a homogeneous isotropic medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLame")]
pub struct LameParams {
    lambda: f64,
    mu: f64,
}

#[derive(Deserialize)]
struct RawLame {
    lambda: f64,
    mu: f64,
}

impl TryFrom<RawLame> for LameParams {
    type Error = Error;
    fn try_from(raw: RawLame) -> Result<Self> {
        LameParams::new(raw.lambda, raw.mu)
    }
}

impl LameParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite() && lambda > 0.0 && mu > 0.0) {
            return Err(Error::InvalidLame { lambda, mu });
        }
        Ok(Self { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn poisson_ratio(&self) -> f64 {
        self.lambda / (2.0 * (self.lambda + self.mu))
    }

    /// `λ / (λ + 2μ)`, the factor that appears in the normal jump relations.
    pub fn jump_ratio(&self) -> f64 {
        self.lambda / (self.lambda + 2.0 * self.mu)
    }
}

impl Default for LameParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            mu: 1.0,
        }
    }
}

#[inline]
pub(crate) fn arr(p: &Point3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

#[inline]
pub(crate) fn varr(v: &Direction3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

pub(crate) fn to_tensor(m: &Mat3<f64>) -> Tensor3x3 {
    Tensor3x3::from_fn(|i, j| m[i][j])
}

fn check_distinct(x: &[f64; 3], y: &[f64; 3]) -> Result<()> {
    if x == y {
        return Err(Error::CoincidentPoints);
    }
    Ok(())
}

fn check_halfspace(x: &[f64; 3], y: &[f64; 3]) -> Result<()> {
    if !(y[2] < 0.0) {
        return Err(Error::SourceNotBelowSurface(y[2]));
    }
    if x[2] > 0.0 {
        return Err(Error::ReceiverAboveSurface(x[2]));
    }
    check_distinct(x, y)
}

/// Kelvin's tensor `K(x, y)`; symmetric, and symmetric under `x ↔ y`.
pub fn kelvin_tensor(params: &LameParams, x: &Point3, y: &Point3) -> Result<Tensor3x3> {
    let (xa, ya) = (arr(x), arr(y));
    check_distinct(&xa, &ya)?;
    let r = [xa[0] - ya[0], xa[1] - ya[1], xa[2] - ya[2]];
    Ok(to_tensor(&kelvin::kelvin(params, r)))
}

/// `σ_ij = λ tr(∇u) δ_ij + μ (∂_j u_i + ∂_i u_j)` with `grad_u[(i, j)] = ∂_j u_i`.
pub fn stress_tensor(params: &LameParams, grad_u: &Tensor3x3) -> Tensor3x3 {
    let tr = grad_u.trace();
    Tensor3x3::identity() * (params.lambda * tr) + (grad_u + grad_u.transpose()) * params.mu
}

/// Stress vector `σ(u) e`.
pub fn traction_vector(params: &LameParams, grad_u: &Tensor3x3, e: &Direction3) -> Direction3 {
    stress_tensor(params, grad_u) * e
}

/// `G(x, y, v)`: displacement at `x` per unit slip at `y` across a surface element with normal `v`.
pub fn free_space_kernel(params: &LameParams, x: &Point3, y: &Point3, v: &Direction3) -> Result<Tensor3x3> {
    let (xa, ya) = (arr(x), arr(y));
    check_distinct(&xa, &ya)?;
    Ok(to_tensor(&kelvin::free_space(params, xa, ya, varr(v))))
}

/// `G` together with the derivatives needed by the layer-potential checks.
#[derive(Debug, Clone, Copy)]
pub struct FreeSpaceJet {
    pub g: Tensor3x3,
    pub dy1: Tensor3x3,
    pub dy3: Tensor3x3,
    pub dx3: Tensor3x3,
    pub dx3_dy3: Tensor3x3,
}

pub fn free_space_jet(params: &LameParams, x: &Point3, y: &Point3, v: &Direction3) -> Result<FreeSpaceJet> {
    let (xa, ya) = (arr(x), arr(y));
    check_distinct(&xa, &ya)?;
    let vd = varr(v).map(Dual::new_const);
    let xd = xa.map(Dual::new_const);
    let mut yd = ya.map(Dual::new_const);
    yd[0].eps = 1.0;
    let d1 = kelvin::free_space(params, xd, yd, vd);

    let vh = varr(v).map(HyperDual::new_const);
    let mut xh = xa.map(HyperDual::new_const);
    let mut yh = ya.map(HyperDual::new_const);
    xh[2].e1 = 1.0;
    yh[2].e2 = 1.0;
    let h = kelvin::free_space(params, xh, yh, vh);

    Ok(FreeSpaceJet {
        g: Tensor3x3::from_fn(|i, j| h[i][j].re),
        dy1: Tensor3x3::from_fn(|i, j| d1[i][j].eps),
        dy3: Tensor3x3::from_fn(|i, j| h[i][j].e2),
        dx3: Tensor3x3::from_fn(|i, j| h[i][j].e1),
        dx3_dy3: Tensor3x3::from_fn(|i, j| h[i][j].e12),
    })
}

/// Source-side stress of the half-space point-force solution at a fixed
/// receiver/source pair, so that `H(x, y, n)` can be formed for any `n`
/// by a single contraction. `stress[k]` is the 3×3 stress (indices `i, j`)
/// whose contraction with `n` over `j` gives row `k` of `H`.
#[derive(Debug, Clone, Copy)]
pub struct HalfspaceSource {
    stress: [Mat3<f64>; 3],
    stress_dy3: Option<[Mat3<f64>; 3]>,
}

fn stress_from_gradient(params: &LameParams, du: &Grad3<f64>) -> [Mat3<f64>; 3] {
    let (l, m) = (params.lambda, params.mu);
    let mut s = [[[0.0; 3]; 3]; 3];
    for (k, sk) in s.iter_mut().enumerate() {
        let div = du[0][k][0] + du[1][k][1] + du[2][k][2];
        for i in 0..3 {
            for j in 0..3 {
                let mut v = m * (du[j][k][i] + du[i][k][j]);
                if i == j {
                    v += l * div;
                }
                sk[i][j] = v;
            }
        }
    }
    s
}

fn contract(stress: &[Mat3<f64>; 3], n: &[f64; 3]) -> Tensor3x3 {
    Tensor3x3::from_fn(|k, i| {
        let s = &stress[k][i];
        s[0] * n[0] + s[1] * n[1] + s[2] * n[2]
    })
}

impl HalfspaceSource {
    /// Evaluates the source stress; with `with_dy3` also its exact `∂/∂y3`.
    pub fn new(params: &LameParams, x: &Point3, y: &Point3, with_dy3: bool) -> Result<Self> {
        let (xa, ya) = (arr(x), arr(y));
        check_halfspace(&xa, &ya)?;
        Ok(Self::eval_unchecked(params, &xa, &ya, with_dy3))
    }

    pub(crate) fn eval_unchecked(params: &LameParams, xa: &[f64; 3], ya: &[f64; 3], with_dy3: bool) -> Self {
        let mut du = [[[0.0; 3]; 3]; 3];
        if !with_dy3 {
            let xd = xa.map(Dual::new_const);
            for (q, slab) in du.iter_mut().enumerate() {
                let mut yd = ya.map(Dual::new_const);
                yd[q].eps = 1.0;
                let u = mindlin::halfspace_point_force(params, xd, yd);
                for k in 0..3 {
                    for p in 0..3 {
                        slab[k][p] = u[k][p].eps;
                    }
                }
            }
            return Self {
                stress: stress_from_gradient(params, &du),
                stress_dy3: None,
            };
        }
        let mut ddu = [[[0.0; 3]; 3]; 3];
        let xh = xa.map(HyperDual::new_const);
        for q in 0..3 {
            let mut yh = ya.map(HyperDual::new_const);
            yh[q].e1 = 1.0;
            yh[2].e2 += 1.0;
            let u = mindlin::halfspace_point_force(params, xh, yh);
            for k in 0..3 {
                for p in 0..3 {
                    du[q][k][p] = u[k][p].e1;
                    ddu[q][k][p] = u[k][p].e12;
                }
            }
        }
        Self {
            stress: stress_from_gradient(params, &du),
            stress_dy3: Some(stress_from_gradient(params, &ddu)),
        }
    }

    pub fn kernel(&self, n: &[f64; 3]) -> Tensor3x3 {
        contract(&self.stress, n)
    }

    /// `∂H/∂y3`; `None` unless constructed with `with_dy3`.
    pub fn kernel_dy3(&self, n: &[f64; 3]) -> Option<Tensor3x3> {
        self.stress_dy3.as_ref().map(|s| contract(s, n))
    }
}

/// Half-space dislocation kernel `H(x, y, n)`; requires `y3 < 0`, `x3 ≤ 0`, `x ≠ y`.
pub fn halfspace_kernel(params: &LameParams, x: &Point3, y: &Point3, n: &Direction3) -> Result<Tensor3x3> {
    Ok(HalfspaceSource::new(params, x, y, false)?.kernel(&varr(n)))
}

/// `∂H(x, y, n)/∂y3`, exact.
pub fn halfspace_kernel_dy3(params: &LameParams, x: &Point3, y: &Point3, n: &Direction3) -> Result<Tensor3x3> {
    let src = HalfspaceSource::new(params, x, y, true)?;
    Ok(src.kernel_dy3(&varr(n)).expect("constructed with dy3"))
}
