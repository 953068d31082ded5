use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::geometry::Rect;
use crate::error::{Error, Result};

/// One-dimensional mode family on the reference interval `s ∈ [-1, 1]`.
///
/// * `Sine`: `sin(j π (s + 1) / 2)`.
/// * `Lobatto`: integrated Legendre polynomials, `(1 - s²) P'_j(s) · 2 / (j (j + 1))`;
///   the first `N` of them span `(1 - s²) · P_{N-1}`.
/// * `Clamped`: `(1 - s²)² P_{j-1}(s)`; value and derivative vanish at the ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    #[default]
    Sine,
    Lobatto,
    Clamped,
}

/// `(P_n, P'_n, P''_n)` by the three-term recurrences.
fn legendre(n: usize, s: f64) -> [f64; 3] {
    let (mut p0, mut p1) = (1.0, s);
    let (mut d0, mut d1) = (0.0, 1.0);
    let (mut e0, mut e1) = (0.0, 0.0);
    if n == 0 {
        return [1.0, 0.0, 0.0];
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * s * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        let e2 = e0 + (2.0 * kf + 1.0) * d1;
        (p0, p1, d0, d1, e0, e1) = (p1, p2, d1, d2, e1, e2);
    }
    [p1, d1, e1]
}

fn product(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] * b[0], a[1] * b[0] + a[0] * b[1], a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2]]
}

impl BasisFamily {
    /// Mode `j ≥ 1` and its first two derivatives in `s`.
    pub fn mode(self, j: usize, s: f64) -> [f64; 3] {
        match self {
            BasisFamily::Sine => {
                let k = j as f64 * PI / 2.0;
                let arg = k * (s + 1.0);
                let (sn, cs) = arg.sin_cos();
                [sn, k * cs, -k * k * sn]
            }
            BasisFamily::Lobatto => {
                let jf = j as f64;
                let lm = legendre(j - 1, s)[0];
                let lp = legendre(j + 1, s)[0];
                let pj = legendre(j, s);
                [2.0 * (lm - lp) / (2.0 * jf + 1.0), -2.0 * pj[0], -2.0 * pj[1]]
            }
            BasisFamily::Clamped => {
                let q = 1.0 - s * s;
                product([q * q, -4.0 * s * q, 12.0 * s * s - 4.0], legendre(j - 1, s))
            }
        }
    }

    /// Envelope multiplying a mode to build scalar potentials whose gradients
    /// vanish on the boundary.
    fn envelope(self, s: f64) -> [f64; 3] {
        match self {
            BasisFamily::Sine => {
                let k = PI / 2.0;
                let (sn, cs) = (k * (s + 1.0)).sin_cos();
                [sn, k * cs, -k * k * sn]
            }
            BasisFamily::Lobatto | BasisFamily::Clamped => [1.0 - s * s, -2.0 * s, -2.0],
        }
    }

    /// Potential mode `j ≥ 1`: envelope times mode.
    pub fn potential_mode(self, j: usize, s: f64) -> [f64; 3] {
        product(self.envelope(s), self.mode(j, s))
    }
}

/// Tensor-product basis of `n1 × n2` modes on `R`, used separately for `g1` and `g2`.
///
/// Column `c` of an assembled operator is component `c / (n1 n2)` with mode
/// index `c % (n1 n2) = (j2 - 1) n1 + (j1 - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlipBasis {
    #[serde(default)]
    pub family: BasisFamily,
    pub n1: usize,
    pub n2: usize,
    #[serde(default)]
    pub rect: Rect,
}

/// Value, gradient and Hessian of a scalar function on `R` (physical coordinates).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScalarJet {
    pub v: f64,
    pub d: [f64; 2],
    pub dd: [[f64; 2]; 2],
}

impl ScalarJet {
    fn axpy(&mut self, c: f64, o: &ScalarJet) {
        self.v += c * o.v;
        for i in 0..2 {
            self.d[i] += c * o.d[i];
            for j in 0..2 {
                self.dd[i][j] += c * o.dd[i][j];
            }
        }
    }
}

impl SlipBasis {
    pub fn new(family: BasisFamily, n1: usize, n2: usize, rect: Rect) -> Result<Self> {
        let b = Self { family, n1, n2, rect };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::config("basis", "orders must be at least 1"));
        }
        self.rect.validate()
    }

    pub fn per_component(&self) -> usize {
        self.n1 * self.n2
    }

    /// Number of operator columns (two tangential components).
    pub fn len(&self) -> usize {
        2 * self.per_component()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn scales(&self) -> (f64, f64) {
        (2.0 / self.rect.width(), 2.0 / self.rect.height())
    }

    fn tensor_jet(&self, a: [f64; 3], b: [f64; 3]) -> ScalarJet {
        let (k1, k2) = self.scales();
        ScalarJet {
            v: a[0] * b[0],
            d: [k1 * a[1] * b[0], k2 * a[0] * b[1]],
            dd: [
                [k1 * k1 * a[2] * b[0], k1 * k2 * a[1] * b[1]],
                [k1 * k2 * a[1] * b[1], k2 * k2 * a[0] * b[2]],
            ],
        }
    }

    /// Jet of the `(j1, j2)` mode (1-based) at `(y1, y2)`.
    pub fn mode_jet(&self, j1: usize, j2: usize, y1: f64, y2: f64) -> ScalarJet {
        let (s1, s2) = self.rect.to_reference(y1, y2);
        self.tensor_jet(self.family.mode(j1, s1), self.family.mode(j2, s2))
    }

    pub fn potential_jet(&self, j1: usize, j2: usize, y1: f64, y2: f64) -> ScalarJet {
        let (s1, s2) = self.rect.to_reference(y1, y2);
        self.tensor_jet(self.family.potential_mode(j1, s1), self.family.potential_mode(j2, s2))
    }

    fn expand(&self, coeffs: &[f64], y1: f64, y2: f64, potential: bool) -> ScalarJet {
        let (s1, s2) = self.rect.to_reference(y1, y2);
        let f = if potential {
            BasisFamily::potential_mode
        } else {
            BasisFamily::mode
        };
        let m1: Vec<[f64; 3]> = (1..=self.n1).map(|j| f(self.family, j, s1)).collect();
        let m2: Vec<[f64; 3]> = (1..=self.n2).map(|j| f(self.family, j, s2)).collect();
        let mut out = ScalarJet::default();
        for (j2, b) in m2.iter().enumerate() {
            for (j1, a) in m1.iter().enumerate() {
                let c = coeffs[j2 * self.n1 + j1];
                if c != 0.0 {
                    out.axpy(c, &self.tensor_jet(*a, *b));
                }
            }
        }
        out
    }

    /// Tangential slip `(g1, g2)` of operator column `col` at `(y1, y2)`.
    pub fn column_slip(&self, col: usize, y1: f64, y2: f64) -> [f64; 2] {
        let n = self.per_component();
        let (comp, idx) = (col / n, col % n);
        let v = self.mode_jet(idx % self.n1 + 1, idx / self.n1 + 1, y1, y2).v;
        let mut g = [0.0; 2];
        g[comp] = v;
        g
    }

    /// All `n1 n2` mode values at one point, in column order.
    pub fn mode_values(&self, y1: f64, y2: f64) -> Vec<f64> {
        let (s1, s2) = self.rect.to_reference(y1, y2);
        let m1: Vec<f64> = (1..=self.n1).map(|j| self.family.mode(j, s1)[0]).collect();
        let m2: Vec<f64> = (1..=self.n2).map(|j| self.family.mode(j, s2)[0]).collect();
        m2.iter().flat_map(|b| m1.iter().map(move |a| a * b)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlipKind {
    /// Independent expansions of `g1` and `g2`.
    Free { g1: Vec<f64>, g2: Vec<f64> },
    /// `g = u V` with scalar `u` in the basis and a fixed tangential direction `V`.
    OneDirectional { u: Vec<f64>, direction: [f64; 2] },
    /// `g = ∇φ`, `φ` expanded in enveloped modes.
    Gradient { potential: Vec<f64> },
}

/// Tangential slip on `R` together with its first derivatives; `dg[c][i] = ∂_i g_c`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SlipJet {
    pub g: [f64; 2],
    pub dg: [[f64; 2]; 2],
}

impl SlipJet {
    pub fn div(&self) -> f64 {
        self.dg[0][0] + self.dg[1][1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlipField {
    pub basis: SlipBasis,
    #[serde(flatten)]
    pub kind: SlipKind,
}

impl SlipField {
    pub fn new(basis: SlipBasis, kind: SlipKind) -> Result<Self> {
        let s = Self { basis, kind };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.basis.validate()?;
        let n = self.basis.per_component();
        let check = |v: &Vec<f64>| {
            if v.len() != n {
                Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                })
            } else if v.iter().any(|c| !c.is_finite()) {
                Err(Error::config("slip", "coefficients must be finite"))
            } else {
                Ok(())
            }
        };
        match &self.kind {
            SlipKind::Free { g1, g2 } => {
                check(g1)?;
                check(g2)
            }
            SlipKind::OneDirectional { u, direction } => {
                check(u)?;
                if direction[0] == 0.0 && direction[1] == 0.0 {
                    return Err(Error::config("slip.direction", "must be nonzero"));
                }
                Ok(())
            }
            SlipKind::Gradient { potential } => check(potential),
        }
    }

    pub fn free(basis: SlipBasis, g1: Vec<f64>, g2: Vec<f64>) -> Result<Self> {
        Self::new(basis, SlipKind::Free { g1, g2 })
    }

    pub fn one_directional(basis: SlipBasis, u: Vec<f64>, direction: [f64; 2]) -> Result<Self> {
        Self::new(basis, SlipKind::OneDirectional { u, direction })
    }

    pub fn zero(basis: SlipBasis) -> Self {
        let n = basis.per_component();
        Self {
            basis,
            kind: SlipKind::Free {
                g1: vec![0.0; n],
                g2: vec![0.0; n],
            },
        }
    }

    pub fn is_one_directional(&self) -> bool {
        matches!(self.kind, SlipKind::OneDirectional { .. })
    }

    pub fn is_gradient(&self) -> bool {
        matches!(self.kind, SlipKind::Gradient { .. })
    }

    pub fn scaled(&self, c: f64) -> Self {
        let sc = |v: &Vec<f64>| v.iter().map(|x| c * x).collect::<Vec<_>>();
        let kind = match &self.kind {
            SlipKind::Free { g1, g2 } => SlipKind::Free { g1: sc(g1), g2: sc(g2) },
            SlipKind::OneDirectional { u, direction } => SlipKind::OneDirectional {
                u: sc(u),
                direction: *direction,
            },
            SlipKind::Gradient { potential } => SlipKind::Gradient { potential: sc(potential) },
        };
        Self { basis: self.basis, kind }
    }

    /// Basis coefficients `(g1 block, g2 block)` when the slip is a finite basis expansion.
    pub fn coefficients(&self) -> Option<Vec<f64>> {
        match &self.kind {
            SlipKind::Free { g1, g2 } => Some(g1.iter().chain(g2).copied().collect()),
            SlipKind::OneDirectional { u, direction } => Some(
                u.iter()
                    .map(|c| c * direction[0])
                    .chain(u.iter().map(|c| c * direction[1]))
                    .collect(),
            ),
            SlipKind::Gradient { .. } => None,
        }
    }

    /// Smallest basis of the same family whose free span contains this slip.
    ///
    /// Gradients of enveloped polynomial modes need two extra modes per direction;
    /// sine gradients are not in any finite sine span, so the own basis is returned.
    pub fn trial_basis(&self) -> SlipBasis {
        match (&self.kind, self.basis.family) {
            (SlipKind::Gradient { .. }, BasisFamily::Lobatto | BasisFamily::Clamped) => SlipBasis {
                n1: self.basis.n1 + 2,
                n2: self.basis.n2 + 2,
                ..self.basis
            },
            _ => self.basis,
        }
    }

    pub fn jet(&self, y1: f64, y2: f64) -> SlipJet {
        let b = &self.basis;
        match &self.kind {
            SlipKind::Free { g1, g2 } => {
                let a = b.expand(g1, y1, y2, false);
                let c = b.expand(g2, y1, y2, false);
                SlipJet {
                    g: [a.v, c.v],
                    dg: [a.d, c.d],
                }
            }
            SlipKind::OneDirectional { u, direction } => {
                let s = b.expand(u, y1, y2, false);
                SlipJet {
                    g: [s.v * direction[0], s.v * direction[1]],
                    dg: [
                        [s.d[0] * direction[0], s.d[1] * direction[0]],
                        [s.d[0] * direction[1], s.d[1] * direction[1]],
                    ],
                }
            }
            SlipKind::Gradient { potential } => {
                let p = b.expand(potential, y1, y2, true);
                SlipJet { g: p.d, dg: p.dd }
            }
        }
    }

    pub fn eval_unchecked(&self, y1: f64, y2: f64) -> [f64; 2] {
        self.jet(y1, y2).g
    }

    pub fn eval(&self, y1: f64, y2: f64) -> Result<[f64; 2]> {
        if !self.basis.rect.contains(y1, y2) {
            return Err(Error::OutsideRectangle { y1, y2 });
        }
        Ok(self.eval_unchecked(y1, y2))
    }
}

/// `g = ∇φ` for the potential `φ = Σ p_j w_j` in the enveloped basis.
pub fn gradient_slip(basis: SlipBasis, potential: Vec<f64>) -> Result<SlipField> {
    SlipField::new(basis, SlipKind::Gradient { potential })
}
