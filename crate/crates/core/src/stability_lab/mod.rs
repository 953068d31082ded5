//! Stability experiments for the geometry-to-data map: Lipschitz ratios,
//! Jacobian rank, projection residual growth, projector perturbation, the
//! discrete transport operator and the algebraic identities used along the way.

mod identities;
mod scans;
mod transport;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use identities::{
    coefficient_identity_residual, divergence_identity_check, normal_jump_equation_residual,
    remaining_system_residual, DegeneracyResidual, DivergenceCheck, Quartic,
};
pub use scans::{
    check_condition, lipschitz_scan, projector_lipschitz, rank_scan, residual_growth, LipschitzOptions,
    StabilityCondition, RANK_FLAG_TOL,
};
pub use transport::{transport_operator, transport_triviality, TransportResult};

use crate::error::Result;
use crate::fault_model::{FaultGeometry, GridSpec, ObservationGrid, Rect, SlipBasis, SlipField};
use crate::forward_op::{assemble, jacobian_phi, phi, ForwardOperator, GeometryJacobian, QuadSpec, QuadratureRule};
use crate::kernels::LameParams;

/// `f(y1, y2) = γ1 y1 + γ2 y2 + γ3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFunction {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

impl AffineFunction {
    pub fn new(g1: f64, g2: f64, g3: f64) -> Self {
        Self { g1, g2, g3 }
    }

    pub fn eval(&self, y1: f64, y2: f64) -> f64 {
        self.g1 * y1 + self.g2 * y2 + self.g3
    }

    pub fn grad(&self) -> [f64; 2] {
        [self.g1, self.g2]
    }

    pub fn is_zero(&self) -> bool {
        self.g1 == 0.0 && self.g2 == 0.0 && self.g3 == 0.0
    }

    pub fn as_direction(&self) -> [f64; 3] {
        [self.g1, self.g2, self.g3]
    }
}

/// One sample or step of a scan. Unused fields hold NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub label: String,
    pub m: [f64; 3],
    /// Second geometry, or the direction `q` for step scans.
    pub other: [f64; 3],
    pub t: f64,
    pub metric: f64,
    pub reference: f64,
    pub flag: bool,
}

impl ScanRow {
    pub const HEADER: [&'static str; 12] =
        ["label", "a", "b", "d", "a2", "b2", "d2", "t", "metric", "reference", "flag", "index"];
}

/// Least-squares line `y ≈ slope t + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineFit {
    pub label: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LineFit {
    pub fn fit(label: impl Into<String>, t: &[f64], y: &[f64]) -> Self {
        let n = t.len() as f64;
        let mt = t.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let stt: f64 = t.iter().map(|v| (v - mt).powi(2)).sum();
        let sty: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
        let slope = sty / stt;
        let intercept = my - slope * mt;
        let ss_res: f64 = t.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
        let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
        Self {
            label: label.into(),
            slope,
            intercept,
            r_squared,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScanSummary {
    pub min_ratio: Option<f64>,
    pub fits: Vec<LineFit>,
    pub flags: usize,
    pub stats: BTreeMap<String, f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub kind: String,
    pub rows: Vec<ScanRow>,
    pub summary: ScanSummary,
}

/// Physical constants, observation grid and quadrature shared by every scan.
#[derive(Debug, Clone)]
pub struct ProblemSetup {
    pub lame: LameParams,
    pub grid: ObservationGrid,
    pub quad: QuadSpec,
}

impl ProblemSetup {
    pub fn new(lame: LameParams, grid: GridSpec, quad: QuadSpec) -> Result<Self> {
        Ok(Self {
            lame,
            grid: ObservationGrid::new(grid)?,
            quad,
        })
    }

    pub fn rule(&self, rect: Rect) -> Result<QuadratureRule> {
        QuadratureRule::tensor(rect, self.quad)
    }

    pub fn phi(&self, geom: &FaultGeometry, h: &SlipField) -> Result<Vec<f64>> {
        phi(&self.lame, geom, &self.grid, &self.rule(geom.rect)?, h)
    }

    pub fn jacobian(&self, geom: &FaultGeometry, h: &SlipField) -> Result<GeometryJacobian> {
        jacobian_phi(&self.lame, geom, &self.grid, &self.rule(geom.rect)?, h)
    }

    pub fn operator(&self, geom: &FaultGeometry, basis: &SlipBasis) -> Result<ForwardOperator> {
        assemble(&self.lame, geom, &self.grid, &self.rule(geom.rect)?, basis)
    }

    pub(crate) fn distance(&self, u: &[f64], v: &[f64]) -> f64 {
        let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        self.grid.norm(&d)
    }
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[cfg(test)]
mod tests;
