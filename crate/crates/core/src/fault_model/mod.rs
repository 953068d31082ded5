//! Planar fault family over a fixed rectangle, admissible parameter boxes,
//! surface observation grids and finite slip bases.

mod bump;
mod geometry;
mod grid;
mod slip;

pub use bump::{bump_1d, BumpDensity, DensityJet};
pub use geometry::{shallowest, AdmissibleSet, FaultGeometry, Rect};
pub use grid::{GridRule, GridSpec, ObservationGrid};
pub use slip::{gradient_slip, BasisFamily, ScalarJet, SlipBasis, SlipField, SlipJet, SlipKind};

use crate::error::Result;
use crate::kernels::{Direction3, Point3};

pub fn embed(geom: &FaultGeometry, y1: f64, y2: f64) -> Result<Point3> {
    geom.embed(y1, y2)
}

pub fn normal_and_area_element(geom: &FaultGeometry) -> (Direction3, f64) {
    geom.normal_and_area_element()
}

pub fn slip_eval(slip: &SlipField, y1: f64, y2: f64) -> Result<[f64; 2]> {
    slip.eval(y1, y2)
}

/// Lifts a tangential slip to the plane: `(g1, g2, a g1 + b g2)`.
#[inline]
pub fn lift(geom: &FaultGeometry, g: [f64; 2]) -> [f64; 3] {
    [g[0], g[1], geom.a * g[0] + geom.b * g[1]]
}
