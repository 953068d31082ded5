use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Direction3, Point3};

const EDGE_TOL: f64 = 1e-12;

/// Axis-aligned rectangle `[y1_min, y1_max] × [y2_min, y2_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub y1: [f64; 2],
    pub y2: [f64; 2],
}

impl Rect {
    pub fn new(y1: [f64; 2], y2: [f64; 2]) -> Result<Self> {
        let r = Self { y1, y2 };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |s: [f64; 2]| s[0].is_finite() && s[1].is_finite() && s[0] < s[1];
        if !ok(self.y1) || !ok(self.y2) {
            return Err(Error::Domain(format!("degenerate rectangle {:?} × {:?}", self.y1, self.y2)));
        }
        Ok(())
    }

    pub fn square(half: f64) -> Self {
        Self {
            y1: [-half, half],
            y2: [-half, half],
        }
    }

    pub fn width(&self) -> f64 {
        self.y1[1] - self.y1[0]
    }

    pub fn height(&self) -> f64 {
        self.y2[1] - self.y2[0]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.y1[0] + self.y1[1]), 0.5 * (self.y2[0] + self.y2[1]))
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.y1[0], self.y2[0]),
            (self.y1[1], self.y2[0]),
            (self.y1[0], self.y2[1]),
            (self.y1[1], self.y2[1]),
        ]
    }

    pub fn contains(&self, y1: f64, y2: f64) -> bool {
        let tol1 = EDGE_TOL * self.width();
        let tol2 = EDGE_TOL * self.height();
        y1 >= self.y1[0] - tol1 && y1 <= self.y1[1] + tol1 && y2 >= self.y2[0] - tol2 && y2 <= self.y2[1] + tol2
    }

    /// Maps `(y1, y2)` to reference coordinates in `[-1, 1]²`.
    pub fn to_reference(&self, y1: f64, y2: f64) -> (f64, f64) {
        let (c1, c2) = self.center();
        (2.0 * (y1 - c1) / self.width(), 2.0 * (y2 - c2) / self.height())
    }
}

impl Default for Rect {
    fn default() -> Self {
        Self::square(1.0)
    }
}

/// The plane `x3 = a y1 + b y2 + d` restricted to the rectangle `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultGeometry {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub rect: Rect,
    pub depth_min: f64,
}

/// Largest value of `a y1 + b y2 + d` over the rectangle (attained at a corner).
pub fn shallowest(m: [f64; 3], rect: &Rect) -> f64 {
    rect.corners()
        .iter()
        .map(|&(y1, y2)| m[0] * y1 + m[1] * y2 + m[2])
        .fold(f64::NEG_INFINITY, f64::max)
}

impl FaultGeometry {
    pub fn new(a: f64, b: f64, d: f64, rect: Rect, depth_min: f64) -> Result<Self> {
        rect.validate()?;
        if !(depth_min > 0.0 && depth_min.is_finite()) {
            return Err(Error::Domain(format!("depth_min must be positive, got {depth_min}")));
        }
        if !(a.is_finite() && b.is_finite() && d.is_finite()) {
            return Err(Error::Domain("plane coefficients must be finite".into()));
        }
        let top = shallowest([a, b, d], &rect);
        if top > -depth_min {
            return Err(Error::DepthViolation {
                shallowest: top,
                depth_min,
            });
        }
        Ok(Self {
            a,
            b,
            d,
            rect,
            depth_min,
        })
    }

    pub fn from_params(m: [f64; 3], rect: Rect, depth_min: f64) -> Result<Self> {
        Self::new(m[0], m[1], m[2], rect, depth_min)
    }

    pub fn params(&self) -> [f64; 3] {
        [self.a, self.b, self.d]
    }

    /// Same rectangle and depth bound, new plane coefficients.
    pub fn with_params(&self, m: [f64; 3]) -> Result<Self> {
        Self::from_params(m, self.rect, self.depth_min)
    }

    pub fn shallowest(&self) -> f64 {
        shallowest(self.params(), &self.rect)
    }

    #[inline]
    pub(crate) fn height(&self, y1: f64, y2: f64) -> f64 {
        self.a * y1 + self.b * y2 + self.d
    }

    pub fn embed(&self, y1: f64, y2: f64) -> Result<Point3> {
        if !self.rect.contains(y1, y2) {
            return Err(Error::OutsideRectangle { y1, y2 });
        }
        Ok(Point3::new(y1, y2, self.height(y1, y2)))
    }

    /// Unit normal `n` and area element `σ`, with `n σ = (-a, -b, 1)`.
    pub fn normal_and_area_element(&self) -> (Direction3, f64) {
        let sigma = (1.0 + self.a * self.a + self.b * self.b).sqrt();
        (Direction3::new(-self.a, -self.b, 1.0) / sigma, sigma)
    }

    /// `n σ = (-a, -b, 1)`.
    pub fn scaled_normal(&self) -> [f64; 3] {
        [-self.a, -self.b, 1.0]
    }

    pub fn is_horizontal(&self) -> bool {
        self.a == 0.0 && self.b == 0.0
    }
}

/// A closed box of plane coefficients, all of whose members keep the fault
/// at least `depth_min` below the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleSet {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub d: [f64; 2],
    pub depth_min: f64,
    #[serde(default)]
    pub rect: Rect,
    /// Rejects tilts with `sqrt(a² + b²)` below `min_tilt` when set.
    #[serde(default)]
    pub exclude_horizontal: bool,
    #[serde(default = "default_min_tilt")]
    pub min_tilt: f64,
}

fn default_min_tilt() -> f64 {
    0.05
}

impl Default for AdmissibleSet {
    fn default() -> Self {
        Self {
            a: [-0.4, 0.4],
            b: [-0.4, 0.4],
            d: [-2.5, -1.5],
            depth_min: 0.5,
            rect: Rect::default(),
            exclude_horizontal: false,
            min_tilt: default_min_tilt(),
        }
    }
}

impl AdmissibleSet {
    /// Checks every corner of the parameter box against every corner of `R`.
    pub fn validate(&self) -> Result<()> {
        self.rect.validate()?;
        for (name, iv) in [("a", self.a), ("b", self.b), ("d", self.d)] {
            if !(iv[0].is_finite() && iv[1].is_finite() && iv[0] <= iv[1]) {
                return Err(Error::config(format!("admissible.{name}"), format!("bad interval {iv:?}")));
            }
        }
        if !(self.depth_min > 0.0) {
            return Err(Error::config("admissible.depth_min", "must be positive"));
        }
        let mut worst = f64::NEG_INFINITY;
        for &a in &self.a {
            for &b in &self.b {
                for &d in &self.d {
                    worst = worst.max(shallowest([a, b, d], &self.rect));
                }
            }
        }
        if worst > -self.depth_min {
            return Err(Error::DepthViolation {
                shallowest: worst,
                depth_min: self.depth_min,
            });
        }
        if self.exclude_horizontal && self.max_tilt() < self.min_tilt {
            return Err(Error::config("admissible.min_tilt", "box contains no sufficiently tilted planes"));
        }
        Ok(())
    }

    fn max_tilt(&self) -> f64 {
        let ma = self.a[0].abs().max(self.a[1].abs());
        let mb = self.b[0].abs().max(self.b[1].abs());
        (ma * ma + mb * mb).sqrt()
    }

    pub fn contains(&self, m: [f64; 3]) -> bool {
        let inside = |v: f64, iv: [f64; 2]| v >= iv[0] && v <= iv[1];
        let tilt_ok = !self.exclude_horizontal || m[0].hypot(m[1]) >= self.min_tilt;
        inside(m[0], self.a) && inside(m[1], self.b) && inside(m[2], self.d) && tilt_ok
    }

    pub fn geometry(&self, m: [f64; 3]) -> Result<FaultGeometry> {
        if !self.contains(m) {
            return Err(Error::Domain(format!("parameters {m:?} outside the admissible set")));
        }
        FaultGeometry::from_params(m, self.rect, self.depth_min)
    }

    /// Uniform sample from the box, rejecting near-horizontal planes when excluded.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 3] {
        let pick = |rng: &mut R, iv: [f64; 2]| {
            if iv[0] == iv[1] {
                iv[0]
            } else {
                rng.random_range(iv[0]..=iv[1])
            }
        };
        loop {
            let m = [pick(rng, self.a), pick(rng, self.b), pick(rng, self.d)];
            if self.contains(m) {
                return m;
            }
        }
    }

    pub fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.a[0] + self.a[1]),
            0.5 * (self.b[0] + self.b[1]),
            0.5 * (self.d[0] + self.d[1]),
        ]
    }
}
