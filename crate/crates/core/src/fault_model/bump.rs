use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `e · exp(-1 / (1 - t²))` on `|t| < 1`, normalized to 1 at the origin,
/// with its first two derivatives.
pub fn bump_1d(t: f64) -> [f64; 3] {
    if t.abs() >= 1.0 {
        return [0.0; 3];
    }
    let q = 1.0 - t * t;
    let v = (1.0 - 1.0 / q).exp();
    let g = -2.0 * t / (q * q);
    let dg = -2.0 / (q * q) - 8.0 * t * t / (q * q * q);
    [v, v * g, v * (g * g + dg)]
}

/// Smooth compactly supported density `amplitude · ψ((y1-c1)/r1) ψ((y2-c2)/r2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpDensity {
    pub center: [f64; 2],
    pub radii: [f64; 2],
    pub amplitude: [f64; 3],
}

/// Values and derivatives of a vector density; `d[i][c] = ∂_i g_c`, `dd[i][j][c] = ∂_i ∂_j g_c`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DensityJet {
    pub g: [f64; 3],
    pub d: [[f64; 3]; 2],
    pub dd: [[[f64; 3]; 2]; 2],
}

impl BumpDensity {
    pub fn new(center: [f64; 2], radii: [f64; 2], amplitude: [f64; 3]) -> Result<Self> {
        if !(radii[0] > 0.0 && radii[1] > 0.0) {
            return Err(Error::Domain("bump radii must be positive".into()));
        }
        Ok(Self {
            center,
            radii,
            amplitude,
        })
    }

    pub fn support(&self) -> ([f64; 2], [f64; 2]) {
        (
            [self.center[0] - self.radii[0], self.center[0] + self.radii[0]],
            [self.center[1] - self.radii[1], self.center[1] + self.radii[1]],
        )
    }

    pub fn scalar(&self, y1: f64, y2: f64) -> f64 {
        bump_1d((y1 - self.center[0]) / self.radii[0])[0] * bump_1d((y2 - self.center[1]) / self.radii[1])[0]
    }

    pub fn value(&self, y1: f64, y2: f64) -> [f64; 3] {
        let s = self.scalar(y1, y2);
        self.amplitude.map(|a| a * s)
    }

    pub fn jet(&self, y1: f64, y2: f64) -> DensityJet {
        let a = bump_1d((y1 - self.center[0]) / self.radii[0]);
        let b = bump_1d((y2 - self.center[1]) / self.radii[1]);
        let (k1, k2) = (1.0 / self.radii[0], 1.0 / self.radii[1]);
        let s = a[0] * b[0];
        let s1 = k1 * a[1] * b[0];
        let s2 = k2 * a[0] * b[1];
        let s11 = k1 * k1 * a[2] * b[0];
        let s12 = k1 * k2 * a[1] * b[1];
        let s22 = k2 * k2 * a[0] * b[2];
        let amp = self.amplitude;
        DensityJet {
            g: amp.map(|c| c * s),
            d: [amp.map(|c| c * s1), amp.map(|c| c * s2)],
            dd: [[amp.map(|c| c * s11), amp.map(|c| c * s12)], [amp.map(|c| c * s12), amp.map(|c| c * s22)]],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_differences() {
        let b = BumpDensity::new([0.1, -0.2], [0.5, 0.4], [1.0, -2.0, 0.5]).unwrap();
        let h = 1e-5;
        let (y1, y2) = (0.3, -0.05);
        let j = b.jet(y1, y2);
        for c in 0..3 {
            let fd1 = (b.value(y1 + h, y2)[c] - b.value(y1 - h, y2)[c]) / (2.0 * h);
            let fd2 = (b.value(y1, y2 + h)[c] - b.value(y1, y2 - h)[c]) / (2.0 * h);
            assert!((j.d[0][c] - fd1).abs() < 1e-7);
            assert!((j.d[1][c] - fd2).abs() < 1e-7);
            let fd12 = (b.jet(y1, y2 + h).d[0][c] - b.jet(y1, y2 - h).d[0][c]) / (2.0 * h);
            let fd11 = (b.jet(y1 + h, y2).d[0][c] - b.jet(y1 - h, y2).d[0][c]) / (2.0 * h);
            assert!((j.dd[0][1][c] - fd12).abs() < 1e-6);
            assert!((j.dd[0][0][c] - fd11).abs() < 1e-6);
        }
    }

    #[test]
    fn support_and_peak() {
        let b = BumpDensity::new([0.0, 0.0], [0.5, 0.5], [2.0, 0.0, 0.0]).unwrap();
        assert_eq!(b.value(0.0, 0.0), [2.0, 0.0, 0.0]);
        assert_eq!(b.value(0.5, 0.1), [0.0; 3]);
        assert_eq!(b.value(0.2, -0.7), [0.0; 3]);
    }
}
