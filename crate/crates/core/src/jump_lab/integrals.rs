//! Polar limits `lim_{x3→0⁺} ∫_0^{2π} ∫_0^R f(ρ, θ, x3) dρ dθ` used to
//! derive the jump relations.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::forward_op::composite_gauss;

/// Which part of the angular factor multiplies the radial profile.
#[derive(Debug, Clone, Copy)]
enum Angle {
    One,
    Cos2,
    Sin2,
    SinCos,
    Cos,
    Sin,
    /// `cos θ sin θ` arising from `y1 y2 = ρ² cos θ sin θ`.
    CrossY,
    /// The θ integral is omitted: a purely radial limit.
    Radial,
}

impl Angle {
    fn weight(self, t: f64) -> f64 {
        match self {
            Angle::One | Angle::Radial => 1.0,
            Angle::Cos2 => t.cos().powi(2),
            Angle::Sin2 => t.sin().powi(2),
            Angle::SinCos | Angle::CrossY => t.sin() * t.cos(),
            Angle::Cos => t.cos(),
            Angle::Sin => t.sin(),
        }
    }
}

/// `x3^a ρ^b / (x3² + ρ²)^{c/2}` times an angular factor.
#[derive(Debug, Clone, Copy)]
struct Term {
    a: i32,
    b: i32,
    c: i32,
    angle: Angle,
}

fn t(a: i32, b: i32, c: i32, angle: Angle) -> Term {
    Term { a, b, c, angle }
}

/// One table row: several terms that share a target; the row value is the
/// term farthest from the target.
struct Row {
    name: &'static str,
    target: f64,
    terms: Vec<Term>,
}

fn rows() -> Vec<Row> {
    use Angle::*;
    vec![
        Row { name: "x3^3 rho / r^5", target: 2.0 * PI / 3.0, terms: vec![t(3, 1, 5, One)] },
        Row { name: "x3 rho^3 cos^2 / r^5", target: 2.0 * PI / 3.0, terms: vec![t(1, 3, 5, Cos2)] },
        Row { name: "x3 rho^3 sin^2 / r^5", target: 2.0 * PI / 3.0, terms: vec![t(1, 3, 5, Sin2)] },
        Row { name: "x3 rho^3 sin cos / r^5", target: 0.0, terms: vec![t(1, 3, 5, SinCos)] },
        Row { name: "x3^3 rho^2 / r^5", target: 0.0, terms: vec![t(3, 2, 5, One)] },
        Row { name: "x3 rho^4 / r^5", target: 0.0, terms: vec![t(1, 4, 5, One)] },
        Row {
            name: "odd y_j and cross y_j y_k over r^7",
            target: 0.0,
            terms: vec![
                // y_j = ρ cos θ or ρ sin θ, y1 y2 = ρ² sin θ cos θ
                t(1, 4, 7, Cos),
                t(1, 4, 7, Sin),
                t(3, 2, 7, Cos),
                t(3, 2, 7, Sin),
                t(1, 5, 7, CrossY),
                t(3, 3, 7, CrossY),
            ],
        },
        Row { name: "x3 rho^5 cos^2 / r^7", target: 8.0 * PI / 15.0, terms: vec![t(1, 5, 7, Cos2)] },
        Row { name: "x3 rho^5 sin^2 / r^7", target: 8.0 * PI / 15.0, terms: vec![t(1, 5, 7, Sin2)] },
        Row { name: "x3^3 rho^3 cos^2 / r^7", target: 2.0 * PI / 15.0, terms: vec![t(3, 3, 7, Cos2)] },
        Row { name: "x3^3 rho^3 sin^2 / r^7", target: 2.0 * PI / 15.0, terms: vec![t(3, 3, 7, Sin2)] },
        Row {
            name: "radial x3 rho^6 and x3^3 rho^4 over r^7",
            target: 0.0,
            terms: vec![t(1, 6, 7, Radial), t(3, 4, 7, Radial)],
        },
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub name: String,
    pub computed: f64,
    pub target: f64,
    pub error: f64,
    /// Spread between extrapolations from the two overlapping triples of `x3` values.
    pub spread: f64,
}

/// Parameters of the limit computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegralSettings {
    pub radius: f64,
    pub x3: Vec<f64>,
    pub theta_points: usize,
    pub gauss_order: usize,
}

impl Default for IntegralSettings {
    fn default() -> Self {
        Self {
            radius: 1.0,
            x3: vec![8e-6, 4e-6, 2e-6, 1e-6],
            theta_points: 64,
            gauss_order: 20,
        }
    }
}

/// `∫_0^R x3^a ρ^b (x3² + ρ²)^{-c/2} dρ` via `ρ = x3 sinh u`.
pub fn radial_integral(a: i32, b: i32, c: i32, x3: f64, radius: f64, order: usize) -> f64 {
    let top = (radius / x3).asinh();
    let panels = (top.ceil() as usize).max(1);
    let breaks: Vec<f64> = (0..=panels).map(|i| top * i as f64 / panels as f64).collect();
    composite_gauss(&breaks, order)
        .iter()
        .map(|&(u, w)| {
            let (s, ch) = (u.sinh(), u.cosh());
            // x3^a (x3 s)^b (x3 ch)^{-c} x3 ch
            let scale = x3.powi(a + b + 1 - c);
            w * scale * s.powi(b) * ch.powi(1 - c)
        })
        .sum()
}

fn angular_integral(angle: Angle, n: usize) -> f64 {
    if let Angle::Radial = angle {
        return 1.0;
    }
    let h = 2.0 * PI / n as f64;
    (0..n).map(|k| angle.weight(k as f64 * h)).sum::<f64>() * h
}

fn term_value(term: &Term, x3: f64, s: &IntegralSettings) -> f64 {
    angular_integral(term.angle, s.theta_points) * radial_integral(term.a, term.b, term.c, x3, s.radius, s.gauss_order)
}

/// Fits `F(x3) = L + β x3 + γ x3 ln x3` through three samples and returns `L`.
pub fn extrapolate_log(x: &[f64], f: &[f64]) -> f64 {
    let n = x.len();
    let m = DMatrix::from_fn(n, 3, |r, c| match c {
        0 => 1.0,
        1 => x[r],
        _ => x[r] * x[r].ln(),
    });
    let rhs = DVector::from_column_slice(f);
    let sol = m.svd(true, true).solve(&rhs, 0.0).expect("svd solve");
    sol[0]
}

/// The twelve polar limits with their targets.
pub fn integral_identities(settings: &IntegralSettings) -> Vec<IdentityRow> {
    let xs = &settings.x3;
    assert!(xs.len() >= 4, "need at least four x3 values");
    rows()
        .into_iter()
        .map(|row| {
            let mut worst: Option<(f64, f64)> = None;
            for term in &row.terms {
                let vals: Vec<f64> = xs.iter().map(|&x| term_value(term, x, settings)).collect();
                let k = xs.len();
                let a = extrapolate_log(&xs[k - 4..k - 1], &vals[k - 4..k - 1]);
                let b = extrapolate_log(&xs[k - 3..], &vals[k - 3..]);
                let dev = (b - row.target).abs();
                if worst.is_none_or(|(w, _)| dev > (w - row.target).abs()) {
                    worst = Some((b, (b - a).abs()));
                }
            }
            let (computed, spread) = worst.expect("row has terms");
            IdentityRow {
                name: row.name.to_string(),
                computed,
                target: row.target,
                error: (computed - row.target).abs(),
                spread,
            }
        })
        .collect()
}

/// `∫_0^R x3³ ρ (x3² + ρ²)^{-5/2} dρ` in closed form.
pub fn int1_closed_form(x3: f64, radius: f64) -> f64 {
    (1.0 - x3.powi(3) / (radius * radius + x3 * x3).powf(1.5)) / 3.0
}
