use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{norm3, LineFit, ProblemSetup, ScanResult, ScanRow, ScanSummary};
use crate::error::{Error, Result};
use crate::fault_model::{AdmissibleSet, BasisFamily, FaultGeometry, SlipField, SlipKind};
use crate::forward_op::Truncation;

/// Samples with `σ_min < RANK_FLAG_TOL · σ_max` are flagged as rank deficient.
pub const RANK_FLAG_TOL: f64 = 1e-10;

/// Hypotheses under which the Jacobian is expected to have full rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityCondition {
    /// No horizontal planes in the admissible set.
    NoHorizontal,
    /// Slip parallel to a fixed tangential vector.
    OneDirectional,
    /// Slip with square-integrable second derivatives vanishing with its gradient on the edge.
    H2Slip,
}

/// Whether `set` and `h` satisfy the stated condition.
pub fn check_condition(cond: StabilityCondition, set: &AdmissibleSet, h: &SlipField) -> Result<()> {
    let ok = match cond {
        StabilityCondition::NoHorizontal => {
            let spans_zero = set.a[0] <= 0.0 && set.a[1] >= 0.0 && set.b[0] <= 0.0 && set.b[1] >= 0.0;
            (set.exclude_horizontal && set.min_tilt > 0.0) || !spans_zero
        }
        StabilityCondition::OneDirectional => h.is_one_directional(),
        StabilityCondition::H2Slip => h.basis.family == BasisFamily::Clamped && !h.is_gradient(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::config("condition", format!("{cond:?} does not hold for this set and slip")))
    }
}

fn is_zero_slip(h: &SlipField) -> bool {
    let all = |v: &Vec<f64>| v.iter().all(|&c| c == 0.0);
    match &h.kind {
        SlipKind::Free { g1, g2 } => all(g1) && all(g2),
        SlipKind::OneDirectional { u, .. } => all(u),
        SlipKind::Gradient { potential } => all(potential),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LipschitzOptions {
    pub pairs: usize,
    /// Geometries at which near-coincident pairs are formed.
    pub near_points: usize,
    pub near_step: f64,
    /// Allowed relative gap between a near-pair ratio and its Jacobian prediction
    /// along the least-sensitive direction.
    pub near_tolerance: f64,
    /// Same, along a random unit direction.
    pub directional_tolerance: f64,
}

impl Default for LipschitzOptions {
    fn default() -> Self {
        Self {
            pairs: 200,
            near_points: 8,
            near_step: 1e-4,
            near_tolerance: 0.15,
            directional_tolerance: 0.10,
        }
    }
}

fn add(m: [f64; 3], t: f64, v: [f64; 3]) -> [f64; 3] {
    [m[0] + t * v[0], m[1] + t * v[1], m[2] + t * v[2]]
}

fn unit<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let n = norm3(v);
        if n > 0.1 && n <= 1.0 {
            return v.map(|c| c / n);
        }
    }
}

/// A step of length `t` from `m` along `±v` that stays in the set.
fn step_inside(set: &AdmissibleSet, m: [f64; 3], t: f64, v: [f64; 3]) -> Option<[f64; 3]> {
    [add(m, t, v), add(m, -t, v)].into_iter().find(|p| set.contains(*p))
}

/// Ratios `‖φ(m) − φ(m′)‖ / |m − m′|` over random pairs in `set`, plus
/// near-coincident pairs along the least-sensitive Jacobian direction and
/// along random directions.
pub fn lipschitz_scan<R: Rng + ?Sized>(
    setup: &ProblemSetup,
    set: &AdmissibleSet,
    h: &SlipField,
    opts: &LipschitzOptions,
    rng: &mut R,
) -> Result<ScanResult> {
    set.validate()?;
    if is_zero_slip(h) {
        return Err(Error::config("slip", "must be nonzero"));
    }
    if !(opts.near_step > 0.0) {
        return Err(Error::config("lipschitz.near_step", "must be positive"));
    }
    let mut pairs = Vec::with_capacity(opts.pairs);
    while pairs.len() < opts.pairs {
        let (m, m2) = (set.sample(rng), set.sample(rng));
        if m != m2 {
            pairs.push((m, m2));
        }
    }
    let near: Vec<([f64; 3], [f64; 3])> = (0..opts.near_points).map(|_| (set.sample(rng), unit(rng))).collect();

    let random_rows: Vec<ScanRow> = pairs
        .par_iter()
        .map(|&(m, m2)| -> Result<ScanRow> {
            let p1 = setup.phi(&set.geometry(m)?, h)?;
            let p2 = setup.phi(&set.geometry(m2)?, h)?;
            let dist = norm3(add(m, -1.0, m2));
            Ok(ScanRow {
                label: "random".into(),
                m,
                other: m2,
                t: dist,
                metric: setup.distance(&p1, &p2) / dist,
                reference: f64::NAN,
                flag: false,
            })
        })
        .collect::<Result<_>>()?;

    let near_rows: Vec<Vec<ScanRow>> = near
        .par_iter()
        .map(|&(m, q)| -> Result<Vec<ScanRow>> {
            let geom = set.geometry(m)?;
            let base = setup.phi(&geom, h)?;
            let jac = setup.jacobian(&geom, h)?;
            let (sig, vmin) = jac.weighted_svd(&setup.grid);
            let mut out = Vec::new();
            let directional = setup.grid.norm(&jac.directional(q));
            for (label, v, reference, tol) in [
                ("near_min", vmin, sig[2], opts.near_tolerance),
                ("near_random", q, directional, opts.directional_tolerance),
            ] {
                let Some(m2) = step_inside(set, m, opts.near_step, v) else {
                    continue;
                };
                let p2 = setup.phi(&set.geometry(m2)?, h)?;
                let dist = norm3(add(m, -1.0, m2));
                let ratio = setup.distance(&base, &p2) / dist;
                out.push(ScanRow {
                    label: label.into(),
                    m,
                    other: m2,
                    t: dist,
                    metric: ratio,
                    reference,
                    flag: (ratio / reference - 1.0).abs() > tol,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut rows = random_rows;
    rows.extend(near_rows.into_iter().flatten());
    let min_of = |label: &str| {
        rows.iter()
            .filter(|r| r.label == label)
            .map(|r| r.metric)
            .fold(f64::INFINITY, f64::min)
    };
    let max_dev = |label: &str| {
        rows.iter()
            .filter(|r| r.label == label)
            .map(|r| (r.metric / r.reference - 1.0).abs())
            .fold(0.0, f64::max)
    };
    let min_ratio = rows.iter().map(|r| r.metric).fold(f64::INFINITY, f64::min);
    let mut stats = BTreeMap::new();
    stats.insert("min_random_ratio".into(), min_of("random"));
    stats.insert("min_near_ratio".into(), min_of("near_min"));
    stats.insert("max_near_deviation".into(), max_dev("near_min"));
    stats.insert("max_directional_deviation".into(), max_dev("near_random"));
    let flags = rows.iter().filter(|r| r.flag).count();
    Ok(ScanResult {
        kind: "lipschitz".into(),
        summary: ScanSummary {
            min_ratio: Some(min_ratio),
            fits: Vec::new(),
            flags,
            stats,
            passed: min_ratio > 0.0 && flags == 0,
        },
        rows,
    })
}

/// Jacobian singular values at each of `extra` and at `samples` random
/// members of `set`. Rows carry `σ_min` in `metric`, `σ_max` in `reference`,
/// the middle value in `t` and the least-sensitive direction in `other`.
pub fn rank_scan<R: Rng + ?Sized>(
    setup: &ProblemSetup,
    set: &AdmissibleSet,
    h: &SlipField,
    samples: usize,
    extra: &[[f64; 3]],
    rng: &mut R,
) -> Result<ScanResult> {
    set.validate()?;
    let mut ms: Vec<[f64; 3]> = extra.to_vec();
    for m in extra {
        if !set.contains(*m) {
            return Err(Error::Domain(format!("sample {m:?} lies outside the admissible set")));
        }
    }
    ms.extend((0..samples).map(|_| set.sample(rng)));
    let rows: Vec<ScanRow> = ms
        .par_iter()
        .map(|&m| -> Result<ScanRow> {
            let jac = setup.jacobian(&set.geometry(m)?, h)?;
            let (s, v) = jac.weighted_svd(&setup.grid);
            Ok(ScanRow {
                label: "sample".into(),
                m,
                other: v,
                t: s[1],
                metric: s[2],
                reference: s[0],
                flag: !(s[0] > 0.0) || s[2] < RANK_FLAG_TOL * s[0],
            })
        })
        .collect::<Result<_>>()?;
    let flags = rows.iter().filter(|r| r.flag).count();
    let mut stats = BTreeMap::new();
    let min_rel = rows
        .iter()
        .map(|r| if r.reference > 0.0 { r.metric / r.reference } else { 0.0 })
        .fold(f64::INFINITY, f64::min);
    stats.insert("min_relative_sigma".into(), min_rel);
    Ok(ScanResult {
        kind: "rank".into(),
        summary: ScanSummary {
            min_ratio: rows.iter().map(|r| r.metric).reduce(f64::min),
            fits: Vec::new(),
            flags,
            stats,
            passed: flags == 0,
        },
        rows,
    })
}

/// `r(t) = inf_h ‖A_{m0 + t q} h − A_{m0} h0‖` along each direction.
///
/// Rows carry `metric = r(t)` and `reference = ‖A_{m0+tq} h0 − A_{m0} h0‖`,
/// the value at the candidate `h = h0`; a row is flagged when the infimum
/// exceeds it. The infimum runs over the free span of [`SlipField::trial_basis`];
/// `truncation` picks the rank at `m0`, which is then held for every step.
pub fn residual_growth(
    setup: &ProblemSetup,
    m0: &FaultGeometry,
    h0: &SlipField,
    directions: &[[f64; 3]],
    steps: &[f64],
    truncation: Truncation,
) -> Result<ScanResult> {
    if matches!(h0.kind, SlipKind::Free { .. }) {
        log::warn!("residual growth with an unconstrained slip: no growth is guaranteed");
    }
    if steps.is_empty() || steps.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::config("residual.steps", "must be a nonempty list of positive steps"));
    }
    if directions.is_empty() || directions.iter().any(|q| norm3(*q) == 0.0) {
        return Err(Error::config("residual.directions", "must be a nonempty list of nonzero vectors"));
    }
    let base = m0.params();
    let trial = h0.trial_basis();
    let data = setup.phi(m0, h0)?;
    let data_norm = setup.grid.norm(&data);
    let p0 = setup.operator(m0, &trial)?.range_projector(truncation)?;
    let rank = p0.rank();
    let r0 = p0.residual(&data)?;

    let jobs: Vec<(usize, [f64; 3], f64)> = directions
        .iter()
        .enumerate()
        .flat_map(|(i, q)| {
            let n = norm3(*q);
            let u = q.map(|c| c / n);
            steps.iter().map(move |&t| (i, u, t))
        })
        .collect();
    let rows: Vec<ScanRow> = jobs
        .par_iter()
        .map(|&(i, q, t)| -> Result<ScanRow> {
            let geom = m0.with_params(add(base, t, q))?;
            let op = setup.operator(&geom, &trial)?;
            let r = op.range_projector(Truncation::Rank(rank))?.residual(&data)?;
            let moved = setup.phi(&geom, h0)?;
            let bound = setup.distance(&moved, &data);
            Ok(ScanRow {
                label: format!("q{i}"),
                m: geom.params(),
                other: q,
                t,
                metric: r,
                reference: bound,
                flag: r > bound * (1.0 + 1e-10) + 1e-14 * data_norm,
            })
        })
        .collect::<Result<_>>()?;

    let mut fits = Vec::new();
    let mut stats = BTreeMap::new();
    stats.insert("r0".into(), r0);
    stats.insert("data_norm".into(), data_norm);
    stats.insert("r0_relative".into(), r0 / data_norm);
    stats.insert("rank".into(), rank as f64);
    let mut worst_variation: f64 = 1.0;
    for i in 0..directions.len() {
        let label = format!("q{i}");
        let sel: Vec<&ScanRow> = rows.iter().filter(|r| r.label == label).collect();
        let t: Vec<f64> = sel.iter().map(|r| r.t).collect();
        let y: Vec<f64> = sel.iter().map(|r| r.metric).collect();
        fits.push(LineFit::fit(&label, &t, &y));
        let decade: Vec<f64> = sel
            .iter()
            .filter(|r| r.t >= 1e-3 * (1.0 - 1e-12) && r.t <= 1e-2 * (1.0 + 1e-12))
            .map(|r| r.metric / r.t)
            .collect();
        if decade.len() >= 2 {
            let hi = decade.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = decade.iter().copied().fold(f64::INFINITY, f64::min);
            worst_variation = worst_variation.max(hi / lo);
        }
    }
    stats.insert("max_ratio_variation_small_t".into(), worst_variation);
    let min_slope = fits.iter().map(|f| f.slope).fold(f64::INFINITY, f64::min);
    let min_r2 = fits.iter().map(|f| f.r_squared).fold(f64::INFINITY, f64::min);
    stats.insert("min_slope".into(), min_slope);
    stats.insert("min_r_squared".into(), min_r2);
    let flags = rows.iter().filter(|r| r.flag).count();
    let passed = r0 <= 1e-8 * data_norm && min_slope > 0.0 && min_r2 >= 0.99 && flags == 0;
    Ok(ScanResult {
        kind: "residual_growth".into(),
        summary: ScanSummary {
            min_ratio: rows.iter().map(|r| r.metric / r.t).reduce(f64::min),
            fits,
            flags,
            stats,
            passed,
        },
        rows,
    })
}

/// `‖P_{m0 + t q} − P_{m0}‖` for rank-`k` projectors; `metric` is the
/// distance and `reference` its ratio to `t`.
pub fn projector_lipschitz(
    setup: &ProblemSetup,
    m0: &FaultGeometry,
    basis: &crate::fault_model::SlipBasis,
    q: [f64; 3],
    steps: &[f64],
    rank: usize,
) -> Result<ScanResult> {
    const MIN_GAP: f64 = 10.0;
    let n = norm3(q);
    if n == 0.0 {
        return Err(Error::config("projector.direction", "must be nonzero"));
    }
    if steps.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::config("projector.steps", "must be nonnegative"));
    }
    let q = q.map(|c| c / n);
    let p0 = setup.operator(m0, basis)?.range_projector(Truncation::Rank(rank))?;
    let gap = p0.gap();
    if !(gap >= MIN_GAP) {
        return Err(Error::SpectralGap {
            rank,
            gap,
            required: MIN_GAP,
        });
    }
    let base = m0.params();
    let rows: Vec<ScanRow> = steps
        .par_iter()
        .map(|&t| -> Result<ScanRow> {
            let geom = m0.with_params(add(base, t, q))?;
            let dist = if t == 0.0 {
                0.0
            } else {
                let p = setup.operator(&geom, basis)?.range_projector(Truncation::Rank(rank))?;
                p.distance(&p0)?
            };
            Ok(ScanRow {
                label: "step".into(),
                m: geom.params(),
                other: q,
                t,
                metric: dist,
                reference: if t > 0.0 { dist / t } else { f64::NAN },
                flag: dist > std::f64::consts::SQRT_2 + 1e-12,
            })
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = rows.iter().filter(|r| r.t > 0.0).map(|r| r.reference).collect();
    let mut stats = BTreeMap::new();
    stats.insert("gap".into(), gap);
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    stats.insert("min_ratio_over_t".into(), lo);
    stats.insert("max_ratio_over_t".into(), hi);
    let flags = rows.iter().filter(|r| r.flag).count();
    Ok(ScanResult {
        kind: "projector".into(),
        summary: ScanSummary {
            min_ratio: Some(lo),
            fits: Vec::new(),
            flags,
            stats,
            passed: flags == 0 && hi.is_finite(),
        },
        rows,
    })
}
