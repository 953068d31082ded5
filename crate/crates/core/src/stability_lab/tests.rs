use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fault_model::{gradient_slip, AdmissibleSet, BasisFamily, GridRule, SlipBasis};
use crate::forward_op::Truncation;

fn setup() -> ProblemSetup {
    let grid = GridSpec {
        x1: [-3.0, 3.0],
        x2: [-3.0, 3.0],
        n1: 9,
        n2: 9,
        rule: GridRule::Simpson,
    };
    ProblemSetup::new(LameParams::default(), grid, QuadSpec { q1: 12, q2: 12 }).unwrap()
}

fn basis(family: BasisFamily) -> SlipBasis {
    SlipBasis::new(family, 3, 3, Rect::default()).unwrap()
}

fn generic_slip(family: BasisFamily) -> SlipField {
    let g1 = vec![1.0, 0.3, -0.2, 0.1, 0.25, 0.0, -0.1, 0.05, 0.2];
    let g2 = vec![-0.4, 0.2, 0.1, 0.6, -0.15, 0.3, 0.0, 0.1, -0.05];
    SlipField::free(basis(family), g1, g2).unwrap()
}

fn one_directional() -> SlipField {
    let u = vec![1.0, 0.2, -0.3, 0.1, 0.4, 0.0, 0.2, -0.1, 0.05];
    SlipField::one_directional(basis(BasisFamily::Lobatto), u, [0.8, 0.6]).unwrap()
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(7)
}

#[test]
fn line_fit_recovers_line() {
    let t = [0.0, 1.0, 2.0, 3.0];
    let y = [1.0, 3.0, 5.0, 7.0];
    let f = LineFit::fit("x", &t, &y);
    assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
    assert!((f.r_squared - 1.0).abs() < 1e-14);
}

#[test]
fn coefficient_identity_holds() {
    let mut r = rng();
    for _ in 0..100 {
        let p = LameParams::new(r.random_range(0.01..100.0), r.random_range(0.01..100.0)).unwrap();
        assert!(coefficient_identity_residual(&p) <= 1e-12);
    }
}

fn sample_points(r: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 2]> {
    (0..n).map(|_| [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect()
}

#[test]
fn divergence_identity_on_random_quartics() {
    let mut r = rng();
    for _ in 0..20 {
        let p = LameParams::new(r.random_range(0.1..10.0), r.random_range(0.1..10.0)).unwrap();
        let f = AffineFunction::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let phis: Vec<Quartic> = (0..3).map(|_| Quartic::random(&mut r)).collect();
        let pts = sample_points(&mut r, 20);
        let c = divergence_identity_check(&p, &f, &phis, &pts);
        assert!(c.max_relative_residual <= 1e-8, "{c:?}");
        assert_eq!(c.evaluated + c.skipped, 60);
    }
}

#[test]
fn divergence_identity_square_case_by_hand() {
    // λ = 2μ gives exponent 2: div(f² ∇φ) = f² Δφ + 2 f ∇f·∇φ
    let p = LameParams::new(2.0, 1.0).unwrap();
    let f = AffineFunction::new(0.5, -1.0, 0.25);
    let mut c = [[0.0; 5]; 5];
    c[2][0] = 1.0; // y1²
    c[1][1] = 3.0; // 3 y1 y2
    let q = Quartic { c };
    let (y1, y2) = (0.3, -0.2);
    let fv = f.eval(y1, y2);
    let grad = [2.0 * y1 + 3.0 * y2, 3.0 * y1];
    let expected = fv * fv * 2.0 + 2.0 * fv * (0.5 * grad[0] - grad[1]);
    let check = divergence_identity_check(&p, &f, &[q], &[[y1, y2]]);
    assert!(check.max_relative_residual < 1e-12);
    // the lhs itself matches the expansion
    let lhs = {
        use crate::kernels::scalar::{Dual, Scalar};
        let mut s = 0.0;
        for k in 0..2 {
            let d1 = Dual::new(y1, if k == 0 { 1.0 } else { 0.0 });
            let d2 = Dual::new(y2, if k == 1 { 1.0 } else { 0.0 });
            let fd = d1.scale(0.5) + d2.scale(-1.0) + Dual::new_const(0.25);
            s += (fd * fd * q.partial(k).eval(d1, d2)).eps;
        }
        s
    };
    assert!((lhs - expected).abs() < 1e-14);
}

#[test]
fn divergence_identity_constant_phi_and_zero_set() {
    let p = LameParams::default();
    let f = AffineFunction::new(1.0, 0.0, 0.0);
    let c = divergence_identity_check(&p, &f, &[Quartic::constant(3.0)], &[[0.5, 0.1], [0.0, 0.3]]);
    assert_eq!(c.max_relative_residual, 0.0);
    assert_eq!(c.skipped, 1);
}

#[test]
fn transport_matches_dense_svd() {
    let f = AffineFunction::new(0.7, -0.2, 0.4);
    let m = transport_operator(&f, [0.6, 0.8], 0.3, &Rect::default(), 8).unwrap();
    let dense = nalgebra::DMatrix::from(&m);
    let smin = dense.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
    let it = transport_triviality(&f, [0.6, 0.8], 0.3, &Rect::default(), 8).unwrap();
    assert!(it.converged);
    assert!((it.sigma_min - smin).abs() <= 1e-8 * smin, "{} vs {}", it.sigma_min, smin);
}

#[test]
fn transport_zero_vector_is_trivial_solution() {
    let m = transport_operator(&AffineFunction::new(0.0, 0.0, 1.0), [1.0, 0.0], 1.0, &Rect::default(), 6).unwrap();
    let dense = nalgebra::DMatrix::from(&m);
    assert_eq!((dense * nalgebra::DVector::zeros(36)).norm(), 0.0);
}

#[test]
fn transport_rejects_zero_direction() {
    assert!(transport_triviality(&AffineFunction::new(0.0, 0.0, 1.0), [0.0, 0.0], 1.0, &Rect::default(), 8).is_err());
}

#[test]
fn transport_regimes_stay_positive() {
    let r = Rect::default();
    let one = AffineFunction::new(0.0, 0.0, 1.0);
    let a = transport_triviality(&one, [1.0, 0.0], 1.0, &r, 32).unwrap();
    let b = transport_triviality(&one, [1.0, 0.0], 1.0, &r, 64).unwrap();
    assert!(a.sigma_min > 0.1 && b.sigma_min / a.sigma_min >= 0.5);
    let y1 = AffineFunction::new(1.0, 0.0, 0.0);
    let c = transport_triviality(&y1, [1.0, 0.0], 0.0, &r, 32).unwrap();
    let d = transport_triviality(&y1, [1.0, 0.0], 0.0, &r, 64).unwrap();
    assert!(c.sigma_min > 0.0 && d.sigma_min / c.sigma_min >= 0.5, "{c:?} {d:?}");
}

#[test]
fn normal_jump_residual_properties() {
    let p = LameParams::default();
    let f = AffineFunction::new(1.0, 0.0, 0.0);
    let zero = SlipField::zero(basis(BasisFamily::Sine));
    assert_eq!(normal_jump_equation_residual(&p, &zero, &f, 11).max_abs, 0.0);
    let mut g1 = vec![0.0; 9];
    g1[0] = 1.0;
    let h = SlipField::free(basis(BasisFamily::Sine), g1, vec![0.0; 9]).unwrap();
    let res = normal_jump_equation_residual(&p, &h, &f, 21);
    assert!(res.max_abs > 1e-2 * res.slip_sup);
    let twice = normal_jump_equation_residual(&p, &h.scaled(2.0), &f, 21);
    for (a, b) in res.values.iter().zip(&twice.values) {
        assert!((2.0 * a - b).abs() < 1e-14);
    }
    let rem = remaining_system_residual(&h, &f, 0.3, 1.1, 0.2, 0.1, 0.2);
    let rem2 = remaining_system_residual(&h.scaled(2.0), &f, 0.3, 1.1, 0.2, 0.1, 0.2);
    assert!((2.0 * rem[0] - rem2[0]).abs() < 1e-14 && (2.0 * rem[1] - rem2[1]).abs() < 1e-14);
}

#[test]
fn rank_scan_flags_zero_slip() {
    let s = setup();
    let res = rank_scan(&s, &AdmissibleSet::default(), &SlipField::zero(basis(BasisFamily::Sine)), 3, &[], &mut rng()).unwrap();
    assert_eq!(res.summary.flags, 3);
    assert!(res.rows.iter().all(|r| r.metric == 0.0));
}

#[test]
fn rank_scan_full_rank_under_each_condition() {
    let s = setup();
    let tilted = AdmissibleSet {
        exclude_horizontal: true,
        ..AdmissibleSet::default()
    };
    let h = generic_slip(BasisFamily::Sine);
    check_condition(StabilityCondition::NoHorizontal, &tilted, &h).unwrap();
    let r1 = rank_scan(&s, &tilted, &h, 4, &[], &mut rng()).unwrap();
    assert_eq!(r1.summary.flags, 0);

    let od = one_directional();
    check_condition(StabilityCondition::OneDirectional, &AdmissibleSet::default(), &od).unwrap();
    let r2 = rank_scan(&s, &AdmissibleSet::default(), &od, 3, &[[0.0, 0.0, -2.0]], &mut rng()).unwrap();
    assert_eq!(r2.summary.flags, 0);

    let smooth = generic_slip(BasisFamily::Clamped);
    check_condition(StabilityCondition::H2Slip, &AdmissibleSet::default(), &smooth).unwrap();
    let r3 = rank_scan(&s, &AdmissibleSet::default(), &smooth, 2, &[[0.0, 0.0, -2.0], [0.0, 0.0, -1.6]], &mut rng()).unwrap();
    assert_eq!(r3.summary.flags, 0);
}

#[test]
fn conditions_reject_mismatches() {
    let h = generic_slip(BasisFamily::Sine);
    assert!(check_condition(StabilityCondition::NoHorizontal, &AdmissibleSet::default(), &h).is_err());
    assert!(check_condition(StabilityCondition::OneDirectional, &AdmissibleSet::default(), &h).is_err());
    assert!(check_condition(StabilityCondition::H2Slip, &AdmissibleSet::default(), &h).is_err());
}

#[test]
fn lipschitz_near_pairs_follow_jacobian() {
    let s = setup();
    let opts = LipschitzOptions {
        pairs: 6,
        near_points: 3,
        ..LipschitzOptions::default()
    };
    let h = generic_slip(BasisFamily::Sine);
    let res = lipschitz_scan(&s, &AdmissibleSet::default(), &h, &opts, &mut rng()).unwrap();
    assert_eq!(res.rows.len(), 12);
    assert!(res.summary.min_ratio.unwrap() > 0.0);
    assert_eq!(res.summary.flags, 0, "{:?}", res.summary.stats);
    assert!(res.rows.iter().all(|r| r.metric >= 0.0));

    let scaled = lipschitz_scan(&s, &AdmissibleSet::default(), &h.scaled(3.0), &opts, &mut rng()).unwrap();
    for (a, b) in res.rows.iter().zip(&scaled.rows) {
        assert!((3.0 * a.metric - b.metric).abs() <= 1e-9 * b.metric);
    }
}

#[test]
fn lipschitz_rejects_zero_slip_and_bad_box() {
    let s = setup();
    let zero = SlipField::zero(basis(BasisFamily::Sine));
    assert!(lipschitz_scan(&s, &AdmissibleSet::default(), &zero, &LipschitzOptions::default(), &mut rng()).is_err());
    let shallow = AdmissibleSet {
        d: [-1.0, -0.5],
        ..AdmissibleSet::default()
    };
    let h = generic_slip(BasisFamily::Sine);
    assert!(lipschitz_scan(&s, &shallow, &h, &LipschitzOptions::default(), &mut rng()).is_err());
}

fn m0() -> FaultGeometry {
    FaultGeometry::from_params([0.15, -0.1, -2.0], Rect::default(), 0.5).unwrap()
}

const DIRECTIONS: [[f64; 3]; 4] = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, -1.0, 1.0]];

#[test]
fn residual_growth_is_linear_for_constrained_slips() {
    let s = setup();
    let steps = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1];
    let mut potential = vec![0.0; 9];
    potential[0] = 1.0;
    let grad = gradient_slip(basis(BasisFamily::Lobatto), potential).unwrap();
    for h0 in [one_directional(), grad] {
        let res = residual_growth(&s, &m0(), &h0, &DIRECTIONS, &steps, Truncation::default()).unwrap();
        assert!(res.summary.stats["r0_relative"] <= 1e-8, "{:?}", res.summary.stats);
        assert_eq!(res.summary.flags, 0);
        for f in &res.summary.fits {
            assert!(f.slope > 0.0 && f.r_squared >= 0.99, "{f:?}");
        }
        assert!(res.summary.passed);
    }
}

#[test]
fn residual_growth_rejects_bad_steps() {
    let s = setup();
    assert!(residual_growth(&s, &m0(), &one_directional(), &DIRECTIONS, &[0.0], Truncation::default()).is_err());
    assert!(residual_growth(&s, &m0(), &one_directional(), &[[0.0; 3]], &[1e-2], Truncation::default()).is_err());
}

#[test]
fn projector_distance_is_lipschitz() {
    let s = setup();
    let b = basis(BasisFamily::Lobatto);
    let res = projector_lipschitz(&s, &m0(), &b, [1.0, 0.5, -0.5], &[0.0, 1e-3, 1e-2, 1e-1], 18).unwrap();
    assert_eq!(res.rows[0].metric, 0.0);
    assert_eq!(res.summary.flags, 0);
    let lo = res.summary.stats["min_ratio_over_t"];
    let hi = res.summary.stats["max_ratio_over_t"];
    assert!(lo > 0.0 && hi / lo < 10.0, "{lo} {hi}");
}

#[test]
fn projector_requires_gap() {
    let s = setup();
    let b = basis(BasisFamily::Lobatto);
    let err = projector_lipschitz(&s, &m0(), &b, [1.0, 0.0, 0.0], &[1e-3], 9).unwrap_err();
    assert!(matches!(err, crate::Error::SpectralGap { .. }), "{err}");
}
