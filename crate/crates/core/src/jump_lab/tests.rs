use super::*;

fn bump() -> BumpDensity {
    BumpDensity::new([0.0, 0.0], [2.0, 2.0], [0.7, -0.4, 0.5]).unwrap()
}

fn tangential_bump() -> BumpDensity {
    BumpDensity::new([0.0, 0.0], [2.0, 2.0], [0.7, -0.4, 0.0]).unwrap()
}

// near the center, off center, near the edge of the support
const POINTS: [[f64; 2]; 3] = [[0.2, 0.12], [0.68, -0.48], [1.44, 0.8]];

#[test]
fn graded_breaks_cover_interval() {
    let b = graded_breaks(-0.5, 0.5, 0.1, 0.01);
    assert_eq!(b[0], -0.5);
    assert_eq!(*b.last().unwrap(), 0.5);
    assert!(b.windows(2).all(|w| w[1] > w[0]));
    assert!(b.contains(&0.1));
}

#[test]
fn richardson_removes_linear_and_quadratic_terms() {
    let hs = DEFAULT_H;
    let d: Vec<[f64; 3]> = hs.iter().map(|h| [1.0 + 3.0 * h - 2.0 * h * h, 2.0, -h]).collect();
    let (v, spread, order) = richardson(&d);
    assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12 && v[2].abs() < 1e-12);
    assert!(spread < 1e-12);
    assert!((order - 1.0).abs() < 0.1);
}

#[test]
fn plane_point_rejected() {
    let x = Point3::new(0.0, 0.0, 0.0);
    assert!(layer_potentials(&LameParams::default(), &bump(), &x, &PotentialQuadrature::default()).is_err());
}

#[test]
fn bad_sequences_rejected() {
    let p = LameParams::default();
    assert!(jump_suite(&p, &bump(), [0.0, 0.0], &[0.1, 0.05], &PotentialQuadrature::default()).is_err());
    assert!(jump_suite(&p, &bump(), [0.0, 0.0], &[0.1, 0.06, 0.03], &PotentialQuadrature::default()).is_err());
}

#[test]
fn jumps_match_targets() {
    let p = LameParams::new(1.3, 0.8).unwrap();
    let q = PotentialQuadrature::default();
    for pt in POINTS {
        let general = jump_suite(&p, &bump(), pt, &DEFAULT_H, &q).unwrap();
        let tangential = jump_suite(&p, &tangential_bump(), pt, &DEFAULT_H, &q).unwrap();
        for (v, rep) in PotentialVariant::ALL.iter().zip(general.iter().zip(&tangential)) {
            let rep = if v.tangential_only() { rep.1 } else { rep.0 };
            assert!(norm3(&rep.target) > 1e-3, "{} target vanishes at {:?}", v.tag(), pt);
            assert!(rep.converged, "{} at {:?} flagged", v.tag(), pt);
            assert!(
                rep.rel_error <= v.tolerance(),
                "{} at {:?}: jump {:?} target {:?} rel {:e}",
                v.tag(),
                pt,
                rep.jump,
                rep.target,
                rep.rel_error
            );
        }
    }
}

#[test]
fn halfspace_jump_equals_density() {
    let p = LameParams::default();
    let rep = halfspace_vs_freespace_jump(&p, &bump(), 2.0, [0.05, 0.03], &DEFAULT_H, &PotentialQuadrature::default())
        .unwrap();
    assert!(rep.rel_error <= 1e-3, "{:?} vs {:?}", rep.jump, rep.target);
}

#[test]
fn unit_lame_examples() {
    let p = LameParams::default();
    let b = BumpDensity::new([0.0, 0.0], [2.0, 2.0], [1.0, 0.0, 0.0]).unwrap();
    let q = PotentialQuadrature::default();
    let at_center = jump_suite(&p, &b, [0.0, 0.0], &DEFAULT_H, &q).unwrap();
    let j1 = &at_center[PotentialVariant::GE3.index()];
    assert!((j1.jump[0] - 1.0).abs() <= 1e-3 && j1.jump[1].abs() <= 1e-3 && j1.jump[2].abs() <= 1e-3);
    let j3 = &at_center[PotentialVariant::GE1.index()];
    assert!((j3.jump[2] - 1.0 / 3.0).abs() <= 1e-3 / 3.0, "{:?}", j3.jump);
    assert!(j3.jump[0].abs() <= 1e-6 && j3.jump[1].abs() <= 1e-6);
    let off = jump_suite(&p, &b, [0.7, 0.3], &DEFAULT_H, &q).unwrap();
    let j4 = &off[PotentialVariant::DY3GE3.index()];
    let d1 = b.jet(0.7, 0.3).d[0][0];
    assert!(d1.abs() > 0.1);
    assert!((j4.jump[2] - d1 / 3.0).abs() <= 1e-3 * d1.abs() / 3.0, "{:?} vs {}", j4.jump, d1 / 3.0);
}

#[test]
fn tangential_density_keeps_third_component_zero() {
    let p = LameParams::default();
    let q = PotentialQuadrature::default();
    let reps = jump_suite(&p, &tangential_bump(), [0.68, -0.48], &DEFAULT_H, &q).unwrap();
    for v in [PotentialVariant::GE3, PotentialVariant::DY1GE3] {
        let r = &reps[v.index()];
        assert!(r.jump[2].abs() <= 1e-8 * norm3(&r.jump), "{}: {:?}", v.tag(), r.jump);
    }
}

#[test]
fn zero_density_gives_zero_potential() {
    let p = LameParams::default();
    let b = BumpDensity::new([0.0, 0.0], [1.0, 1.0], [0.0; 3]).unwrap();
    let all = layer_potentials(&p, &b, &Point3::new(0.1, 0.2, 0.3), &PotentialQuadrature::default()).unwrap();
    assert!(all.iter().flatten().all(|&v| v == 0.0));
    let hs = halfspace_vs_freespace_jump(&p, &b, 1.0, [0.1, 0.1], &[0.2, 0.1, 0.05], &PotentialQuadrature::default())
        .unwrap();
    assert_eq!(hs.jump, [0.0; 3]);
}

#[test]
fn potential_is_linear_in_amplitude() {
    let p = LameParams::new(2.0, 0.5).unwrap();
    let q = PotentialQuadrature::default();
    let x = Point3::new(0.3, -0.1, 0.2);
    let b1 = BumpDensity::new([0.0, 0.0], [1.0, 1.0], [1.0, 2.0, -1.0]).unwrap();
    let b2 = BumpDensity::new([0.0, 0.0], [1.0, 1.0], [-2.5, -5.0, 2.5]).unwrap();
    let p1 = layer_potentials(&p, &b1, &x, &q).unwrap();
    let p2 = layer_potentials(&p, &b2, &x, &q).unwrap();
    for (u, v) in p1.iter().flatten().zip(p2.iter().flatten()) {
        assert!((v + 2.5 * u).abs() <= 1e-12 * (1.0 + u.abs()));
    }
}

#[test]
fn far_field_decays_like_inverse_square() {
    let p = LameParams::default();
    let b = BumpDensity::new([0.0, 0.0], [0.5, 0.5], [1.0, 0.0, 0.0]).unwrap();
    let q = PotentialQuadrature::default();
    let at = |t: f64| norm3(&layer_potentials(&p, &b, &Point3::new(0.0, 0.0, t), &q).unwrap()[0]);
    let slope = (at(80.0) / at(40.0)).log2();
    assert!((slope + 2.0).abs() < 0.05, "{slope}");
}

#[test]
fn halfspace_targets_do_not_depend_on_depth() {
    let p = LameParams::default();
    let q = PotentialQuadrature::default();
    let one = halfspace_vs_freespace_jump(&p, &bump(), 1.0, [0.2, 0.12], &DEFAULT_H[..3], &q).unwrap();
    let two = halfspace_vs_freespace_jump(&p, &bump(), 2.0, [0.2, 0.12], &DEFAULT_H, &q).unwrap();
    assert_eq!(one.target, two.target);
    assert!(one.rel_error <= 1e-3 && two.rel_error <= 1e-3, "{} {}", one.rel_error, two.rel_error);
}

#[test]
fn quadrature_is_converged_near_plane() {
    let p = LameParams::default();
    let x = Point3::new(0.68, -0.48, 1e-3);
    let a = layer_potentials(&p, &bump(), &x, &PotentialQuadrature::default()).unwrap();
    let b = layer_potentials(&p, &bump(), &x, &PotentialQuadrature { order: 24, max_panel: 0.0625 }).unwrap();
    for (u, v) in a.iter().zip(&b) {
        assert!(norm3(&sub3(u, v)) <= 1e-8 * norm3(v), "{:?} {:?}", u, v);
    }
}

