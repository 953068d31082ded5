//! End-to-end acceptance checks, one line per criterion.
//!
//! The report goes straight to stderr, so it shows without `--nocapture`.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use faultstab::cli_io::{run, ExperimentConfig, LipschitzKnobs, RunOptions, Subcommand};
use faultstab::fault_model::{gradient_slip, AdmissibleSet, BasisFamily, BumpDensity, GridSpec, Rect, SlipBasis, SlipField};
use faultstab::forward_op::{jacobian_fd_check, QuadSpec, Truncation};
use faultstab::jump_lab::{integral_identities, jump_suite, IntegralSettings, PotentialQuadrature, PotentialVariant, DEFAULT_H};
use faultstab::kernels::{free_space_kernel, halfspace_kernel, halfspace_kernel_dy3, kelvin_tensor, Direction3, LameParams, Point3};
use faultstab::numdiff::{navier_residual, surface_traction};
use faultstab::stability_lab::{
    check_condition, coefficient_identity_residual, divergence_identity_check, lipschitz_scan, rank_scan,
    residual_growth, transport_triviality, AffineFunction, LipschitzOptions, ProblemSetup, Quartic,
    StabilityCondition,
};

type Criterion = (&'static str, fn() -> Verdict, Option<Duration>);
type RankCase<'a> = (&'a str, StabilityCondition, &'a AdmissibleSet, &'a SlipField, &'a [[f64; 3]]);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn full_setup() -> ProblemSetup {
    ProblemSetup::new(LameParams::default(), GridSpec::default(), QuadSpec::default()).unwrap()
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

fn integral_limits() -> Verdict {
    let rows = integral_identities(&IntegralSettings::default());
    let expected = [
        2.0 * PI / 3.0,
        2.0 * PI / 3.0,
        2.0 * PI / 3.0,
        0.0,
        0.0,
        0.0,
        0.0,
        8.0 * PI / 15.0,
        8.0 * PI / 15.0,
        2.0 * PI / 15.0,
        2.0 * PI / 15.0,
        0.0,
    ];
    let targets_ok = rows.len() == 12 && rows.iter().zip(expected).all(|(r, e)| (r.target - e).abs() < 1e-15);
    let worst = rows.iter().map(|r| (r.computed - r.target).abs()).fold(0.0, f64::max);
    verdict(targets_ok && worst <= 1e-6, format!("{} limits, max |error| {worst:.2e} (tol 1e-6)", rows.len()))
}

fn jump_relations() -> Verdict {
    let lame = LameParams::new(1.0, 1.0).unwrap();
    let general = BumpDensity::new([0.0, 0.0], [2.0, 2.0], [0.7, -0.4, 0.5]).unwrap();
    let tangential = BumpDensity::new([0.0, 0.0], [2.0, 2.0], [0.7, -0.4, 0.0]).unwrap();
    let q = PotentialQuadrature::default();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut factor_err: f64 = 0.0;
    for pt in [[0.2, 0.12], [0.68, -0.48], [1.44, 0.8]] {
        let a = jump_suite(&lame, &general, pt, &DEFAULT_H, &q).unwrap();
        let b = jump_suite(&lame, &tangential, pt, &DEFAULT_H, &q).unwrap();
        for (g, t) in a.into_iter().zip(b) {
            let r = if g.variant.tangential_only() { t } else { g };
            worst = worst.max(r.rel_error / r.variant.tolerance());
            if !(r.converged && r.rel_error <= r.variant.tolerance()) {
                failures.push(format!("{}@{:?}: {:.2e}", r.variant.tag(), pt, r.rel_error));
            }
            if matches!(r.variant, PotentialVariant::GE1 | PotentialVariant::DY3GE3) {
                let est = r.jump[2] / r.target[2] * lame.jump_ratio();
                factor_err = factor_err.max((est - 1.0 / 3.0).abs());
            }
        }
    }
    let factor_ok = factor_err < 5e-4;
    verdict(
        failures.is_empty() && factor_ok,
        format!(
            "7 relations x 3 points, worst error/tolerance {worst:.2}, 1/3 factor off by {factor_err:.1e}{}",
            if failures.is_empty() { String::new() } else { format!(", failing: {}", failures.join("; ")) }
        ),
    )
}

fn kernel_contracts() -> Verdict {
    let lame = LameParams::new(1.0, 1.0).unwrap();
    let y = Point3::new(0.1, -0.3, -1.0);
    let n = Direction3::new(-0.3, 0.2, 1.0);
    let mut navier: f64 = 0.0;
    for x in [Point3::new(0.6, 0.2, -0.4), Point3::new(-1.0, 0.7, -2.1), Point3::new(0.0, 0.0, -0.3)] {
        for col in 0..3 {
            let k = |p: &Point3| kelvin_tensor(&lame, p, &y).unwrap().column(col).into_owned();
            let h = |p: &Point3| halfspace_kernel(&lame, p, &y, &n).unwrap().column(col).into_owned();
            navier = navier.max(navier_residual(&lame, k, &x, 0.01));
            navier = navier.max(navier_residual(&lame, h, &x, 0.01));
        }
    }
    let mut traction: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let x = Point3::new(-2.0 + i as f64, -2.0 + j as f64, 0.0);
            let sh = halfspace_kernel(&lame, &x, &y, &n).unwrap().norm();
            let sd = halfspace_kernel_dy3(&lame, &x, &y, &n).unwrap().norm();
            for col in 0..3 {
                let h = |p: &Point3| halfspace_kernel(&lame, p, &y, &n).unwrap().column(col).into_owned();
                let d = |p: &Point3| halfspace_kernel_dy3(&lame, p, &y, &n).unwrap().column(col).into_owned();
                traction = traction.max(surface_traction(&lame, h, &x, 1e-3).norm() / sh);
                traction = traction.max(surface_traction(&lame, d, &x, 1e-3).norm() / sd);
            }
        }
    }
    let dir = Direction3::new(0.3, 0.8, -0.5).normalize();
    let g_at = |t: f64| free_space_kernel(&lame, &(y + dir * t), &y, &n).unwrap().norm();
    let h_at = |t: f64| halfspace_kernel(&lame, &Point3::new(t, 0.0, 0.0), &y, &n).unwrap().norm();
    let g_slope = (g_at(20.0) / g_at(10.0)).log2();
    let h_slope = (h_at(400.0) / h_at(200.0)).log2();
    let decay_ok = (g_slope + 2.0).abs() <= 0.1 && (h_slope + 2.0).abs() <= 0.1;
    verdict(
        navier <= 1e-5 && traction <= 1e-6 && decay_ok,
        format!("Navier {navier:.1e} (1e-5), traction {traction:.1e} (1e-6), decay G {g_slope:.3} H {h_slope:.3}"),
    )
}

fn jacobian_consistency() -> Verdict {
    let setup = full_setup();
    let set = AdmissibleSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut min_order) = (0.0_f64, f64::INFINITY);
    for _ in 0..10 {
        let m = set.sample(&mut rng);
        let g1: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g2: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = SlipField::free(basis(BasisFamily::Sine), g1, g2).unwrap();
        let geom = set.geometry(m).unwrap();
        let checks = jacobian_fd_check(&setup.lame, &geom, &setup.grid, &setup.rule(geom.rect).unwrap(), &h, [1e-2, 1e-3]).unwrap();
        for c in checks {
            worst = worst.max(c.errors[1]);
            min_order = min_order.min(c.observed_order);
        }
    }
    verdict(
        worst <= 1e-5 && min_order >= 1.9,
        format!("10 pairs, max relative error at t=1e-3 {worst:.1e} (1e-5), min order {min_order:.3} (1.9)"),
    )
}

fn lipschitz_and_rank() -> Verdict {
    let setup = full_setup();
    let set = AdmissibleSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = generic_slip(BasisFamily::Sine);
    let opts = LipschitzOptions::default();
    let scan = lipschitz_scan(&setup, &set, &h, &opts, &mut rng).unwrap();
    let pairs = scan.rows.iter().filter(|r| r.label == "random").count();
    let min_ratio = scan.summary.min_ratio.unwrap();
    let near_dev = scan.summary.stats["max_near_deviation"];

    let tilted = AdmissibleSet {
        exclude_horizontal: true,
        ..AdmissibleSet::default()
    };
    let horizontal = [[0.0, 0.0, -2.0], [0.0, 0.0, -1.6], [0.0, 0.0, -2.4]];
    let smooth = generic_slip(BasisFamily::Clamped);
    let cases: [RankCase; 3] = [
        ("(i)", StabilityCondition::NoHorizontal, &tilted, &h, &[]),
        ("(ii)", StabilityCondition::OneDirectional, &set, &one_directional(), &horizontal),
        ("(iii)", StabilityCondition::H2Slip, &set, &smooth, &horizontal),
    ];
    let mut flags = Vec::new();
    for (name, cond, s, slip, extra) in cases {
        check_condition(cond, s, slip).unwrap();
        let r = rank_scan(&setup, s, slip, 20, extra, &mut rng).unwrap();
        flags.push(format!("{name} {}", r.summary.flags));
        if r.summary.flags > 0 {
            return verdict(false, format!("rank flags under {name}: {}", r.summary.flags));
        }
    }
    verdict(
        pairs == 200 && set.depth_min == 0.5 && min_ratio > 0.0 && near_dev <= 0.15 && scan.summary.flags == 0,
        format!(
            "{pairs} pairs, min ratio {min_ratio:.3e}, near-pair deviation from sigma_min {:.1}% (15%), rank flags {}",
            100.0 * near_dev,
            flags.join(", ")
        ),
    )
}

fn residual_growth_linear() -> Verdict {
    let setup = full_setup();
    let m0 = faultstab::fault_model::FaultGeometry::from_params([0.15, -0.1, -2.0], Rect::default(), 0.5).unwrap();
    let directions = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, -1.0, 1.0], [-0.5, 0.8, 0.3]];
    let steps = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1];
    let mut potential = vec![0.0; 9];
    potential[0] = 1.0;
    potential[4] = 0.3;
    let grad = gradient_slip(basis(BasisFamily::Lobatto), potential).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, h0) in [("one-directional", one_directional()), ("gradient", grad)] {
        let res = residual_growth(&setup, &m0, &h0, &directions, &steps, Truncation::default()).unwrap();
        let r0 = res.summary.stats["r0_relative"];
        let slope = res.summary.stats["min_slope"];
        let r2 = res.summary.stats["min_r_squared"];
        ok &= r0 <= 1e-8 && slope > 0.0 && r2 >= 0.99;
        parts.push(format!("{name}: r(0)/|Ah| {r0:.1e}, min slope {slope:.2e}, min R2 {r2:.5}"));
    }
    verdict(ok, parts.join("; "))
}

fn transport_witness() -> Verdict {
    let r = Rect::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, f, alpha) in [
        ("alpha=1, f=1", AffineFunction::new(0.0, 0.0, 1.0), 1.0),
        ("alpha=0, f=y1", AffineFunction::new(1.0, 0.0, 0.0), 0.0),
    ] {
        let coarse = transport_triviality(&f, [1.0, 0.0], alpha, &r, 64).unwrap();
        let fine = transport_triviality(&f, [1.0, 0.0], alpha, &r, 128).unwrap();
        let ratio = fine.sigma_min / coarse.sigma_min;
        ok &= coarse.sigma_min > 0.0 && fine.sigma_min > 0.0 && ratio >= 0.5 && coarse.converged && fine.converged;
        parts.push(format!("{name}: sigma {:.3e} -> {:.3e}, ratio {ratio:.3}", coarse.sigma_min, fine.sigma_min));
    }
    verdict(ok, parts.join("; "))
}

fn algebraic_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut coef, mut div) = (0.0_f64, 0.0_f64);
    for _ in 0..100 {
        let p = LameParams::new(rng.random_range(-2.3_f64..2.3).exp(), rng.random_range(-2.3_f64..2.3).exp()).unwrap();
        coef = coef.max(coefficient_identity_residual(&p));
        let f = AffineFunction::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let phis: Vec<Quartic> = (0..3).map(|_| Quartic::random(&mut rng)).collect();
        let pts: Vec<[f64; 2]> = (0..20).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        div = div.max(divergence_identity_check(&p, &f, &phis, &pts).max_relative_residual);
    }
    verdict(
        coef <= 1e-12 && div <= 1e-8,
        format!("100 draws, coefficient {coef:.1e} (1e-12), divergence form {div:.1e} (1e-8)"),
    )
}

fn determinism() -> Verdict {
    let mut cfg = ExperimentConfig {
        grid: GridSpec {
            n1: 9,
            n2: 9,
            ..GridSpec::default()
        },
        quad: QuadSpec { q1: 12, q2: 12 },
        lipschitz: LipschitzKnobs {
            options: LipschitzOptions {
                pairs: 20,
                near_points: 4,
                ..LipschitzOptions::default()
            },
            ..LipschitzKnobs::default()
        },
        seed: 2024,
        ..ExperimentConfig::default()
    };
    cfg.rank.samples = 10;
    let subs = [Subcommand::LipschitzScan, Subcommand::RankScan, Subcommand::ResidualGrowth, Subcommand::IdentityCheck];
    let collect = |threads: usize| -> Vec<Vec<u8>> {
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
            threads: Some(threads),
        };
        subs.iter()
            .flat_map(|&s| run(s, &cfg, &opts).unwrap().csv)
            .map(|p| fs::read(p).unwrap())
            .collect()
    };
    let a = collect(4);
    let b = collect(4);
    let c = collect(1);
    let files = a.len();
    verdict(
        a == b && a == c,
        format!("{files} CSVs from {} scans, identical across reruns and thread counts: {}", subs.len(), a == b && a == c),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 9] = [
        ("integral limits", integral_limits, Some(Duration::from_secs(10))),
        ("jump relations", jump_relations, Some(Duration::from_secs(300))),
        ("kernel contracts", kernel_contracts, None),
        ("jacobian vs differences", jacobian_consistency, Some(Duration::from_secs(120))),
        ("lipschitz and rank scans", lipschitz_and_rank, Some(Duration::from_secs(600))),
        ("residual growth", residual_growth_linear, Some(Duration::from_secs(600))),
        ("transport witness", transport_witness, None),
        ("algebraic identities", algebraic_identities, None),
        ("determinism", determinism, None),
    ];
    let mut failed = Vec::new();
    for (i, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|l| took <= l);
        let ok = v.passed && in_time;
        let budget = limit.map(|l| format!(" / {}s", l.as_secs())).unwrap_or_default();
        writeln!(
            std::io::stderr(),
            "criterion {} {} {name}: {} [{:.1}s{budget}]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64()
        )
        .unwrap();
        if !ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
