use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use anosov_core::cone::{
    cone_angle, delta_theta, delta_theta_with_margin, estimate_splitting, lyapunov_exponent,
    map_cone, nested_angle, orbit_matrices, scan_uniform_invariance, strict_containment, Cone,
    ConeScanConfig, ScanGrid, TimeDirection,
};
use anosov_core::flow::{Flow, PerpVector, TangentState};
use anosov_core::linalg::Mat2;
use anosov_core::model::horizon::HorizonSampling;
use anosov_core::model::{default_tau, DiskLattice, ProfileParams};
use anosov_core::surfaces::{flat_torus, hyperbolic_cylinder};
use anosov_core::{ChartId, ChartPoint};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{model, random_state};

fn tau() -> f64 {
    default_tau(
        &DiskLattice::default_two_disk(),
        &ProfileParams::default(),
        &HorizonSampling::default(),
    )
    .1
}

fn coarse(tau: f64) -> ConeScanConfig {
    ConeScanConfig {
        grid: ScanGrid {
            spatial: [8, 8],
            angular: 16,
        },
        ..ConeScanConfig::new(tau)
    }
}

fn hyperbolic_start() -> TangentState {
    TangentState::new(ChartPoint::new(ChartId::tube(0), [0.0, 1.0]), [0.0, 1.0])
}

fn cone(a: [f64; 2], b: [f64; 2]) -> Cone {
    Cone::new(a.into(), b.into()).unwrap()
}

fn same_cone(a: &Cone, b: &Cone, tol: f64) -> bool {
    let close =
        |p: PerpVector, q: PerpVector| (p.c_h - q.c_h).abs() < tol && (p.c_v - q.c_v).abs() < tol;
    close(a.x, b.x) && close(a.y, b.y)
}

#[test]
fn cone_angle_examples() {
    assert_eq!(cone_angle(&Cone::standard()).unwrap(), FRAC_PI_2);
    let c = cone([1.0, 0.0], [1.0, 1.0]);
    assert!((cone_angle(&c).unwrap() - FRAC_PI_4).abs() < 1e-15);
    assert!(Cone::new(PerpVector::new(1.0, 0.0), PerpVector::new(-1.0, 0.0)).is_err());
}

#[test]
fn map_cone_examples() {
    let c = cone([0.3, 0.7], [-0.2, 1.0]);
    assert!(same_cone(
        &map_cone(&Mat2::IDENTITY, &c).unwrap(),
        &c,
        1e-15
    ));

    let t = 0.7;
    let img = map_cone(&Mat2([[1.0, t], [0.0, 1.0]]), &Cone::standard()).unwrap();
    let n = (1.0 + t * t).sqrt();
    assert!(same_cone(&img, &cone([1.0, 0.0], [t / n, 1.0 / n]), 1e-15));

    let (ch, sh) = (1f64.cosh(), 1f64.sinh());
    let img = map_cone(&Mat2([[ch, sh], [sh, ch]]), &Cone::standard()).unwrap();
    let n = ch.hypot(sh);
    assert!(same_cone(
        &img,
        &cone([ch / n, sh / n], [sh / n, ch / n]),
        1e-15
    ));
    assert!(map_cone(&Mat2([[1.0, 2.0], [2.0, 4.0]]), &Cone::standard()).is_err());
}

#[test]
fn strict_containment_examples() {
    let std = Cone::standard();
    let sheared = map_cone(&Mat2([[1.0, 1.0], [0.0, 1.0]]), &std).unwrap();
    assert_eq!(strict_containment(&sheared, &std), (false, 0.0));
    let (ch, sh) = (1f64.cosh(), 1f64.sinh());
    let (inside, margin) = strict_containment(&cone([ch, sh], [sh, ch]), &std);
    assert!(inside && margin > 0.0);
    assert_eq!(strict_containment(&std, &std), (false, 0.0));
}

#[test]
fn flat_shear_halves_the_cone() {
    let atlas = flat_torus(1.0, 1.0);
    let x = TangentState::new(ChartPoint::new(ChartId::bottom(0), [0.2, 0.3]), [0.6, 0.8]);
    let r = delta_theta(&atlas, &x, &ConeScanConfig::new(1.0)).unwrap();
    assert!((r - 0.5).abs() < 1e-12, "{r}");
}

/// `(j, j′)` fundamental matrix of `j″ = j` over `[0, t]` by classical RK4.
fn rk4_fundamental(t: f64, steps: usize) -> Mat2 {
    let h = t / steps as f64;
    let f = |y: [f64; 2]| [y[1], y[0]];
    let mut cols = [[1.0, 0.0], [0.0, 1.0]];
    for y in cols.iter_mut() {
        for _ in 0..steps {
            let k1 = f(*y);
            let k2 = f([y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = f([y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
    Mat2::from_columns(cols[0], cols[1])
}

#[test]
fn constant_negative_curvature_ratio_matches_oracle() {
    let m = rk4_fundamental(1.0, 10_000);
    let img = map_cone(&m, &Cone::standard()).unwrap();
    let oracle = cone_angle(&img).unwrap() / FRAC_PI_2;
    let r = delta_theta(
        &hyperbolic_cylinder(),
        &hyperbolic_start(),
        &ConeScanConfig::new(1.0),
    )
    .unwrap();
    assert!((r - oracle).abs() < 1e-8, "{r} {oracle}");
    assert!((r - 2f64.tanh().acos() / FRAC_PI_2).abs() < 1e-8, "{r}");
}

#[test]
fn vanishing_time_leaves_the_cone_alone() {
    let r = delta_theta(
        &hyperbolic_cylinder(),
        &hyperbolic_start(),
        &ConeScanConfig::new(1e-7),
    )
    .unwrap();
    assert!((r - 1.0).abs() < 1e-6, "{r}");
}

#[test]
fn flat_torus_scan_fails_everywhere() {
    let scan = scan_uniform_invariance(&flat_torus(1.0, 1.0), &coarse(1.0)).unwrap();
    assert_eq!(scan.report.verdict(), "fail");
    assert_eq!(scan.report.violations.len(), scan.report.n_samples);
    assert!(scan
        .samples
        .iter()
        .all(|s| s.margin <= 0.0 && s.margin.abs() < 1e-12));
}

#[test]
fn short_period_on_the_model_fails() {
    let m = model();
    let scan = scan_uniform_invariance(&m.atlas, &coarse(0.01)).unwrap();
    assert_eq!(scan.report.verdict(), "fail");
    // Samples away from the tubes see an exact shear.
    assert!(scan.samples.iter().any(|s| s.margin.abs() < 1e-12));
}

#[test]
fn coarse_model_scan_passes() {
    let m = model();
    let scan = scan_uniform_invariance(&m.atlas, &coarse(tau())).unwrap();
    let r = &scan.report;
    assert!(
        r.passed(),
        "{:?}",
        &r.violations[..r.violations.len().min(5)]
    );
    assert!(r.max_delta_theta < 1.0 && r.min_edge_margin > 0.0);
    assert_eq!(r.n_samples, scan.samples.len());
}

#[test]
fn hyperbolic_splitting_is_the_eigenbasis() {
    let s = estimate_splitting(&hyperbolic_cylinder(), &hyperbolic_start(), 1.0, 20).unwrap();
    let d = 0.5f64.sqrt();
    assert!(
        (s.eu.c_h - d).abs() < 1e-6 && (s.eu.c_v - d).abs() < 1e-6,
        "{:?}",
        s.eu
    );
    assert!(
        (s.es.c_h - d).abs() < 1e-6 && (s.es.c_v + d).abs() < 1e-6,
        "{:?}",
        s.es
    );
    assert!(s.strictly_nested);
}

#[test]
fn flat_splitting_never_closes() {
    let atlas = flat_torus(1.0, 1.0);
    let x = TangentState::new(ChartPoint::new(ChartId::bottom(0), [0.2, 0.3]), [0.6, 0.8]);
    for (n, tau) in [(5, 1.0), (20, 0.5), (50, 2.0)] {
        let s = estimate_splitting(&atlas, &x, tau, n).unwrap();
        let floor = (1.0 / (n as f64 * tau)).atan();
        assert!(
            s.residual_angle >= floor - 1e-9,
            "{} {floor}",
            s.residual_angle
        );
        assert!(!s.strictly_nested);
    }
}

#[test]
fn model_unstable_direction_is_inside_the_standard_cone() {
    let m = model();
    let tau = tau();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let x = random_state(&m.atlas, &mut rng);
        let s = estimate_splitting(&m.atlas, &x, tau, 50).unwrap();
        assert!(s.strictly_nested);
        // A direction is strictly inside the standard cone iff its
        // components share a sign, and inside the complement iff not.
        assert!(s.eu.c_h * s.eu.c_v > 0.0, "{:?}", s.eu);
        assert!(s.es.c_h * s.es.c_v < 0.0, "{:?}", s.es);
    }
}

#[test]
fn lyapunov_exponent_of_constant_curvature() {
    let l = lyapunov_exponent(&hyperbolic_cylinder(), &hyperbolic_start(), 100.0, 1.0).unwrap();
    assert!((l.lambda - 1.0).abs() < 1e-3, "{}", l.lambda);
    assert!(l.c_bounds[0] <= 1.0 && l.c_bounds[1] >= 1.0 - 1e-9);
}

#[test]
fn lyapunov_exponent_of_flat_torus_vanishes() {
    let atlas = flat_torus(1.0, 1.0);
    let x = TangentState::new(ChartPoint::new(ChartId::bottom(0), [0.2, 0.3]), [0.6, 0.8]);
    let l = lyapunov_exponent(&atlas, &x, 1000.0, 1.0).unwrap();
    assert!(l.lambda.abs() < 1e-3, "{}", l.lambda);
}

#[test]
fn composed_periods_match_one_long_period() {
    let m = model();
    let flow = Flow::new(&m.atlas);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let x = random_state(&m.atlas, &mut rng);
        let (tau, n) = (0.4, 3);
        let mats = orbit_matrices(&flow, &x, -tau, n).unwrap();
        let pieces = nested_angle(&mats, &Cone::standard()).unwrap();
        let whole = nested_angle(
            &orbit_matrices(&flow, &x, -tau * n as f64, 1).unwrap(),
            &Cone::standard(),
        )
        .unwrap();
        assert!((pieces - whole).abs() < 1e-6 * whole, "{pieces} {whole}");
    }
}

#[test]
fn nested_angles_decay_geometrically() {
    let m = model();
    let tau = tau();
    let c = scan_uniform_invariance(&m.atlas, &coarse(tau))
        .unwrap()
        .report
        .max_delta_theta;
    assert!(c < 1.0);
    let flow = Flow::new(&m.atlas);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let x = random_state(&m.atlas, &mut rng);
        let mats = orbit_matrices(&flow, &x, -tau, 20).unwrap();
        for n in 1..=20 {
            // The innermost factor is the one farthest back in time.
            let theta = nested_angle(&mats[..n], &Cone::standard()).unwrap();
            assert!(
                theta <= c.powi(n as i32) * PI,
                "n={n}: {theta} > {}",
                c.powi(n as i32) * PI
            );
        }
    }
}

#[test]
fn cone_area_is_preserved_along_orbits() {
    let m = model();
    let flow = Flow::new(&m.atlas);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (x_edge, y_edge): ([f64; 2], [f64; 2]) = ([1.0, 0.0], [0.0, 1.0]);
    for _ in 0..20 {
        let x = random_state(&m.atlas, &mut rng);
        let alpha = 0.7;
        let mut a = x_edge;
        let mut b = [alpha * y_edge[0], alpha * y_edge[1]];
        let area0 = (a[0] * b[1] - a[1] * b[0]).abs();
        // Carry lengths in logs so the vectors stay unit size.
        let mut log_len = 0.0;
        for mat in orbit_matrices(&flow, &x, 0.5, 4).unwrap() {
            let (pa, pb) = (mat.apply(a), mat.apply(b));
            let (na, nb) = (pa[0].hypot(pa[1]), pb[0].hypot(pb[1]));
            log_len += na.ln() + nb.ln();
            a = [pa[0] / na, pa[1] / na];
            b = [pb[0] / nb, pb[1] / nb];
        }
        let area = log_len.exp() * (a[0] * b[1] - a[1] * b[0]).abs();
        assert!((area - area0).abs() < 1e-6 * area0, "{area} {area0}");
    }
}

#[test]
fn complement_cone_pairs_with_the_standard_cone() {
    let m = model();
    let tau = tau();
    let flow = Flow::new(&m.atlas);
    let fwd = ConeScanConfig::new(tau);
    let bwd = ConeScanConfig {
        cone: Cone::complement(),
        direction: TimeDirection::Backward,
        ..fwd
    };
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..30 {
        let x = random_state(&m.atlas, &mut rng);
        let (_, margin_fwd) = delta_theta_with_margin(&m.atlas, &x, &fwd).unwrap();
        let y = flow.advance(&x, -tau).unwrap().state;
        let (_, margin_bwd) = delta_theta_with_margin(&m.atlas, &y, &bwd).unwrap();
        assert_eq!(
            margin_fwd > 0.0,
            margin_bwd > 0.0,
            "{margin_fwd} {margin_bwd}"
        );
    }
    let a = scan_uniform_invariance(&m.atlas, &coarse(tau)).unwrap();
    let b = scan_uniform_invariance(
        &m.atlas,
        &ConeScanConfig {
            grid: coarse(tau).grid,
            ..bwd
        },
    )
    .unwrap();
    assert_eq!(a.report.passed(), b.report.passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cone_maps_ignore_positive_scaling(
        m in prop::array::uniform4(-3.0f64..3.0),
        e in prop::array::uniform4(-1.0f64..1.0),
        sx in 0.1f64..10.0, sy in 0.1f64..10.0, sa in 0.1f64..10.0,
    ) {
        let a = Mat2([[m[0], m[1]], [m[2], m[3]]]);
        prop_assume!(a.det().abs() > 1e-3);
        let (x, y) = ([e[0], e[1]], [e[2], e[3]]);
        prop_assume!((x[0] * y[1] - x[1] * y[0]).abs() > 1e-3);
        let c = cone(x, y);
        let scaled = cone([sx * x[0], sx * x[1]], [sy * y[0], sy * y[1]]);
        prop_assert!(same_cone(&c, &scaled, 1e-12));
        prop_assert!((cone_angle(&c).unwrap() - cone_angle(&scaled).unwrap()).abs() < 1e-12);
        let img = map_cone(&a, &c).unwrap();
        let img_scaled = map_cone(&a.scale(sa), &scaled).unwrap();
        prop_assert!(same_cone(&img, &img_scaled, 1e-9));
    }
}
