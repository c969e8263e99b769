use std::f64::consts::TAU;

use anosov_core::chart::{finite_difference_jet, FD_STEP, TRANSITION_TOL};
use anosov_core::embedding::{embedded_model, RadiusSchedule};
use anosov_core::model::{DiskLattice, ProfileParams};
use anosov_core::surfaces::half_plane;
use anosov_core::{Atlas, ChartId, ChartKind, ChartPoint, Error, Sym2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{model, random_point};

fn embedded() -> Atlas {
    let p = RadiusSchedule::Quadratic.params(2.0).unwrap();
    embedded_model(
        &DiskLattice::default_two_disk(),
        &p,
        ProfileParams::default(),
    )
    .unwrap()
    .1
}

#[test]
fn metric_examples() {
    let m = model();
    let g = m
        .atlas
        .metric_at(&ChartPoint::new(ChartId::bottom(0), [0.05, 0.5]))
        .unwrap();
    assert_eq!(g, Sym2::IDENTITY);
    for t in [-0.03, 0.2, 0.6, 1.0] {
        let g = m
            .atlas
            .metric_at(&ChartPoint::new(ChartId::tube(0), [t, 2.0]))
            .unwrap();
        let rho = m.profiles[0].radius(t)[0];
        assert_eq!(g, Sym2::diag(1.0, rho * rho));
    }
}

#[test]
fn christoffel_examples() {
    let m = model();
    let c = m
        .atlas
        .christoffel(&ChartPoint::new(ChartId::top(0), [0.0, 0.5]))
        .unwrap();
    assert!(c.gamma.iter().flatten().all(|&x| x == 0.0));
    for t in [0.1, 0.4, 0.657] {
        let c = m
            .atlas
            .christoffel(&ChartPoint::new(ChartId::tube(0), [t, 1.0]))
            .unwrap();
        let [r, r1, _, _] = m.profiles[0].radius(t);
        assert!((c.get(0, 1, 1) + r * r1).abs() < 1e-15);
        assert!((c.get(1, 0, 1) - r1 / r).abs() < 1e-15);
        assert_eq!(c.get(1, 0, 1), c.get(1, 1, 0));
        assert_eq!(c.get(0, 0, 0), 0.0);
        assert_eq!(c.get(0, 0, 1), 0.0);
        assert_eq!(c.get(1, 0, 0), 0.0);
        assert_eq!(c.get(1, 1, 1), 0.0);
    }
    let hp = half_plane();
    let c = hp
        .christoffel(&ChartPoint::new(ChartId::bottom(0), [0.3, 2.5]))
        .unwrap();
    assert!((c.get(0, 0, 1) + 1.0 / 2.5).abs() < 1e-15);
}

#[test]
fn curvature_examples() {
    let m = model();
    assert_eq!(
        m.atlas
            .gaussian_curvature(&ChartPoint::new(ChartId::bottom(0), [0.05, 0.5]))
            .unwrap(),
        0.0
    );
    for t in [0.1, 0.3, 0.5, 0.657, 1.0] {
        let k = m
            .atlas
            .gaussian_curvature(&ChartPoint::new(ChartId::tube(0), [t, 1.0]))
            .unwrap();
        let [r, _, r2, _] = m.profiles[0].radius(t);
        assert!((k + r2 / r).abs() < 1e-12);
    }
}

#[test]
fn domain_and_overlap_errors() {
    let m = model();
    let inside_disk = ChartPoint::new(ChartId::bottom(0), [0.5, 0.5]);
    assert!(matches!(
        m.atlas.metric_at(&inside_disk),
        Err(Error::OutOfDomain { .. })
    ));
    let far = ChartPoint::new(ChartId::tube(1), [5.0, 0.0]);
    assert!(matches!(
        m.atlas.gaussian_curvature(&far),
        Err(Error::OutOfDomain { .. })
    ));
    let open = ChartPoint::new(ChartId::bottom(0), [0.0, 0.5]);
    assert!(matches!(
        m.atlas.transition(&open, [1.0, 0.0]),
        Err(Error::NoOverlap { .. })
    ));
    let waist = ChartPoint::new(ChartId::tube(0), [0.6, 0.0]);
    assert!(matches!(
        m.atlas.transition(&waist, [1.0, 0.0]),
        Err(Error::NoOverlap { .. })
    ));
    assert!(matches!(
        m.atlas
            .metric_at(&ChartPoint::new(ChartId::tube(9), [0.1, 0.0])),
        Err(Error::UnknownChart(_))
    ));
}

#[test]
fn collar_midpoint_maps_to_flat_collar_coordinate() {
    let m = model();
    let c = m.atlas.collar();
    let disk = m.lattice.disks[0];
    let r = disk.radius + 0.5 * c;
    let theta: f64 = 2.2;
    let p = ChartPoint::new(
        ChartId::bottom(0),
        [
            disk.center[0] + r * theta.cos(),
            disk.center[1] + r * theta.sin(),
        ],
    );
    let (q, _) = m.atlas.transition(&p, [1.0, 0.0]).unwrap();
    assert_eq!(q.chart, ChartId::tube(0));
    assert!((q.coords[0] + 0.5 * c).abs() < 1e-12);
    assert!((q.coords[1] - theta).abs() < 1e-12);

    // Same circle on the top plane lands at the far end of the tube.
    let p = ChartPoint::new(ChartId::top(0), p.coords);
    let (q, _) = m.atlas.transition(&p, [1.0, 0.0]).unwrap();
    assert!((q.coords[0] - m.profiles[0].length() - 0.5 * c).abs() < 1e-12);
}

#[test]
fn transitions_round_trip() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let c = m.atlas.collar();
    for link in m.atlas.links() {
        for _ in 0..200 {
            let r = link.attach_radius + rng.gen_range(-c..c);
            let th = rng.gen_range(0.0..TAU);
            let x = [link.center[0] + r * th.cos(), link.center[1] + r * th.sin()];
            let p = ChartPoint::new(link.plane, x);
            let vec = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            // Outer collar halves of neighbouring disks may overlap; any
            // tube is an acceptable target there.
            let (q, w) = m.atlas.transition(&p, vec).unwrap();
            assert_eq!(q.chart.kind, ChartKind::Tube);
            let (back, v) = m.atlas.transition(&q, w).unwrap();
            assert_eq!(back.chart, link.plane);
            let d = m
                .atlas
                .displacement(m.atlas.chart(link.plane).unwrap(), back.coords, x);
            assert!(d[0].hypot(d[1]) < 1e-12, "{d:?}");
            assert!((v[0] - vec[0]).abs() < 1e-10 && (v[1] - vec[1]).abs() < 1e-10);
            // The metric is carried along too.
            let (ga, gb) = (
                m.atlas.metric_at(&p).unwrap(),
                m.atlas.metric_at(&q).unwrap(),
            );
            let (na, nb) = (ga.inner(vec, vec), gb.inner(w, w));
            assert!((na - nb).abs() < TRANSITION_TOL * (1.0 + na));
        }
    }
    let (_, v) = m
        .atlas
        .transition(
            &ChartPoint::new(ChartId::bottom(0), [0.5 + 0.44, 0.5]),
            [1.0, 0.0],
        )
        .and_then(|(q, w)| m.atlas.transition(&q, w))
        .unwrap();
    assert!((v[0] - 1.0).abs() < 1e-10 && v[1].abs() < 1e-10);
}

fn check_overlap_curvature(atlas: &Atlas, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = atlas.collar();
    let links = atlas.links().to_vec();
    for k in 0..1000 {
        let link = &links[k % links.len()];
        let r = link.attach_radius + rng.gen_range(-c..c);
        let th = rng.gen_range(0.0..TAU);
        let p = ChartPoint::new(
            link.plane,
            [link.center[0] + r * th.cos(), link.center[1] + r * th.sin()],
        );
        let (q, _) = atlas.transition(&p, [1.0, 0.0]).unwrap();
        let (ka, kb) = (
            atlas.gaussian_curvature(&p).unwrap(),
            atlas.gaussian_curvature(&q).unwrap(),
        );
        assert!(
            (ka - kb).abs() < 1e-6 * (1.0 + ka.abs()),
            "{p:?}: {ka} vs {kb}"
        );
        let (ga, gb) = (atlas.metric_at(&p).unwrap(), atlas.metric_at(&q).unwrap());
        // Both charts measure the same lengths.
        for v in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
            let (_, w) = atlas.transition(&p, v).unwrap();
            assert!((ga.inner(v, v) - gb.inner(w, w)).abs() < 1e-9);
        }
    }
}

#[test]
fn curvature_agrees_across_overlaps() {
    check_overlap_curvature(&model().atlas, 11);
    check_overlap_curvature(&embedded(), 12);
}

#[test]
fn metrics_are_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for atlas in [model().atlas, embedded()] {
        for chart in atlas.charts().iter().take(6) {
            for _ in 0..10_000 {
                let p = random_point(&atlas, chart.id, &mut rng);
                let g = atlas.metric_at(&p).unwrap();
                assert!(g.eigenvalues().iter().all(|&e| e > 0.0));
            }
        }
    }
}

#[test]
fn christoffel_symbols_are_symmetric() {
    let atlas = embedded();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for chart in atlas.charts().iter().take(4) {
        for _ in 0..200 {
            let p = random_point(&atlas, chart.id, &mut rng);
            let c = atlas.christoffel(&p).unwrap();
            for k in 0..2 {
                assert_eq!(c.get(k, 0, 1), c.get(k, 1, 0));
            }
        }
    }
}

#[test]
fn analytic_jets_match_finite_differences() {
    let atlas = embedded();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ratios = Vec::new();
    for chart in atlas.charts().iter().take(4) {
        for _ in 0..50 {
            let p = random_point(&atlas, chart.id, &mut rng);
            let exact = chart.metric.jet(p.coords);
            let fd = |h| finite_difference_jet(|x| chart.metric.value(x), p.coords, h);
            let (fine, coarse) = (fd(FD_STEP), fd(2.0 * FD_STEP));
            let pairs = |j: &anosov_core::chart::MetricJet| [j.g11, j.g12, j.g22];
            for ((a, f), c) in pairs(&exact).iter().zip(pairs(&fine)).zip(pairs(&coarse)) {
                for i in 0..2 {
                    let (ef, ec) = ((a.g[i] - f.g[i]).abs(), (a.g[i] - c.g[i]).abs());
                    assert!(
                        ef < 1e-6 * (1.0 + a.g[i].abs()),
                        "{p:?} {:?} {:?}",
                        a.g,
                        f.g
                    );
                    if ef > 1e-8 {
                        ratios.push(ec / ef);
                    }
                }
                for i in 0..3 {
                    assert!(
                        (a.h[i] - f.h[i]).abs() < 1e-3 * (1.0 + a.h[i].abs()),
                        "{:?} {:?}",
                        a.h,
                        f.h
                    );
                }
            }
            let (ka, kb) = (exact.brioschi(), fine.brioschi());
            assert!((ka - kb).abs() < 1e-3 * (1.0 + ka.abs()));
        }
    }
    // Doubling the step quadruples the first-derivative error.
    assert!(!ratios.is_empty());
    for r in ratios {
        assert!((3.5..4.5).contains(&r), "{r}");
    }
}

#[test]
fn plane_charts_are_exactly_flat() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for id in [ChartId::bottom(0), ChartId::top(0)] {
        for _ in 0..2000 {
            let p = random_point(&m.atlas, id, &mut rng);
            assert_eq!(m.atlas.gaussian_curvature(&p).unwrap(), 0.0);
        }
    }
    // Tubes never curve positively.
    for chart in m
        .atlas
        .charts()
        .iter()
        .filter(|c| c.id.kind == ChartKind::Tube)
    {
        for _ in 0..2000 {
            let p = random_point(&m.atlas, chart.id, &mut rng);
            assert!(m.atlas.gaussian_curvature(&p).unwrap() <= 1e-10);
        }
    }
}

#[test]
fn attachment_is_smooth_to_second_order() {
    // Across each collar the tube metric must continue the plane metric in
    // polar form: ρ = R ∓ (t − t_attach) with vanishing second derivative.
    let m = model();
    let c = m.params.collar;
    for (profile, disk) in m.profiles.iter().zip(&m.lattice.disks) {
        let len = profile.length();
        for k in 0..=200 {
            let s = -c + 2.0 * c * k as f64 / 200.0;
            let [r, r1, r2, _] = profile.radius(s);
            assert!((r - (disk.radius - s)).abs() < 1e-6);
            assert!((r1 + 1.0).abs() < 1e-6 && r2.abs() < 1e-6);
            let [r, r1, r2, _] = profile.radius(len - s);
            assert!((r - (disk.radius - s)).abs() < 1e-6);
            assert!((r1 - 1.0).abs() < 1e-6 && r2.abs() < 1e-6);
        }
    }
}
