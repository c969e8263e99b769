use anosov_core::model::horizon::{
    finite_horizon_bound, free_flight, rational_corridors, HorizonSampling,
};
use anosov_core::model::{
    assemble_model_atlas, default_tau, gauss_bonnet_integral, quotient_genus, Disk, DiskLattice,
    GaussBonnetGrid, ProfileParams, QuotientSpec,
};
use anosov_core::{ChartId, ChartPoint};

fn quick() -> HorizonSampling {
    HorizonSampling {
        angular: 128,
        offsets: 64,
        random_rays: 2000,
        ..Default::default()
    }
}

#[test]
fn empty_lattice_has_infinite_horizon_along_axes() {
    let r = finite_horizon_bound(&DiskLattice::empty(), &quick());
    assert!(r.violated);
    assert_eq!(r.bound_t, r.t_max);
    let w = r.corridor_witness.unwrap();
    assert_eq!(w.direction, [1, 0]);
}

#[test]
fn single_small_disk_leaves_axis_corridor() {
    let lattice = DiskLattice::new(vec![Disk {
        center: [0.5, 0.5],
        radius: 0.2,
    }])
    .unwrap();
    let r = finite_horizon_bound(&lattice, &quick());
    assert!(r.violated);
    let w = r.corridor_witness.unwrap();
    assert_eq!(w.direction, [1, 0]);
    assert!((w.width - 0.6).abs() < 1e-12);
    // The strip {|v| < 0.3} (mod 1) misses every disk.
    assert!(w.offset.abs() < 1e-12);
    assert_eq!(
        free_flight(&lattice, [0.0, w.offset], [1.0, 0.0], 1e3),
        None
    );
}

#[test]
fn two_equal_disks_on_the_diagonal_leave_a_diagonal_corridor() {
    let lattice = DiskLattice::new(vec![
        Disk {
            center: [0.25, 0.25],
            radius: 0.26,
        },
        Disk {
            center: [0.75, 0.75],
            radius: 0.26,
        },
    ])
    .unwrap();
    let r = finite_horizon_bound(&lattice, &quick());
    assert!(r.violated);
    let w = r.corridor_witness.unwrap();
    assert_eq!(w.direction, [1, 1]);
    let axis: Vec<_> = rational_corridors(&lattice, 20)
        .into_iter()
        .filter(|c| c.direction == [1, 0] || c.direction == [0, 1])
        .collect();
    assert!(axis.is_empty());
}

#[test]
fn default_lattice_cores_have_finite_horizon() {
    let lattice = DiskLattice::default_two_disk();
    let (report, tau) = default_tau(&lattice, &ProfileParams::default(), &quick());
    assert!(!report.violated, "{:?}", report.corridor_witness);
    assert!(report.corridors.is_empty());
    assert!(
        report.bound_t > 0.1 && report.bound_t < 2.0,
        "{}",
        report.bound_t
    );
    assert_eq!(tau, 1.5 * report.bound_t);
}

#[test]
fn free_flight_hits_disk_head_on() {
    let lattice = DiskLattice::default_two_disk();
    let t = free_flight(&lattice, [0.5, 0.02], [0.0, 1.0], 10.0).unwrap();
    // From v = 0.02 up to the big disk's lower edge at 0.07.
    assert!((t - 0.05).abs() < 1e-12);
}

#[test]
fn lattice_validation() {
    assert!(DiskLattice::default_two_disk().validate().is_ok());
    let overlapping = DiskLattice {
        disks: vec![
            Disk {
                center: [0.1, 0.5],
                radius: 0.3,
            },
            Disk {
                center: [0.9, 0.5],
                radius: 0.3,
            },
        ],
    };
    // They meet across the cell boundary.
    assert!(overlapping.validate().is_err());
    let big = DiskLattice {
        disks: vec![Disk {
            center: [0.5, 0.5],
            radius: 0.5,
        }],
    };
    assert!(big.validate().is_err());
}

#[test]
fn model_atlas_layout() {
    let m = assemble_model_atlas(
        &DiskLattice::default_two_disk(),
        Some(QuotientSpec { a: 2, b: 1 }),
    )
    .unwrap();
    assert_eq!(m.atlas.tube_count(), 4);
    assert_eq!(m.atlas.links().len(), 8);
    assert_eq!(m.genus(), 5);
    assert_eq!(quotient_genus(QuotientSpec { a: 3, b: 2 }, 2), 13);
    // Planes are flat.
    let k = m
        .atlas
        .gaussian_curvature(&ChartPoint::new(ChartId::top(0), [1.2, 0.1]))
        .unwrap();
    assert_eq!(k, 0.0);
    // Tube cores are negatively curved.
    let len = m.profiles[0].length();
    let k = m
        .atlas
        .gaussian_curvature(&ChartPoint::new(ChartId::tube(0), [0.5 * len, 1.0]))
        .unwrap();
    assert!(k < 0.0);
}

#[test]
fn gauss_bonnet_on_the_genus_three_quotient() {
    let m = assemble_model_atlas(&DiskLattice::default_two_disk(), None).unwrap();
    let gb = gauss_bonnet_integral(&m.atlas, GaussBonnetGrid::default()).unwrap();
    assert_eq!(gb.genus, 3);
    assert!((gb.expected + 8.0 * std::f64::consts::PI).abs() < 1e-12);
    assert!(gb.relative_error() < 1e-6, "{gb:?}");
}

#[test]
fn gauss_bonnet_flat_torus() {
    let gb = gauss_bonnet_integral(
        &anosov_core::surfaces::flat_torus(1.0, 1.0),
        GaussBonnetGrid::default(),
    )
    .unwrap();
    assert_eq!(gb.genus, 1);
    assert_eq!(gb.integral, 0.0);
}

#[test]
fn default_profiles_are_unit_speed_convex_and_symmetric() {
    let m = assemble_model_atlas(&DiskLattice::default_two_disk(), None).unwrap();
    for (p, disk) in m.profiles.iter().zip(&m.lattice.disks) {
        let l = p.length();
        assert!(p.waist() > 0.0 && p.waist() < disk.radius);
        assert!((p.height(0.0)[0]).abs() < 1e-8);
        assert!((p.height(l)[0] - 1.0).abs() < 1e-8);
        assert_eq!(p.radius(0.0)[1], -1.0);
        assert_eq!(p.radius(l)[1], 1.0);
        for i in 0..=4000 {
            let t = l * i as f64 / 4000.0;
            let r = p.radius(t);
            let w = p.height(t);
            assert!((r[1] * r[1] + w[1] * w[1] - 1.0).abs() < 1e-10, "{t}");
            assert!(r[2] >= -1e-10, "{t}: {}", r[2]);
            assert!((r[0] - p.radius(l - t)[0]).abs() < 1e-10, "{t}");
            assert!(r[0] >= p.waist() - 1e-12);
            assert_eq!(p.curvature(t), -r[2] / r[0]);
        }
    }
}

#[test]
fn profile_height_integrates_its_rate() {
    let m = assemble_model_atlas(&DiskLattice::default_two_disk(), None).unwrap();
    let p = &m.profiles[0];
    let l = p.length();
    // Composite Simpson on w′ reproduces w.
    let n = 20000;
    let h = l / n as f64;
    let mut acc = 0.0;
    let mut prev = 0.0;
    for i in (0..n).step_by(2) {
        let t = i as f64 * h;
        acc += h / 3.0
            * (p.height_rate(t)[0] + 4.0 * p.height_rate(t + h)[0] + p.height_rate(t + 2.0 * h)[0]);
        let w = p.height(t + 2.0 * h)[0];
        assert!((acc - w).abs() < 1e-8, "{t}: {acc} vs {w}");
        assert!(w >= prev);
        prev = w;
    }
}

#[test]
fn enlarging_a_disk_never_lengthens_free_flights() {
    let base = DiskLattice::default_two_disk();
    let sampling = quick();
    let mut last = finite_horizon_bound(&base, &sampling).bound_t;
    for grow in [0.005, 0.01, 0.02] {
        let mut lattice = base.clone();
        lattice.disks[1].radius += grow;
        let t = finite_horizon_bound(&lattice, &sampling).bound_t;
        assert!(t <= last + 1e-12, "{grow}: {t} > {last}");
        last = t;
    }
}

#[test]
fn quotient_genus_counts_one_handle_per_tube() {
    assert_eq!(quotient_genus(QuotientSpec::new(1, 1).unwrap(), 1), 2);
    assert_eq!(quotient_genus(QuotientSpec::new(1, 1).unwrap(), 2), 3);
    assert_eq!(quotient_genus(QuotientSpec::new(2, 3).unwrap(), 2), 13);
    assert!(QuotientSpec::new(0, 1).is_err());
}

#[test]
fn bump_perturbation_curvature_on_the_planes() {
    use std::f64::consts::TAU;
    let m = assemble_model_atlas(&DiskLattice::default_two_disk(), None).unwrap();
    let eps = -0.01;
    let atlas = m.perturbed(eps);
    // Conformal factor f: K = −Δ(ln f) / (2f), Laplacian by central differences.
    let ln_f = |u: f64, v: f64| (1.0 + eps * (TAU * u).cos() * (TAU * v).cos()).ln();
    for p in [[0.5, 0.02], [0.02, 0.5], [0.3, 0.9], [0.75, 0.2]] {
        let h = 1e-4;
        let lap = (ln_f(p[0] + h, p[1])
            + ln_f(p[0] - h, p[1])
            + ln_f(p[0], p[1] + h)
            + ln_f(p[0], p[1] - h)
            - 4.0 * ln_f(p[0], p[1]))
            / (h * h);
        let expected = -lap / (2.0 * ln_f(p[0], p[1]).exp());
        for id in [ChartId::bottom(0), ChartId::top(0)] {
            let k = atlas.gaussian_curvature(&ChartPoint::new(id, p)).unwrap();
            assert!((k - expected).abs() < 1e-6, "{p:?}: {k} vs {expected}");
        }
    }
    // The corridor midpoint (½, 0) turns positively curved for ε < 0.
    let k = atlas
        .gaussian_curvature(&ChartPoint::new(ChartId::bottom(0), [0.5, 0.0]))
        .unwrap();
    assert!(k > 0.0);
}
