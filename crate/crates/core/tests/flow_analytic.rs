use anosov_core::chart::ChartPoint;
use anosov_core::flow::{
    detect_conjugate_point, dphi_perp, integrate_geodesic, jacobi_transport, sasaki_norm, Flow,
    JacobiState, PerpVector, TangentState, RENORM_TOL,
};
use anosov_core::surfaces::{cylinder, flat_torus, hyperbolic_cylinder, sphere_band};
use anosov_core::ChartId;

fn start(chart: ChartId, coords: [f64; 2], v: [f64; 2]) -> TangentState {
    TangentState::new(ChartPoint::new(chart, coords), v)
}

#[test]
fn straight_line_on_flat_chart() {
    let atlas = flat_torus(10.0, 10.0);
    let x = start(ChartId::bottom(0), [0.0, 0.0], [1.0, 0.0]);
    let seg = integrate_geodesic(&atlas, &x, 5.0).unwrap();
    let last = seg.samples.last().unwrap();
    assert!((last.time - 5.0).abs() < 1e-12);
    assert!((last.state.p.coords[0] - 5.0).abs() < 1e-12);
    assert!(last.state.p.coords[1].abs() < 1e-14);
    assert_eq!(last.state.v, [1.0, 0.0]);
    for w in seg.samples.windows(2) {
        assert!(w[1].time > w[0].time);
        assert!(w[1].time - w[0].time <= 0.01 + 1e-15);
    }
}

#[test]
fn flat_jacobi_fields_are_affine() {
    let atlas = flat_torus(1.0, 1.0);
    let x = start(ChartId::bottom(0), [0.3, 0.2], [0.6, 0.8]);
    for (j0, jp0, t) in [(0.0, 1.0, 3.0), (1.5, -0.25, 7.0), (-2.0, 0.5, 0.37)] {
        let r = jacobi_transport(&atlas, &x, t, JacobiState::new(j0, jp0)).unwrap();
        assert!((r.j - (j0 + jp0 * t)).abs() < 1e-8);
        assert!((r.jp - jp0).abs() < 1e-8);
    }
    let m = dphi_perp(&atlas, &x, 2.5).unwrap();
    assert!(m.max_abs_diff(&anosov_core::linalg::Mat2([[1.0, 2.5], [0.0, 1.0]])) < 1e-12);
}

#[test]
fn constant_negative_curvature_fundamental_solution() {
    let atlas = hyperbolic_cylinder();
    let x = start(ChartId::tube(0), [-5.0, 1.0], [1.0, 0.0]);
    for t in [0.5, 1.0, 4.0, 10.0] {
        let m = dphi_perp(&atlas, &x, t).unwrap();
        let (c, s) = (t.cosh(), t.sinh());
        let scale = c.max(1.0);
        assert!((m.0[0][0] - c).abs() < 1e-6 * scale, "t={t}: {:?}", m);
        assert!((m.0[1][0] - s).abs() < 1e-6 * scale);
        assert!((m.0[0][1] - s).abs() < 1e-6 * scale);
        assert!((m.0[1][1] - c).abs() < 1e-6 * scale);
    }
}

#[test]
fn sphere_conjugate_time_is_pi() {
    let atlas = sphere_band();
    let x = start(ChartId::tube(0), [0.0, 0.0], [0.0, 1.0]);
    let r = jacobi_transport(&atlas, &x, std::f64::consts::PI, JacobiState::new(0.0, 1.0)).unwrap();
    assert!(r.j.abs() < 1e-8 && (r.jp + 1.0).abs() < 1e-8);
    let t = detect_conjugate_point(&atlas, &x, 5.0).unwrap().unwrap();
    assert!((t - std::f64::consts::PI).abs() < 1e-6, "{t}");
}

#[test]
fn flat_surfaces_have_no_conjugate_points() {
    let atlas = flat_torus(1.0, 1.0);
    let x = start(ChartId::bottom(0), [0.0, 0.0], [0.6, 0.8]);
    assert_eq!(detect_conjugate_point(&atlas, &x, 50.0).unwrap(), None);
}

#[test]
fn equatorial_circle_of_a_cylinder_stays_put() {
    let atlas = cylinder(0.3);
    let x = start(ChartId::tube(0), [0.0, 0.0], [0.0, 1.0 / 0.3]);
    let seg = integrate_geodesic(&atlas, &x, 10.0).unwrap();
    for s in &seg.samples {
        assert!(s.state.p.coords[0].abs() < 1e-8);
    }
}

#[test]
fn backward_integration_retraces() {
    let atlas = hyperbolic_cylinder();
    let x = start(ChartId::tube(0), [0.2, 1.0], [0.6, 0.8 / 0.2f64.cosh()]);
    let flow = Flow::new(&atlas);
    let fwd = flow.advance(&x, 3.0).unwrap();
    let back = flow.advance(&fwd.state, -3.0).unwrap();
    assert!((back.state.p.coords[0] - 0.2).abs() < 1e-6);
    assert!((back.state.p.coords[1] - 1.0).abs() < 1e-6);
    let prod = back.dphi.mul(&fwd.dphi);
    assert!(prod.max_abs_diff(&anosov_core::linalg::Mat2::IDENTITY) < 1e-6);
    assert!((fwd.state.speed(&atlas).unwrap() - 1.0).abs() < RENORM_TOL);
}

#[test]
fn sasaki_norm_examples() {
    assert_eq!(sasaki_norm(PerpVector::new(1.0, 0.0)), 1.0);
    assert_eq!(sasaki_norm(PerpVector::new(0.0, 0.0)), 0.0);
    assert_eq!(sasaki_norm(PerpVector::new(3.0, 4.0)), 5.0);
}
