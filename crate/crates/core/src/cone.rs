//! Cone fields in the perpendicular frame, the angle-contraction ratio of
//! the derivative flow, uniform strict-invariance scans, and estimates of
//! the unstable/stable directions and the Lyapunov exponent.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{Atlas, ChartId, ChartKind, ChartPoint, Domain};
use crate::error::{Error, Result};
use crate::flow::{Flow, FlowOptions, PerpVector, TangentState};
use crate::linalg::{normalize, Mat2};

/// Edges closer than this (in |sin|) are treated as parallel.
const PARALLEL_TOL: f64 = 1e-14;

/// The double sector `{αX + βY : αβ ≥ 0}` spanned by two unit vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub x: PerpVector,
    pub y: PerpVector,
}

impl Cone {
    pub fn new(x: PerpVector, y: PerpVector) -> Result<Self> {
        let (a, b) = (x.as_array(), y.as_array());
        let (na, nb) = (a[0].hypot(a[1]), b[0].hypot(b[1]));
        if !(na > 0.0 && nb > 0.0) || !(na.is_finite() && nb.is_finite()) {
            return Err(Error::DegenerateCone);
        }
        let cone = Self {
            x: PerpVector::new(a[0] / na, a[1] / na),
            y: PerpVector::new(b[0] / nb, b[1] / nb),
        };
        if cross(cone.x.as_array(), cone.y.as_array()).abs() < PARALLEL_TOL {
            return Err(Error::DegenerateCone);
        }
        Ok(cone)
    }

    /// The cone spanned by `ξ_h` and `ξ_v` (`j·j′ ≥ 0`).
    pub fn standard() -> Self {
        Self {
            x: PerpVector::new(1.0, 0.0),
            y: PerpVector::new(0.0, 1.0),
        }
    }

    /// The cone spanned by `ξ_h` and `−ξ_v` (`j·j′ ≤ 0`).
    pub fn complement() -> Self {
        Self {
            x: PerpVector::new(1.0, 0.0),
            y: PerpVector::new(0.0, -1.0),
        }
    }

    pub fn bisector(&self) -> PerpVector {
        PerpVector::new(self.x.c_h + self.y.c_h, self.x.c_v + self.y.c_v).normalized()
    }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn angle_between(a: [f64; 2], b: [f64; 2]) -> f64 {
    cross(a, b).abs().atan2(dot(a, b))
}

/// The opening angle `arccos⟨X, Y⟩ ∈ (0, π)`.
pub fn cone_angle(c: &Cone) -> Result<f64> {
    let (a, b) = (c.x.as_array(), c.y.as_array());
    let s = cross(a, b).abs() / (a[0].hypot(a[1]) * b[0].hypot(b[1]));
    if !(s >= PARALLEL_TOL) {
        return Err(Error::DegenerateCone);
    }
    Ok(angle_between(a, b))
}

/// The cone spanned by the normalized images of the edges.
pub fn map_cone(a: &Mat2, c: &Cone) -> Result<Cone> {
    let d = a.det();
    if d == 0.0 || !d.is_finite() {
        return Err(Error::SingularMatrix(d));
    }
    Cone::new(
        a.apply(c.x.as_array()).into(),
        a.apply(c.y.as_array()).into(),
    )
}

/// Signed angular clearance of the line through `u` from the edges of
/// `outer`: positive strictly inside, zero on an edge, negative outside.
fn clearance(outer: &Cone, u: [f64; 2]) -> f64 {
    let (x, y) = (outer.x.as_array(), outer.y.as_array());
    let s = cross(x, y).signum();
    let opening = angle_between(x, y);
    let phi = (s * cross(x, u)).atan2(dot(x, u)).rem_euclid(PI);
    if phi <= opening {
        phi.min(opening - phi)
    } else {
        -(phi - opening).min(PI - phi)
    }
}

/// Whether both edges of `inner` lie strictly inside `outer`, with the
/// smallest angular clearance (negative when an edge is outside).
pub fn strict_containment(inner: &Cone, outer: &Cone) -> (bool, f64) {
    let (a, b) = (inner.x.as_array(), inner.y.as_array());
    let (ca, cb) = (clearance(outer, a), clearance(outer, b));
    let margin = ca.min(cb);
    if margin <= 0.0 {
        return (false, margin);
    }
    // Both edge lines are inside; the sector between them must be too.
    let (x, y) = (outer.x.as_array(), outer.y.as_array());
    let s = cross(x, y).signum();
    let pa = (s * cross(x, a)).atan2(dot(x, a)).rem_euclid(PI);
    let pb = (s * cross(x, b)).atan2(dot(x, b)).rem_euclid(PI);
    let inner_opening = angle_between(a, b);
    if ((pa - pb).abs() - inner_opening).abs() > 1e-9 {
        return (false, -margin);
    }
    (true, margin)
}

/// Which way the scan pushes cones: forward images of the standard cone,
/// or backward images of the complement cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeDirection {
    #[default]
    Forward,
    Backward,
}

/// Phase-space sampling: a uniform spatial grid per chart and a uniform
/// grid of velocity angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub spatial: [usize; 2],
    pub angular: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            spatial: [32, 32],
            angular: 64,
        }
    }
}

impl ScanGrid {
    pub fn refined(self, factor: usize) -> Self {
        Self {
            spatial: [self.spatial[0] * factor, self.spatial[1] * factor],
            angular: self.angular * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeScanConfig {
    pub tau: f64,
    pub grid: ScanGrid,
    pub cone: Cone,
    pub direction: TimeDirection,
    pub flow: FlowOptions,
}

impl ConeScanConfig {
    pub fn new(tau: f64) -> Self {
        Self {
            tau,
            grid: ScanGrid::default(),
            cone: Cone::standard(),
            direction: TimeDirection::Forward,
            flow: FlowOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if self.grid.spatial.iter().any(|&n| n < 2) || self.grid.angular < 2 {
            return Err(Error::InvalidParameter(
                "scan resolutions must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// The derivative cocycle carrying the cone at `φ^{∓τ}x` to `x`, found by
/// integrating from `x` against the scan direction and inverting
/// (determinant one).
fn pushing_matrix(
    flow: &Flow,
    x: &TangentState,
    tau: f64,
    direction: TimeDirection,
) -> Result<Mat2> {
    let t = match direction {
        TimeDirection::Forward => -tau,
        TimeDirection::Backward => tau,
    };
    let back = flow.advance(x, t)?.dphi;
    back.inverse().ok_or(Error::SingularMatrix(back.det()))
}

/// Image-cone angle at `x` over the host-cone angle.
pub fn delta_theta(atlas: &Atlas, x: &TangentState, cfg: &ConeScanConfig) -> Result<f64> {
    Ok(sample_cone(&Flow::with_options(atlas, cfg.flow), x, cfg)?.0)
}

/// [`delta_theta`] together with the strictness margin of the image cone.
pub fn delta_theta_with_margin(
    atlas: &Atlas,
    x: &TangentState,
    cfg: &ConeScanConfig,
) -> Result<(f64, f64)> {
    sample_cone(&Flow::with_options(atlas, cfg.flow), x, cfg)
}

fn sample_cone(flow: &Flow, x: &TangentState, cfg: &ConeScanConfig) -> Result<(f64, f64)> {
    let m = pushing_matrix(flow, x, cfg.tau, cfg.direction)?;
    let image = map_cone(&m, &cfg.cone)?;
    let ratio = cone_angle(&image)? / cone_angle(&cfg.cone)?;
    let (_, margin) = strict_containment(&image, &cfg.cone);
    Ok((ratio, margin))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub chart: ChartId,
    pub coords: [f64; 2],
    pub angle: f64,
    pub delta_theta: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub chart: ChartId,
    pub coords: [f64; 2],
    pub angle: f64,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeScanReport {
    pub max_delta_theta: f64,
    pub min_edge_margin: f64,
    pub violations: Vec<Violation>,
    pub tau: f64,
    pub n_samples: usize,
}

impl ConeScanReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.max_delta_theta < 1.0
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed() {
            "pass"
        } else {
            "fail"
        }
    }
}

/// Scan output with the per-sample records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeScan {
    pub report: ConeScanReport,
    pub samples: Vec<ScanSample>,
}

/// Grid points of one fundamental domain of the unit tangent bundle.
pub fn scan_points(atlas: &Atlas, grid: &ScanGrid) -> Vec<(ChartPoint, f64)> {
    let mut out = Vec::new();
    for chart in atlas.charts() {
        let (lo, hi) = match (&chart.domain, chart.id.kind) {
            (Domain::Planar { lo, hi, .. }, _) => (*lo, *hi),
            (Domain::Revolution { .. }, ChartKind::Tube) => {
                let len = atlas
                    .links_of(chart.id)
                    .map(|l| l.t_attach)
                    .fold(0.0_f64, f64::max);
                ([0.0, 0.0], [len, TAU])
            }
            (Domain::Revolution { t_lo, t_hi }, _) => ([*t_lo, 0.0], [*t_hi, TAU]),
        };
        let [nx, ny] = grid.spatial;
        for i in 0..nx {
            for j in 0..ny {
                let p = ChartPoint::new(
                    chart.id,
                    [
                        lo[0] + (i as f64 + 0.5) * (hi[0] - lo[0]) / nx as f64,
                        lo[1] + (j as f64 + 0.5) * (hi[1] - lo[1]) / ny as f64,
                    ],
                );
                if !atlas.contains_in(chart, p.coords) {
                    continue;
                }
                for k in 0..grid.angular {
                    out.push((p, k as f64 * TAU / grid.angular as f64));
                }
            }
        }
    }
    out
}

/// Evaluates the angle ratio and strictness margin at every grid sample of
/// one fundamental domain. Samples are independent and evaluated in
/// parallel; the reduction is order-independent.
pub fn scan_uniform_invariance(atlas: &Atlas, cfg: &ConeScanConfig) -> Result<ConeScan> {
    cfg.validate()?;
    if !atlas.is_compact() {
        return Err(Error::InvalidParameter(format!(
            "atlas {} does not cover a compact fundamental domain",
            atlas.label
        )));
    }
    let flow = Flow::with_options(atlas, cfg.flow);
    let points = scan_points(atlas, &cfg.grid);
    let results: Vec<(ScanSample, Option<String>)> = points
        .par_iter()
        .map(|&(p, angle)| {
            let eval =
                TangentState::with_angle(atlas, p, angle).and_then(|x| sample_cone(&flow, &x, cfg));
            let (delta_theta, margin, cause) = match eval {
                Ok((r, m)) if m > 0.0 && r < 1.0 => (r, m, None),
                Ok((r, m)) if m <= 0.0 => {
                    (r, m, Some(format!("edge margin {m:e} is not positive")))
                }
                Ok((r, m)) => (r, m, Some(format!("angle ratio {r} is not below 1"))),
                Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
            };
            let sample = ScanSample {
                chart: p.chart,
                coords: p.coords,
                angle,
                delta_theta,
                margin,
            };
            (sample, cause)
        })
        .collect();

    let mut max_dt = f64::NEG_INFINITY;
    let mut min_margin = f64::INFINITY;
    let mut violations = Vec::new();
    let mut samples = Vec::with_capacity(results.len());
    for (s, cause) in results {
        if s.delta_theta.is_finite() {
            max_dt = max_dt.max(s.delta_theta);
            min_margin = min_margin.min(s.margin);
        }
        if let Some(cause) = cause {
            violations.push(Violation {
                chart: s.chart,
                coords: s.coords,
                angle: s.angle,
                cause,
            });
        }
        samples.push(s);
    }
    Ok(ConeScan {
        report: ConeScanReport {
            max_delta_theta: max_dt,
            min_edge_margin: min_margin,
            violations,
            tau: cfg.tau,
            n_samples: samples.len(),
        },
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplittingEstimate {
    pub x: TangentState,
    pub eu: PerpVector,
    pub es: PerpVector,
    pub n_iterations: usize,
    /// Opening of the nested image of the standard cone at `x`.
    pub residual_angle: f64,
    /// Opening of the nested image of the complement cone at `x`.
    pub residual_angle_stable: f64,
    /// Whether every single-period image was strictly inside its host cone
    /// on both the forward and backward nests.
    pub strictly_nested: bool,
}

/// Cocycle matrices `dφ^{±τ}` along `x, φ^{±τ}x, …` (n chunks).
pub fn orbit_matrices(flow: &Flow, x: &TangentState, step: f64, n: usize) -> Result<Vec<Mat2>> {
    let mut out = Vec::with_capacity(n);
    let mut cur = *x;
    for _ in 0..n {
        let end = flow.advance(&cur, step)?;
        out.push(end.dphi);
        cur = end.state;
    }
    Ok(out)
}

/// Pushes `seed` back to `x` through the inverses of `mats` (innermost
/// last) and returns the normalized image, the nested cone opening, and
/// whether every single-step image was strictly nested.
fn nest(mats: &[Mat2], cone: &Cone) -> Result<(PerpVector, f64, bool)> {
    let mut w = cone.bisector().as_array();
    let (mut a, mut b) = (cone.x.as_array(), cone.y.as_array());
    let mut strict = true;
    for m in mats.iter().rev() {
        let inv = m.inverse().ok_or(Error::SingularMatrix(m.det()))?;
        let img = map_cone(&inv, cone)?;
        strict &= strict_containment(&img, cone).0;
        w = normalize(inv.apply(w));
        a = normalize(inv.apply(a));
        b = normalize(inv.apply(b));
    }
    let sign = if w[0] < 0.0 || (w[0] == 0.0 && w[1] < 0.0) {
        -1.0
    } else {
        1.0
    };
    Ok((
        PerpVector::new(sign * w[0], sign * w[1]),
        angle_between(a, b),
        strict,
    ))
}

/// Unstable direction as the image at `x` of the standard-cone bisector
/// pushed forward from `φ^{−nτ}x`; stable direction likewise from
/// `φ^{nτ}x` with the complement cone.
pub fn estimate_splitting(
    atlas: &Atlas,
    x: &TangentState,
    tau: f64,
    n: usize,
) -> Result<SplittingEstimate> {
    estimate_splitting_with(&Flow::new(atlas), x, tau, n)
}

pub fn estimate_splitting_with(
    flow: &Flow,
    x: &TangentState,
    tau: f64,
    n: usize,
) -> Result<SplittingEstimate> {
    if n == 0 || !(tau > 0.0) {
        return Err(Error::InvalidParameter(
            "splitting needs n ≥ 1 and τ > 0".into(),
        ));
    }
    let back = orbit_matrices(flow, x, -tau, n)?;
    let fwd = orbit_matrices(flow, x, tau, n)?;
    let (eu, ru, su) = nest(&back, &Cone::standard())?;
    let (es, rs, ss) = nest(&fwd, &Cone::complement())?;
    Ok(SplittingEstimate {
        x: *x,
        eu,
        es,
        n_iterations: n,
        residual_angle: ru,
        residual_angle_stable: rs,
        strictly_nested: su && ss,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda: f64,
    /// Minimum and maximum over sampled times `t` of
    /// `‖Dφ^t ξ^u‖ · e^{−λt}`.
    pub c_bounds: [f64; 2],
    pub total_time: f64,
    pub x0: TangentState,
}

/// Growth rate of the estimated unstable vector: seeded by pulling the
/// standard cone back over `2T`, then flowed forward for `T` with
/// renormalization every `τ`.
pub fn lyapunov_exponent(
    atlas: &Atlas,
    x: &TangentState,
    total: f64,
    tau: f64,
) -> Result<LyapunovEstimate> {
    lyapunov_exponent_with(&Flow::new(atlas), x, total, tau)
}

pub fn lyapunov_exponent_with(
    flow: &Flow,
    x: &TangentState,
    total: f64,
    tau: f64,
) -> Result<LyapunovEstimate> {
    if !(tau > 0.0 && total > tau) {
        return Err(Error::InvalidParameter("lyapunov needs T > τ > 0".into()));
    }
    let n = (total / tau).ceil() as usize;
    let back = orbit_matrices(flow, x, -tau, 2 * n)?;
    let (seed, _, _) = nest(&back, &Cone::standard())?;
    let mut w = seed.as_array();
    let mut log_growth = 0.0;
    let mut history = Vec::with_capacity(n);
    let mut cur = *x;
    let mut elapsed = 0.0;
    for k in 0..n {
        let dt = if k + 1 == n { total - elapsed } else { tau };
        let end = flow.advance(&cur, dt)?;
        let v = end.dphi.apply(w);
        let r = v[0].hypot(v[1]);
        log_growth += r.ln();
        w = [v[0] / r, v[1] / r];
        elapsed += dt;
        history.push((elapsed, log_growth));
        cur = end.state;
    }
    let lambda = log_growth / total;
    let (lo, hi) = history
        .iter()
        .map(|(t, g)| (g - lambda * t).exp())
        .fold((f64::INFINITY, 0.0_f64), |(a, b), c| (a.min(c), b.max(c)));
    Ok(LyapunovEstimate {
        lambda,
        c_bounds: [lo, hi],
        total_time: total,
        x0: *x,
    })
}

/// Opening of `Dφ^{nτ}(C(φ^{−nτ}x))` computed from the single-period
/// matrices along the backward orbit.
pub fn nested_angle(mats_back: &[Mat2], cone: &Cone) -> Result<f64> {
    Ok(nest(mats_back, cone)?.1)
}

/// The host-cone opening of the standard cone.
pub const STANDARD_OPENING: f64 = FRAC_PI_2;
