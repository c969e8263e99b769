//! Geodesic and Jacobi-field integration across the charts of an atlas.
//!
//! The state integrated in each chart is
//! `[x¹, x², v¹, v², j_h, j_h′, j_v, j_v′]`: position, velocity, and the two
//! columns of the fundamental solution of `j″ + K j = 0` over the current
//! step, started from `(1, 0)` and `(0, 1)`. The cocycle is the running
//! product of these step propagators, and its determinant the product of
//! theirs. Jacobi components are taken along the oriented unit normal of
//! the velocity, so they change sign whenever a chart transition reverses
//! orientation.

pub mod dopri;

use serde::{Deserialize, Serialize};

use crate::chart::{orthonormal_frame, Atlas, Chart, ChartPoint, Link};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use dopri::{State, Step};

pub const DEFAULT_RTOL: f64 = 1e-10;
pub const DEFAULT_ATOL: f64 = 1e-12;
pub const DEFAULT_MAX_STEP: f64 = 0.01;
/// Allowed deviation from unit speed.
pub const RENORM_TOL: f64 = 1e-8;
pub const DET_TOL: f64 = 1e-6;
pub const TIME_TOL: f64 = 1e-8;

const MIN_STEP: f64 = 1e-13;
/// Points this far past a handoff circle still count as on it.
const HANDOFF_SLACK: f64 = 1e-9;
/// Step propagators are judged relative to their unit size, since the
/// cocycle error they cause is `δP · dphi`.
const ERROR_SCALE: State<8> = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];

/// A point of the unit tangent bundle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentState {
    pub p: ChartPoint,
    pub v: [f64; 2],
}

impl TangentState {
    pub fn new(p: ChartPoint, v: [f64; 2]) -> Self {
        Self { p, v }
    }

    /// The unit vector making angle `angle` with the first coordinate
    /// direction, measured in the metric.
    pub fn with_angle(atlas: &Atlas, p: ChartPoint, angle: f64) -> Result<Self> {
        let g = atlas.metric_at(&p)?;
        let [e1, e2] = orthonormal_frame(&g);
        let (s, c) = angle.sin_cos();
        Ok(Self {
            p,
            v: [c * e1[0] + s * e2[0], c * e1[1] + s * e2[1]],
        })
    }

    /// Rescales `v` to unit length.
    pub fn unit(atlas: &Atlas, p: ChartPoint, v: [f64; 2]) -> Result<Self> {
        let g = atlas.metric_at(&p)?;
        let n = g.inner(v, v).sqrt();
        if !(n > 0.0) {
            return Err(Error::InvalidParameter("zero velocity".into()));
        }
        Ok(Self {
            p,
            v: [v[0] / n, v[1] / n],
        })
    }

    pub fn speed(&self, atlas: &Atlas) -> Result<f64> {
        let g = atlas.metric_at(&self.p)?;
        Ok(g.inner(self.v, self.v).sqrt())
    }

    /// Angle of `v` in the orthonormal frame of its chart.
    pub fn angle(&self, atlas: &Atlas) -> Result<f64> {
        let g = atlas.metric_at(&self.p)?;
        let [e1, _] = orthonormal_frame(&g);
        let a = g.inner(self.v, e1);
        let b = g.inner(self.v, crate::chart::rotate_quarter(&g, e1));
        Ok(b.atan2(a))
    }
}

/// Jacobi data `(j, j′)` along a geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiState {
    pub j: f64,
    pub jp: f64,
}

impl JacobiState {
    pub const fn new(j: f64, jp: f64) -> Self {
        Self { j, jp }
    }
}

/// Components of a vector perpendicular to the flow in the orthonormal
/// horizontal/vertical frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerpVector {
    pub c_h: f64,
    pub c_v: f64,
}

impl PerpVector {
    pub const fn new(c_h: f64, c_v: f64) -> Self {
        Self { c_h, c_v }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.c_h, self.c_v]
    }

    pub fn normalized(&self) -> Self {
        let n = sasaki_norm(*self);
        Self::new(self.c_h / n, self.c_v / n)
    }
}

impl From<[f64; 2]> for PerpVector {
    fn from(a: [f64; 2]) -> Self {
        Self::new(a[0], a[1])
    }
}

pub fn sasaki_norm(w: PerpVector) -> f64 {
    w.c_h.hypot(w.c_v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub state: TangentState,
    pub curvature: f64,
}

/// The accepted integrator points of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSegment {
    pub samples: Vec<Sample>,
    pub total_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            max_step: DEFAULT_MAX_STEP,
        }
    }
}

impl FlowOptions {
    /// Same step cap with both tolerances divided by `factor`.
    pub fn tightened(self, factor: f64) -> Self {
        Self {
            rtol: self.rtol / factor,
            atol: self.atol / factor,
            ..self
        }
    }
}

/// Final state of a flow run with the perpendicular derivative cocycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowEnd {
    pub state: TangentState,
    pub dphi: Mat2,
    /// `det dphi` as the product of the step propagator determinants.
    /// Evaluating `ad − bc` on `dphi` itself cancels catastrophically once
    /// its entries approach `1/√ε`.
    pub det: f64,
    pub steps: usize,
    pub handoffs: usize,
}

/// An accepted step handed to observers.
pub struct StepView<'a> {
    pub chart: &'a Chart,
    /// Signed flow time at the start of the step.
    pub t0: f64,
    /// Jacobi components of `step` are relative to this cocycle.
    pub dphi0: Mat2,
    pub step: &'a Step<8>,
}

impl StepView<'_> {
    /// Cocycle at fraction `theta` of the step.
    pub fn dphi_at(&self, theta: f64) -> Mat2 {
        let s = self.step;
        let p = Mat2([
            [s.dense_component(4, theta), s.dense_component(6, theta)],
            [s.dense_component(5, theta), s.dense_component(7, theta)],
        ]);
        p.mul(&self.dphi0)
    }
}

/// Integrator bound to an atlas.
#[derive(Debug, Clone, Copy)]
pub struct Flow<'a> {
    atlas: &'a Atlas,
    opts: FlowOptions,
}

fn geodesic_rhs(chart: &Chart) -> impl FnMut(&State<8>) -> State<8> + '_ {
    let metric = &*chart.metric;
    move |y| {
        let l = metric.local([y[0], y[1]]);
        let a = l.christoffel.acceleration([y[2], y[3]]);
        let k = l.curvature;
        [y[2], y[3], a[0], a[1], y[5], -k * y[4], y[7], -k * y[6]]
    }
}

impl<'a> Flow<'a> {
    pub fn new(atlas: &'a Atlas) -> Self {
        Self {
            atlas,
            opts: FlowOptions::default(),
        }
    }

    pub fn with_options(atlas: &'a Atlas, opts: FlowOptions) -> Self {
        Self { atlas, opts }
    }

    pub fn atlas(&self) -> &'a Atlas {
        self.atlas
    }

    pub fn options(&self) -> FlowOptions {
        self.opts
    }

    /// Flows `x` for signed time `duration`.
    pub fn advance(&self, x: &TangentState, duration: f64) -> Result<FlowEnd> {
        self.drive(x, duration, |_| true)
    }

    /// Flows `x` and records every accepted step.
    pub fn segment(&self, x: &TangentState, duration: f64) -> Result<FlowSegment> {
        let atlas = self.atlas;
        let curvature = |chart: &Chart, c: [f64; 2]| chart.metric.local(c).curvature;
        let start = atlas.chart(x.p.chart)?;
        let mut samples = vec![Sample {
            time: 0.0,
            state: *x,
            curvature: curvature(start, x.p.coords),
        }];
        self.drive(x, duration, |view| {
            let y = view.step.y1;
            let coords = view.chart.domain.wrap([y[0], y[1]]);
            samples.push(Sample {
                time: view.t0 + view.step.h,
                state: TangentState::new(ChartPoint::new(view.chart.id, coords), [y[2], y[3]]),
                curvature: curvature(view.chart, coords),
            });
            true
        })?;
        Ok(FlowSegment {
            samples,
            total_time: duration,
        })
    }

    /// First `t ∈ (0, T]` where the Jacobi field with `(j, j′)(0) = (0, 1)`
    /// vanishes again.
    pub fn conjugate_time(&self, x: &TangentState, duration: f64) -> Result<Option<f64>> {
        if !(duration > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "duration must be positive, got {duration}"
            )));
        }
        let mut found = None;
        self.drive(x, duration, |view| {
            let s = view.step;
            let j = |theta: f64| view.dphi_at(theta).0[0][1];
            let (b0, b1) = (view.dphi0.0[0][1], j(1.0));
            if b0 == 0.0 || b0 * b1 > 0.0 {
                return true;
            }
            let (mut lo, mut hi) = (0.0, 1.0);
            while (hi - lo) * s.h.abs() > 0.1 * TIME_TOL {
                let m = 0.5 * (lo + hi);
                if j(m) * b0 > 0.0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            found = Some(view.t0 + 0.5 * (lo + hi) * s.h);
            false
        })?;
        Ok(found)
    }

    fn handoff_gap(&self, chart: &Chart, link: &Link, x: [f64; 2]) -> f64 {
        let c = self.atlas.collar();
        if chart.id == link.plane {
            let d = self.atlas.displacement(chart, x, link.center);
            d[0].hypot(d[1]) - (link.attach_radius - 0.5 * c)
        } else {
            link.depth(x[0]) - 0.5 * c
        }
    }

    /// Moves the geodesic part of `y` across `link`; the cocycle is
    /// negated when the link reverses orientation.
    fn cross(&self, chart: usize, link: &Link, y: &State<8>, dphi: &mut Mat2) -> (usize, State<8>) {
        let atlas = self.atlas;
        let (q, w, flip) = atlas.cross(atlas.chart_at(chart), link, [y[0], y[1]], [y[2], y[3]]);
        if flip {
            *dphi = dphi.scale(-1.0);
        }
        let next = atlas.index_of(q.chart).expect("links target known charts");
        (
            next,
            [q.coords[0], q.coords[1], w[0], w[1], 1.0, 0.0, 0.0, 1.0],
        )
    }

    /// The core loop: adaptive steps, unit-speed renormalization, periodic
    /// wrapping, and chart handoffs located with dense output. `observe`
    /// sees every accepted step and may stop the run by returning false.
    pub fn drive(
        &self,
        x: &TangentState,
        duration: f64,
        mut observe: impl FnMut(StepView<'_>) -> bool,
    ) -> Result<FlowEnd> {
        let atlas = self.atlas;
        let opts = self.opts;
        let mut ci = atlas.index_of(x.p.chart)?;
        let g = atlas.metric_at(&x.p)?;
        let speed = g.inner(x.v, x.v).sqrt();
        let mut y: State<8> = [
            x.p.coords[0],
            x.p.coords[1],
            x.v[0] / speed,
            x.v[1] / speed,
            1.0,
            0.0,
            0.0,
            1.0,
        ];
        let mut dphi = Mat2::IDENTITY;
        let mut log_det = 0.0;
        let mut handoffs = 0;
        // A start point already past a handoff circle belongs to the next chart.
        for _ in 0..4 {
            let chart = atlas.chart_at(ci);
            let hit = atlas
                .links_of(chart.id)
                .map(|l| (self.handoff_gap(chart, l, [y[0], y[1]]), l))
                .filter(|(gap, _)| *gap < -HANDOFF_SLACK)
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match hit {
                Some((_, link)) => {
                    (ci, y) = self.cross(ci, link, &y, &mut dphi);
                    handoffs += 1;
                }
                None => break,
            }
        }

        let dir = if duration < 0.0 { -1.0 } else { 1.0 };
        let total = duration.abs();
        let mut elapsed = 0.0;
        let mut h = opts.max_step.min(total).max(MIN_STEP);
        let mut steps = 0;
        let mut rejected_last = false;
        let mut k1 = geodesic_rhs(atlas.chart_at(ci))(&y);

        while total - elapsed > 1e-14 * total.max(1.0) {
            let chart = atlas.chart_at(ci);
            let mut f = geodesic_rhs(chart);
            let hmag = h.min(opts.max_step).min(total - elapsed);
            let trial = dopri::step(&mut f, &y, &k1, dir * hmag);
            let err = trial.error_norm_scaled(opts.rtol, opts.atol, &ERROR_SCALE);
            if !(err <= 1.0) {
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).max(0.2)
                } else {
                    0.2
                };
                h = hmag * fac;
                rejected_last = true;
                if h < MIN_STEP {
                    return Err(Error::StepFailure {
                        time: dir * elapsed,
                        step: h,
                    });
                }
                continue;
            }
            steps += 1;

            // Earliest handoff crossing inside this step, if any.
            let mut event: Option<(f64, &Link)> = None;
            for link in atlas.links_of(chart.id) {
                let g1 = self.handoff_gap(chart, link, [trial.y1[0], trial.y1[1]]);
                if g1 >= 0.0 {
                    continue;
                }
                let g0 = self.handoff_gap(chart, link, [y[0], y[1]]);
                if g0 < -HANDOFF_SLACK {
                    continue;
                }
                let theta = if g0 <= 0.0 {
                    0.0
                } else {
                    let (mut lo, mut hi) = (0.0, 1.0);
                    for _ in 0..60 {
                        let m = 0.5 * (lo + hi);
                        let p = [trial.dense_component(0, m), trial.dense_component(1, m)];
                        if self.handoff_gap(chart, link, p) > 0.0 {
                            lo = m;
                        } else {
                            hi = m;
                        }
                        if (hi - lo) * hmag < 1e-15 {
                            break;
                        }
                    }
                    hi
                };
                if event.is_none_or(|(t, _)| theta < t) {
                    event = Some((theta, link));
                }
            }

            let t0 = dir * elapsed;
            let (taken, advance) = match event {
                Some((theta, _)) if theta < 1.0 => {
                    let partial = dopri::step(&mut f, &y, &k1, dir * hmag * theta);
                    (partial, hmag * theta)
                }
                _ => (trial, hmag),
            };
            let keep_going = observe(StepView {
                chart,
                t0,
                dphi0: dphi,
                step: &taken,
            });
            elapsed += advance;
            y = taken.y1;
            k1 = taken.k7;
            let p = Mat2([[y[4], y[6]], [y[5], y[7]]]);
            dphi = p.mul(&dphi);
            log_det += p.det().ln();
            // The last stage saw K(y1) through `j_h″ = −K j_h`.
            let k = if p.0[0][0].abs() > 0.5 {
                -k1[5] / p.0[0][0]
            } else {
                chart.metric.local([y[0], y[1]]).curvature
            };
            y[4..].copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
            k1[4..].copy_from_slice(&[0.0, -k, 1.0, 0.0]);

            let gv = chart.metric.value([y[0], y[1]]);
            let speed = gv.inner([y[2], y[3]], [y[2], y[3]]).sqrt();
            let s = 1.0 / speed;
            y[2] *= s;
            y[3] *= s;
            k1[0] *= s;
            k1[1] *= s;
            k1[2] *= s * s;
            k1[3] *= s * s;
            let wrapped = chart.domain.wrap([y[0], y[1]]);
            y[0] = wrapped[0];
            y[1] = wrapped[1];

            if let Some((_, link)) = event {
                (ci, y) = self.cross(ci, link, &y, &mut dphi);
                handoffs += 1;
                k1 = geodesic_rhs(atlas.chart_at(ci))(&y);
            }
            let here = atlas.chart_at(ci);
            if !atlas.contains_in(here, [y[0], y[1]]) {
                return Err(Error::DomainEscape {
                    chart: here.id,
                    coords: [y[0], y[1]],
                    time: dir * elapsed,
                });
            }
            if !keep_going {
                break;
            }

            let mut fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
            if rejected_last {
                fac = fac.min(1.0);
            }
            rejected_last = false;
            h = (hmag * fac).max(h.min(hmag));
            if event.is_some() {
                h = h.max(hmag);
            }
        }

        let chart = atlas.chart_at(ci);
        Ok(FlowEnd {
            state: TangentState::new(ChartPoint::new(chart.id, [y[0], y[1]]), [y[2], y[3]]),
            dphi,
            det: log_det.exp(),
            steps,
            handoffs,
        })
    }
}

pub fn integrate_geodesic(atlas: &Atlas, x: &TangentState, duration: f64) -> Result<FlowSegment> {
    Flow::new(atlas).segment(x, duration)
}

pub fn jacobi_transport(
    atlas: &Atlas,
    x: &TangentState,
    duration: f64,
    xi0: JacobiState,
) -> Result<JacobiState> {
    let m = dphi_perp(atlas, x, duration)?;
    let r = m.apply([xi0.j, xi0.jp]);
    Ok(JacobiState::new(r[0], r[1]))
}

/// The derivative of the time-`duration` flow restricted to the
/// perpendicular subspace, in the `(ξ_h, ξ_v)` frames at both ends.
pub fn dphi_perp(atlas: &Atlas, x: &TangentState, duration: f64) -> Result<Mat2> {
    Ok(Flow::new(atlas).advance(x, duration)?.dphi)
}

pub fn detect_conjugate_point(
    atlas: &Atlas,
    x: &TangentState,
    duration: f64,
) -> Result<Option<f64>> {
    Flow::new(atlas).conjugate_time(x, duration)
}
