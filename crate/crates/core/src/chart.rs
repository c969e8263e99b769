//! Chart atlases for surfaces: metric evaluation, Levi-Civita connection,
//! Gaussian curvature and transition maps between overlapping charts.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::profile::TubeProfile;

/// Relative tolerance for chart transitions and overlap agreement.
pub const TRANSITION_TOL: f64 = 1e-9;

/// Width of the flat overlap collar between plane and tube charts.
pub const DEFAULT_COLLAR: f64 = 0.05;

/// Central finite-difference step for metrics without closed-form jets.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    PlaneBottom,
    PlaneTop,
    Tube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChartId {
    pub kind: ChartKind,
    pub index: usize,
}

impl ChartId {
    pub const fn bottom(index: usize) -> Self {
        Self {
            kind: ChartKind::PlaneBottom,
            index,
        }
    }

    pub const fn top(index: usize) -> Self {
        Self {
            kind: ChartKind::PlaneTop,
            index,
        }
    }

    pub const fn tube(index: usize) -> Self {
        Self {
            kind: ChartKind::Tube,
            index,
        }
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ChartKind::PlaneBottom => "bottom",
            ChartKind::PlaneTop => "top",
            ChartKind::Tube => "tube",
        };
        write!(f, "{kind}{}", self.index)
    }
}

/// A point expressed in one chart of an atlas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: ChartId,
    pub coords: [f64; 2],
}

impl ChartPoint {
    pub const fn new(chart: ChartId, coords: [f64; 2]) -> Self {
        Self { chart, coords }
    }
}

/// A symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2::diag(1.0, 1.0);

    pub const fn diag(a: f64, b: f64) -> Self {
        Self {
            xx: a,
            xy: 0.0,
            yy: b,
        }
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn inverse(&self) -> Sym2 {
        let d = self.det();
        Sym2 {
            xx: self.yy / d,
            xy: -self.xy / d,
            yy: self.xx / d,
        }
    }

    /// `aᵀ M b`.
    pub fn inner(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        a[0] * (self.xx * b[0] + self.xy * b[1]) + a[1] * (self.xy * b[0] + self.yy * b[1])
    }

    pub fn apply(&self, a: [f64; 2]) -> [f64; 2] {
        [
            self.xx * a[0] + self.xy * a[1],
            self.xy * a[0] + self.yy * a[1],
        ]
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = 0.5 * (self.xx + self.yy);
        let r = (0.25 * (self.xx - self.yy).powi(2) + self.xy * self.xy).sqrt();
        [m - r, m + r]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.xx > 0.0 && self.det() > 0.0
    }

    pub fn max_abs_diff(&self, o: &Sym2) -> f64 {
        (self.xx - o.xx)
            .abs()
            .max((self.xy - o.xy).abs())
            .max((self.yy - o.yy).abs())
    }
}

/// The metric entries `(g11, g12, g22)` with their first and second
/// coordinate derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricJet {
    pub g11: Jet2,
    pub g12: Jet2,
    pub g22: Jet2,
}

impl MetricJet {
    pub fn value(&self) -> Sym2 {
        Sym2 {
            xx: self.g11.v,
            xy: self.g12.v,
            yy: self.g22.v,
        }
    }

    fn entry(&self, i: usize, j: usize) -> &Jet2 {
        match (i, j) {
            (0, 0) => &self.g11,
            (1, 1) => &self.g22,
            _ => &self.g12,
        }
    }

    /// Levi-Civita symbols `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
    pub fn christoffel(&self) -> Christoffel {
        let inv = self.value().inverse();
        let ginv = [[inv.xx, inv.xy], [inv.xy, inv.yy]];
        let d = |a: usize, i: usize, j: usize| self.entry(i, j).g[a];
        let mut gamma = [[0.0; 3]; 2];
        for (k, row) in gamma.iter_mut().enumerate() {
            for (s, (i, j)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
                let mut acc = 0.0;
                for (l, gl) in ginv[k].iter().enumerate() {
                    acc += gl * (d(i, j, l) + d(j, i, l) - d(l, i, j));
                }
                row[s] = 0.5 * acc;
            }
        }
        Christoffel { gamma }
    }

    /// Gaussian curvature via the Brioschi formula.
    pub fn brioschi(&self) -> f64 {
        let (e, f, g) = (self.g11.v, self.g12.v, self.g22.v);
        let (e_u, e_v) = (self.g11.g[0], self.g11.g[1]);
        let (f_u, f_v) = (self.g12.g[0], self.g12.g[1]);
        let (g_u, g_v) = (self.g22.g[0], self.g22.g[1]);
        let e_vv = self.g11.h[2];
        let f_uv = self.g12.h[1];
        let g_uu = self.g22.h[0];
        let a = det3([
            [-0.5 * e_vv + f_uv - 0.5 * g_uu, 0.5 * e_u, f_u - 0.5 * e_v],
            [f_v - 0.5 * g_u, e, f],
            [0.5 * g_v, f, g],
        ]);
        let b = det3([
            [0.0, 0.5 * e_v, 0.5 * g_u],
            [0.5 * e_v, e, f],
            [0.5 * g_u, f, g],
        ]);
        let w = e * g - f * f;
        (a - b) / (w * w)
    }

    pub fn local(&self) -> LocalGeometry {
        LocalGeometry {
            g: self.value(),
            christoffel: self.christoffel(),
            curvature: self.brioschi(),
        }
    }
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Christoffel symbols stored as `gamma[k] = [Γ^k_11, Γ^k_12, Γ^k_22]`;
/// symmetry in the lower indices holds by construction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Christoffel {
    pub gamma: [[f64; 3]; 2],
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        let s = match (i, j) {
            (0, 0) => 0,
            (1, 1) => 2,
            _ => 1,
        };
        self.gamma[k][s]
    }

    /// Geodesic acceleration `−Γ^k_ij v^i v^j`.
    #[inline]
    pub fn acceleration(&self, v: [f64; 2]) -> [f64; 2] {
        let q = [v[0] * v[0], 2.0 * v[0] * v[1], v[1] * v[1]];
        [
            -(self.gamma[0][0] * q[0] + self.gamma[0][1] * q[1] + self.gamma[0][2] * q[2]),
            -(self.gamma[1][0] * q[0] + self.gamma[1][1] * q[1] + self.gamma[1][2] * q[2]),
        ]
    }
}

/// Everything the flow needs at one point of a chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalGeometry {
    pub g: Sym2,
    pub christoffel: Christoffel,
    pub curvature: f64,
}

/// A chart-local Riemannian metric.
///
/// Implementations supply exact jets; charts with a cheaper closed form for
/// the connection and curvature may override [`MetricField::local`].
pub trait MetricField: Send + Sync + fmt::Debug {
    fn jet(&self, x: [f64; 2]) -> MetricJet;

    fn local(&self, x: [f64; 2]) -> LocalGeometry {
        self.jet(x).local()
    }

    fn value(&self, x: [f64; 2]) -> Sym2 {
        self.jet(x).value()
    }
}

/// Central-difference jets of a metric given only by its values.
pub fn finite_difference_jet(f: impl Fn([f64; 2]) -> Sym2, x: [f64; 2], h: f64) -> MetricJet {
    let at = |dx: f64, dy: f64| f([x[0] + dx, x[1] + dy]);
    let c = at(0.0, 0.0);
    let (xp, xm, yp, ym) = (at(h, 0.0), at(-h, 0.0), at(0.0, h), at(0.0, -h));
    let (pp, pm, mp, mm) = (at(h, h), at(h, -h), at(-h, h), at(-h, -h));
    let build = |sel: fn(&Sym2) -> f64| Jet2 {
        v: sel(&c),
        g: [
            (sel(&xp) - sel(&xm)) / (2.0 * h),
            (sel(&yp) - sel(&ym)) / (2.0 * h),
        ],
        h: [
            (sel(&xp) - 2.0 * sel(&c) + sel(&xm)) / (h * h),
            (sel(&pp) - sel(&pm) - sel(&mp) + sel(&mm)) / (4.0 * h * h),
            (sel(&yp) - 2.0 * sel(&c) + sel(&ym)) / (h * h),
        ],
    };
    MetricJet {
        g11: build(|s| s.xx),
        g12: build(|s| s.xy),
        g22: build(|s| s.yy),
    }
}

/// Parameter domain of a chart.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// A box, with each axis either periodic (wrapped into `[lo, hi)`) or
    /// bounded. Plane charts additionally exclude the interiors of the
    /// holes recorded as [`Link`]s.
    Planar {
        lo: [f64; 2],
        hi: [f64; 2],
        periodic: [bool; 2],
    },
    /// `(t, θ)` with `t ∈ [t_lo, t_hi]` and `θ` periodic with period 2π.
    Revolution { t_lo: f64, t_hi: f64 },
}

impl Domain {
    pub fn wrap(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            Domain::Planar { lo, hi, periodic } => {
                let mut y = x;
                for a in 0..2 {
                    if periodic[a] {
                        y[a] = lo[a] + (y[a] - lo[a]).rem_euclid(hi[a] - lo[a]);
                    }
                }
                y
            }
            Domain::Revolution { .. } => [x[0], x[1].rem_euclid(TAU)],
        }
    }

    /// Periods of the wrapped axes (None for bounded axes).
    pub fn periods(&self) -> [Option<f64>; 2] {
        match self {
            Domain::Planar { lo, hi, periodic } => [
                periodic[0].then(|| hi[0] - lo[0]),
                periodic[1].then(|| hi[1] - lo[1]),
            ],
            Domain::Revolution { .. } => [None, Some(TAU)],
        }
    }

    fn in_box(&self, x: [f64; 2]) -> bool {
        match self {
            Domain::Planar { lo, hi, periodic } => {
                (0..2).all(|a| periodic[a] || (x[a] >= lo[a] && x[a] <= hi[a]))
            }
            Domain::Revolution { t_lo, t_hi } => x[0] >= *t_lo && x[0] <= *t_hi,
        }
    }
}

/// The identification of a flat collar annulus around a disk of a plane
/// chart with the end of a tube chart.
///
/// Tube arclength `t` and plane radius `r` (about `center`) are related by
/// `t = t_attach + inward · (attach_radius − r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub plane: ChartId,
    pub tube: ChartId,
    pub center: [f64; 2],
    pub attach_radius: f64,
    pub t_attach: f64,
    pub inward: f64,
}

impl Link {
    /// The transition reverses orientation when `t` grows as `r` shrinks.
    pub fn flips_orientation(&self) -> bool {
        self.inward > 0.0
    }

    /// Signed depth into the tube measured from the attachment circle.
    pub fn depth(&self, t: f64) -> f64 {
        (t - self.t_attach) * self.inward
    }
}

/// Embedding of a chart into the `(u, v, w)` slab containing the model
/// surface; consumed by induced metrics and perturbations.
#[derive(Debug, Clone)]
pub enum Immersion {
    Plane {
        height: f64,
    },
    Tube {
        center: [f64; 2],
        profile: Arc<TubeProfile>,
    },
}

impl Immersion {
    /// `(u, v, w)` as jets in the chart coordinates.
    pub fn position(&self, x: [f64; 2]) -> [Jet2; 3] {
        match self {
            Immersion::Plane { height } => [
                Jet2::var(x[0], 0),
                Jet2::var(x[1], 1),
                Jet2::constant(*height),
            ],
            Immersion::Tube { center, profile } => {
                let t = Jet2::var(x[0], 0);
                let th = Jet2::var(x[1], 1);
                let r = profile.radius(x[0]);
                let rho = t.compose([r[0], r[1], r[2]]);
                let w = t.compose(profile.height(x[0]));
                [rho * th.cos() + center[0], rho * th.sin() + center[1], w]
            }
        }
    }

    /// Coordinate tangent vectors `∂_1 P`, `∂_2 P` as jets.
    pub fn tangents(&self, x: [f64; 2]) -> [[Jet2; 3]; 2] {
        match self {
            Immersion::Plane { .. } => {
                let (o, z) = (Jet2::constant(1.0), Jet2::constant(0.0));
                [[o, z, z], [z, o, z]]
            }
            Immersion::Tube { profile, .. } => {
                let t = Jet2::var(x[0], 0);
                let th = Jet2::var(x[1], 1);
                let r = profile.radius(x[0]);
                let rho = t.compose([r[0], r[1], r[2]]);
                let drho = t.compose([r[1], r[2], r[3]]);
                let dw = t.compose(profile.height_rate(x[0]));
                let (c, s) = (th.cos(), th.sin());
                [
                    [drho * c, drho * s, dw],
                    [-(rho * s), rho * c, Jet2::constant(0.0)],
                ]
            }
        }
    }

    pub fn point(&self, x: [f64; 2]) -> [f64; 3] {
        let p = self.position(x);
        [p[0].v, p[1].v, p[2].v]
    }
}

/// One chart of an atlas.
#[derive(Debug, Clone)]
pub struct Chart {
    pub id: ChartId,
    pub domain: Domain,
    pub metric: Arc<dyn MetricField>,
    pub immersion: Option<Immersion>,
}

/// A collection of charts with collar transitions. Immutable after
/// construction and shared freely between threads.
#[derive(Debug, Clone)]
pub struct Atlas {
    pub label: String,
    charts: Vec<Chart>,
    links: Vec<Link>,
    collar: f64,
    compact: bool,
}

impl Atlas {
    pub fn new(
        label: impl Into<String>,
        charts: Vec<Chart>,
        links: Vec<Link>,
        collar: f64,
        compact: bool,
    ) -> Self {
        Self {
            label: label.into(),
            charts,
            links,
            collar,
            compact,
        }
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn collar(&self) -> f64 {
        self.collar
    }

    /// Whether the charts cover a compact fundamental domain.
    pub fn is_compact(&self) -> bool {
        self.compact
    }

    pub fn tube_count(&self) -> usize {
        self.charts
            .iter()
            .filter(|c| c.id.kind == ChartKind::Tube)
            .count()
    }

    pub fn index_of(&self, id: ChartId) -> Result<usize> {
        self.charts
            .iter()
            .position(|c| c.id == id)
            .ok_or(Error::UnknownChart(id))
    }

    pub fn chart(&self, id: ChartId) -> Result<&Chart> {
        self.index_of(id).map(|i| &self.charts[i])
    }

    pub fn chart_at(&self, idx: usize) -> &Chart {
        &self.charts[idx]
    }

    /// Returns a copy of this atlas with every chart metric replaced.
    pub fn map_metrics(
        &self,
        label: impl Into<String>,
        mut f: impl FnMut(&Chart) -> Arc<dyn MetricField>,
    ) -> Atlas {
        let charts = self
            .charts
            .iter()
            .map(|c| Chart {
                metric: f(c),
                ..c.clone()
            })
            .collect();
        Atlas {
            label: label.into(),
            charts,
            links: self.links.clone(),
            collar: self.collar,
            compact: self.compact,
        }
    }

    /// Links attached to a plane or tube chart.
    pub fn links_of(&self, id: ChartId) -> impl Iterator<Item = &Link> {
        self.links
            .iter()
            .filter(move |l| l.plane == id || l.tube == id)
    }

    /// Displacement from `center` to `x` using the nearest periodic image.
    pub fn displacement(&self, chart: &Chart, x: [f64; 2], center: [f64; 2]) -> [f64; 2] {
        let mut d = [x[0] - center[0], x[1] - center[1]];
        for (a, p) in chart.domain.periods().into_iter().enumerate() {
            if let Some(p) = p {
                d[a] -= p * (d[a] / p).round();
            }
        }
        d
    }

    pub fn contains(&self, p: &ChartPoint) -> Result<bool> {
        let chart = self.chart(p.chart)?;
        Ok(self.contains_in(chart, p.coords))
    }

    pub(crate) fn contains_in(&self, chart: &Chart, x: [f64; 2]) -> bool {
        if !x[0].is_finite() || !x[1].is_finite() || !chart.domain.in_box(x) {
            return false;
        }
        match chart.id.kind {
            ChartKind::Tube => true,
            _ => self.links.iter().filter(|l| l.plane == chart.id).all(|l| {
                let d = self.displacement(chart, x, l.center);
                d[0].hypot(d[1]) >= l.attach_radius - self.collar - 1e-9
            }),
        }
    }

    fn check(&self, p: &ChartPoint) -> Result<&Chart> {
        let chart = self.chart(p.chart)?;
        if self.contains_in(chart, p.coords) {
            Ok(chart)
        } else {
            Err(Error::OutOfDomain {
                chart: p.chart,
                coords: p.coords,
            })
        }
    }

    pub fn metric_at(&self, p: &ChartPoint) -> Result<Sym2> {
        let chart = self.check(p)?;
        let g = chart.metric.value(p.coords);
        if !g.is_positive_definite() {
            return Err(Error::NotPositiveDefinite {
                chart: p.chart,
                coords: p.coords,
                det: g.det(),
            });
        }
        Ok(g)
    }

    pub fn christoffel(&self, p: &ChartPoint) -> Result<Christoffel> {
        let chart = self.check(p)?;
        Ok(chart.metric.local(p.coords).christoffel)
    }

    pub fn gaussian_curvature(&self, p: &ChartPoint) -> Result<f64> {
        let chart = self.check(p)?;
        Ok(chart.metric.local(p.coords).curvature)
    }

    /// Re-expresses a point and a tangent vector in the adjacent chart of
    /// the first overlap containing it.
    pub fn transition(&self, p: &ChartPoint, vec: [f64; 2]) -> Result<(ChartPoint, [f64; 2])> {
        let chart = self.check(p)?;
        let link = self
            .links_of(p.chart)
            .find(|l| self.in_overlap(chart, l, p.coords))
            .ok_or(Error::NoOverlap {
                chart: p.chart,
                coords: p.coords,
            })?;
        let (q, w, _) = self.cross(chart, link, p.coords, vec);
        Ok((q, w))
    }

    fn in_overlap(&self, chart: &Chart, link: &Link, x: [f64; 2]) -> bool {
        let c = self.collar;
        if chart.id == link.plane {
            let d = self.displacement(chart, x, link.center);
            let r = d[0].hypot(d[1]);
            (link.attach_radius - c..=link.attach_radius + c).contains(&r)
        } else {
            (-c..=c).contains(&link.depth(x[0]))
        }
    }

    /// Maps `(x, vec)` across `link` to the other chart; also reports
    /// whether the map reverses orientation.
    pub(crate) fn cross(
        &self,
        chart: &Chart,
        link: &Link,
        x: [f64; 2],
        vec: [f64; 2],
    ) -> (ChartPoint, [f64; 2], bool) {
        if chart.id == link.plane {
            let d = self.displacement(chart, x, link.center);
            let r = d[0].hypot(d[1]);
            let theta = d[1].atan2(d[0]).rem_euclid(TAU);
            let rdot = (d[0] * vec[0] + d[1] * vec[1]) / r;
            let thdot = (d[0] * vec[1] - d[1] * vec[0]) / (r * r);
            let t = link.t_attach + link.inward * (link.attach_radius - r);
            (
                ChartPoint::new(link.tube, [t, theta]),
                [-link.inward * rdot, thdot],
                link.flips_orientation(),
            )
        } else {
            let r = link.attach_radius - link.depth(x[0]);
            let (s, c) = x[1].sin_cos();
            let rdot = -link.inward * vec[0];
            let plane = &self.charts[self
                .index_of(link.plane)
                .expect("link targets a known chart")];
            let y = plane
                .domain
                .wrap([link.center[0] + r * c, link.center[1] + r * s]);
            let v = [rdot * c - r * vec[1] * s, rdot * s + r * vec[1] * c];
            (ChartPoint::new(link.plane, y), v, link.flips_orientation())
        }
    }
}

/// Orthonormal frame `(e1, e2)` at a point, positively oriented in the chart.
pub fn orthonormal_frame(g: &Sym2) -> [[f64; 2]; 2] {
    let a = g.xx.sqrt();
    let e1 = [1.0 / a, 0.0];
    let s = (g.yy - g.xy * g.xy / g.xx).sqrt();
    let e2 = [-g.xy / (g.xx * s), 1.0 / s];
    [e1, e2]
}

/// Rotates `v` by +90° in the oriented metric `g`.
pub fn rotate_quarter(g: &Sym2, v: [f64; 2]) -> [f64; 2] {
    let sd = g.det().sqrt();
    let gv = g.apply(v);
    [-gv[1] / sd, gv[0] / sd]
}
