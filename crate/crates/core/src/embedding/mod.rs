//! The slab `(u, v, w)` mapped onto nested tori in ℝ³, the metric it pulls
//! back, and the arithmetic of closing the lattice up on the torus.

pub mod mesh;

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::{Atlas, Chart, ChartId, Domain, Immersion, DEFAULT_COLLAR};
use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::metrics::{AmbientMetric, InducedMetric};
use crate::model::{assemble_with, DiskLattice, ModelSurface, ProfileParams, QuotientSpec};

/// Tolerance for recognising `2πR` as an integer.
pub const INT_TOL: f64 = 1e-9;

/// Outer radius `r1` of the core circle and tube radius `r2` of the inner
/// torus `w = 0`; the torus `w = 1` has tube radius `r2 + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingParams {
    pub r1: f64,
    pub r2: f64,
}

impl EmbeddingParams {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        if !(r1 > 0.0 && r2 > 0.0 && r1.is_finite() && r2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "radii must be positive, got ({r1}, {r2})"
            )));
        }
        Ok(Self { r1, r2 })
    }

    /// Whether both tori of the slab image are embedded and disjoint.
    pub fn slab_embedded(&self) -> bool {
        self.r1 > self.r2 + 1.0
    }

    pub fn require_slab_embedded(&self) -> Result<()> {
        if self.slab_embedded() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "outer radius {} must exceed tube radius {} + 1 for the slab image to be embedded",
                self.r1, self.r2
            )))
        }
    }

    /// Periods `(2πr1, 2πr2)` of the map in `u` and `v`.
    pub fn periods(&self) -> [f64; 2] {
        [TAU * self.r1, TAU * self.r2]
    }
}

/// Radii as functions of the family parameter `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RadiusSchedule {
    /// `(s², s) / 2π`.
    #[default]
    Quadratic,
    /// `(s, s) / 2π`: the ratio does not tend to zero.
    Equal,
    /// `(√2·s, s) / 2π`: never closes up on integer periods.
    Sqrt2Ratio,
}

impl RadiusSchedule {
    pub fn radii(&self, s: f64) -> [f64; 2] {
        let r2 = s / TAU;
        match self {
            RadiusSchedule::Quadratic => [s * s / TAU, r2],
            RadiusSchedule::Equal => [r2, r2],
            RadiusSchedule::Sqrt2Ratio => [std::f64::consts::SQRT_2 * s / TAU, r2],
        }
    }

    pub fn params(&self, s: f64) -> Result<EmbeddingParams> {
        let [r1, r2] = self.radii(s);
        EmbeddingParams::new(r1, r2)
    }
}

/// Position of a slab point on the nested tori.
pub fn embed_point(q: [f64; 3], params: &EmbeddingParams) -> [f64; 3] {
    let [u, v, w] = q;
    let (su, cu) = (u / params.r1).sin_cos();
    let (sv, cv) = (v / params.r2).sin_cos();
    let tube = params.r2 + w;
    let reach = params.r1 + tube * cv;
    [reach * cu, reach * su, tube * sv]
}

/// `∂(x, y, z)/∂(u, v, w)`, row `i` holding the derivatives of coordinate
/// `i`.
pub fn embed_jacobian(q: [f64; 3], params: &EmbeddingParams) -> [[f64; 3]; 3] {
    let [u, v, w] = q;
    let (su, cu) = (u / params.r1).sin_cos();
    let (sv, cv) = (v / params.r2).sin_cos();
    let tube = params.r2 + w;
    let stretch_u = (params.r1 + tube * cv) / params.r1;
    let stretch_v = tube / params.r2;
    [
        [-stretch_u * su, -stretch_v * sv * cu, cv * cu],
        [stretch_u * cu, -stretch_v * sv * su, cv * su],
        [0.0, stretch_v * cv, sv],
    ]
}

/// The diagonal metric `(DX)ᵀ DX` on the slab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullbackMetric {
    pub params: EmbeddingParams,
}

impl PullbackMetric {
    pub fn new(params: EmbeddingParams) -> Self {
        Self { params }
    }

    /// `[Q11, Q22, Q33]` as jets in `(v, w)`; no entry depends on `u`.
    pub fn jets(&self, v: f64, w: f64) -> [Jet2; 3] {
        self.entries(Jet2::var(v, 0), Jet2::var(w, 1))
    }

    pub fn diagonal_at(&self, q: [f64; 3]) -> [f64; 3] {
        let d = self.entries(Jet2::constant(q[1]), Jet2::constant(q[2]));
        [d[0].v, d[1].v, d[2].v]
    }

    fn entries(&self, v: Jet2, w: Jet2) -> [Jet2; 3] {
        let EmbeddingParams { r1, r2 } = self.params;
        let tube = w + r2;
        let q11 = (tube * (v * (1.0 / r2)).cos() * (1.0 / r1) + 1.0).square();
        let q22 = (tube * (1.0 / r2)).square();
        [q11, q22, Jet2::constant(1.0)]
    }

    /// Lower bound `(1 − (r2 + 1)/r1)²` of the diagonal over `w ∈ [0, 1]`.
    pub fn floor(&self) -> f64 {
        let EmbeddingParams { r1, r2 } = self.params;
        (1.0 - (r2 + 1.0) / r1).powi(2).min(1.0)
    }
}

impl AmbientMetric for PullbackMetric {
    fn diagonal(&self, p: &[Jet2; 3]) -> [Jet2; 3] {
        self.entries(p[1], p[2])
    }
}

/// Chart metric induced by `Q` through the chart's immersion into the slab.
pub fn induced_chart_metric(chart: &Chart, q: &PullbackMetric) -> Result<InducedMetric> {
    let immersion = chart.immersion.clone().ok_or_else(|| {
        Error::InvalidParameter(format!("chart {} has no slab immersion", chart.id))
    })?;
    Ok(InducedMetric {
        immersion,
        ambient: Arc::new(*q),
    })
}

/// Replaces every chart metric of a model atlas by its induced metric.
pub fn induced_atlas(atlas: &Atlas, params: &EmbeddingParams) -> Result<Atlas> {
    let q = PullbackMetric::new(*params);
    for chart in atlas.charts() {
        induced_chart_metric(chart, &q)?;
    }
    Ok(
        atlas.map_metrics(format!("{}-embedded", atlas.label), |chart| {
            Arc::new(induced_chart_metric(chart, &q).expect("checked above"))
        }),
    )
}

/// The model surface on the quotient matching the torus periods, with its
/// induced metric. Fails unless the periods are integers.
pub fn embedded_model(
    lattice: &DiskLattice,
    params: &EmbeddingParams,
    profile: ProfileParams,
) -> Result<(ModelSurface, Atlas)> {
    let (m, n) = periodicity_check(params).ok_or(Error::NonPeriodic {
        m: TAU * params.r1,
        n: TAU * params.r2,
    })?;
    let a =
        u32::try_from(m).map_err(|_| Error::InvalidParameter(format!("period {m} too large")))?;
    let b =
        u32::try_from(n).map_err(|_| Error::InvalidParameter(format!("period {n} too large")))?;
    let model = assemble_with(lattice, Some(QuotientSpec::new(a, b)?), profile)?;
    let atlas = induced_atlas(&model.atlas, params)?;
    Ok((model, atlas))
}

/// The torus `w = height` without tubes: one periodic chart over
/// `[0, 2πr1) × [0, 2πr2)` with the induced metric.
pub fn embedded_torus(params: &EmbeddingParams, height: f64) -> Atlas {
    let id = ChartId::bottom(0);
    let immersion = Immersion::Plane { height };
    Atlas::new(
        format!("torus-{}-{}", params.r1, params.r2),
        vec![Chart {
            id,
            domain: Domain::Planar {
                lo: [0.0, 0.0],
                hi: params.periods(),
                periodic: [true, true],
            },
            metric: Arc::new(InducedMetric {
                immersion: immersion.clone(),
                ambient: Arc::new(PullbackMetric::new(*params)),
            }),
            immersion: Some(immersion),
        }],
        Vec::new(),
        DEFAULT_COLLAR,
        true,
    )
}

/// `(m, n) = (2πr1, 2πr2)` when both are integers within [`INT_TOL`].
pub fn periodicity_check(params: &EmbeddingParams) -> Option<(u64, u64)> {
    let as_int = |x: f64| {
        let r = x.round();
        ((x - r).abs() <= INT_TOL && r >= 1.0).then_some(r as u64)
    };
    let [m, n] = params.periods();
    Some((as_int(m)?, as_int(n)?))
}

pub fn embedded_genus(m: u64, n: u64, disks_per_cell: u64) -> u64 {
    disks_per_cell * m * n + 1
}

/// Sample grid for [`convergence_report`] over `v ∈ [0, 2πr2]`, `w ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergenceGrid {
    pub v_samples: usize,
    pub w_samples: usize,
}

impl Default for ConvergenceGrid {
    fn default() -> Self {
        Self {
            v_samples: 512,
            w_samples: 33,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub s: f64,
    /// Largest `|Q_ii − 1|`.
    pub sup0: f64,
    /// Largest first partial derivative of any entry.
    pub sup1: f64,
    /// Largest second partial derivative of any entry.
    pub sup2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub schedule: RadiusSchedule,
    pub rows: Vec<ConvergenceRow>,
}

/// Sup-norm distance of `Q_s` from the identity in orders 0, 1 and 2. The
/// entries do not depend on `u`, so the region reduces to `(v, w)`.
pub fn convergence_report(
    schedule: RadiusSchedule,
    s_values: &[f64],
    grid: ConvergenceGrid,
) -> Result<ConvergenceReport> {
    if grid.v_samples < 2 || grid.w_samples < 2 {
        return Err(Error::InvalidParameter(
            "convergence grid needs at least 2 samples per axis".into(),
        ));
    }
    let rows = s_values
        .iter()
        .map(|&s| {
            let params = schedule.params(s)?;
            let q = PullbackMetric::new(params);
            let period = TAU * params.r2;
            let mut row = ConvergenceRow {
                s,
                sup0: 0.0,
                sup1: 0.0,
                sup2: 0.0,
            };
            for i in 0..grid.v_samples {
                let v = period * i as f64 / (grid.v_samples - 1) as f64;
                for k in 0..grid.w_samples {
                    let w = k as f64 / (grid.w_samples - 1) as f64;
                    for jet in q.jets(v, w) {
                        row.sup0 = row.sup0.max((jet.v - 1.0).abs());
                        row.sup1 = row.sup1.max(jet.g[0].abs()).max(jet.g[1].abs());
                        row.sup2 = jet.h.iter().fold(row.sup2, |m, h| m.max(h.abs()));
                    }
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport { schedule, rows })
}
