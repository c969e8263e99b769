//! The periodic model surface: two flat planes `w = 0` and `w = 1`, each
//! with a ℤ²-periodic array of disks removed, joined across every disk by a
//! negatively curved tube of height 1.

pub mod horizon;

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::{
    Atlas, Chart, ChartId, ChartKind, Domain, Immersion, Link, MetricField, DEFAULT_COLLAR,
};
use crate::error::{Error, Result};
use crate::metrics::{BumpPerturbation, FlatMetric, RevolutionMetric};
use crate::profile::{TubeProfile, DEFAULT_NECK_FRACTION};
use crate::quadrature::{GaussRule, KahanSum};
use horizon::{finite_horizon_bound, HorizonReport, HorizonSampling};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Disks in the unit cell, repeated under all integer translations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DiskLattice {
    pub disks: Vec<Disk>,
}

impl DiskLattice {
    pub fn new(disks: Vec<Disk>) -> Result<Self> {
        let l = Self { disks };
        l.validate()?;
        Ok(l)
    }

    pub fn empty() -> Self {
        Self { disks: Vec::new() }
    }

    /// A large disk at the cell centre and a small one at the corner. With
    /// the default collar the negatively curved cores (radii 0.38 and 0.17)
    /// block every straight line, including the axis directions.
    pub fn default_two_disk() -> Self {
        Self {
            disks: vec![
                Disk {
                    center: [0.5, 0.5],
                    radius: 0.43,
                },
                Disk {
                    center: [0.0, 0.0],
                    radius: 0.22,
                },
            ],
        }
    }

    /// Problems with the lattice, as `(index, message)` pairs.
    pub fn diagnostics(&self) -> Vec<(usize, String)> {
        let mut out = Vec::new();
        for (i, d) in self.disks.iter().enumerate() {
            if !(d.radius > 0.0) {
                out.push((i, format!("radius must be > 0, got {}", d.radius)));
            }
            if !(d.radius < 0.5) {
                out.push((i, "radius must be < 0.5".to_string()));
            }
            if !d.center.iter().all(|c| (0.0..1.0).contains(c)) {
                out.push((i, format!("center {:?} must lie in [0, 1)²", d.center)));
            }
        }
        for (i, a) in self.disks.iter().enumerate() {
            for (j, b) in self.disks.iter().enumerate().skip(i + 1) {
                for k in -2..=2 {
                    for l in -2..=2 {
                        let d = (b.center[0] + k as f64 - a.center[0])
                            .hypot(b.center[1] + l as f64 - a.center[1]);
                        if d <= a.radius + b.radius {
                            out.push((
                                j,
                                format!("disk {j} meets disk {i} (translate ({k}, {l}))"),
                            ));
                        }
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.diagnostics().first() {
            None => Ok(()),
            Some((i, msg)) => Err(Error::InvalidParameter(format!("disk {i}: {msg}"))),
        }
    }

    /// The same centres with every radius reduced by `by`.
    pub fn shrunk(&self, by: f64) -> Self {
        Self {
            disks: self
                .disks
                .iter()
                .map(|d| Disk {
                    center: d.center,
                    radius: (d.radius - by).max(0.0),
                })
                .filter(|d| d.radius > 0.0)
                .collect(),
        }
    }

    /// Whether `p` lies in some open disk (any translate).
    pub fn inside_any(&self, p: [f64; 2]) -> bool {
        self.disks.iter().any(|d| {
            let mut x = p[0] - d.center[0];
            let mut y = p[1] - d.center[1];
            x -= x.round();
            y -= y.round();
            x.hypot(y) < d.radius
        })
    }
}

/// The sublattice `aℤ × bℤ` by which the model surface is divided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotientSpec {
    pub a: u32,
    pub b: u32,
}

impl QuotientSpec {
    pub fn new(a: u32, b: u32) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::InvalidParameter(format!(
                "quotient ({a}, {b}) needs a, b ≥ 1"
            )));
        }
        Ok(Self { a, b })
    }
}

/// Genus of the quotient: one handle per tube plus one.
pub fn quotient_genus(spec: QuotientSpec, disks_per_cell: u64) -> u64 {
    disks_per_cell * spec.a as u64 * spec.b as u64 + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    /// Flat collar length at each tube end, also the chart overlap width.
    pub collar: f64,
    /// Waist radius drop as a fraction of the attachment radius.
    pub neck_fraction: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self {
            collar: DEFAULT_COLLAR,
            neck_fraction: DEFAULT_NECK_FRACTION,
        }
    }
}

/// An assembled model atlas with the data it was built from.
#[derive(Debug, Clone)]
pub struct ModelSurface {
    pub atlas: Atlas,
    pub lattice: DiskLattice,
    pub quotient: QuotientSpec,
    pub params: ProfileParams,
    /// One profile per disk of the unit cell.
    pub profiles: Vec<Arc<TubeProfile>>,
}

pub fn assemble_model_atlas(
    lattice: &DiskLattice,
    quotient: Option<QuotientSpec>,
) -> Result<ModelSurface> {
    assemble_with(lattice, quotient, ProfileParams::default())
}

pub fn assemble_with(
    lattice: &DiskLattice,
    quotient: Option<QuotientSpec>,
    params: ProfileParams,
) -> Result<ModelSurface> {
    lattice.validate()?;
    let quotient = quotient.unwrap_or(QuotientSpec { a: 1, b: 1 });
    QuotientSpec::new(quotient.a, quotient.b)?;
    let c = params.collar;
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "collar must be positive, got {c}"
        )));
    }
    let profiles = lattice
        .disks
        .iter()
        .map(|d| TubeProfile::build(d.radius, params.neck_fraction * d.radius, c).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;

    let (a, b) = (quotient.a as usize, quotient.b as usize);
    let plane = |id: ChartId, height: f64| Chart {
        id,
        domain: Domain::Planar {
            lo: [0.0, 0.0],
            hi: [a as f64, b as f64],
            periodic: [true, true],
        },
        metric: Arc::new(FlatMetric) as Arc<dyn MetricField>,
        immersion: Some(Immersion::Plane { height }),
    };
    let mut charts = vec![plane(ChartId::bottom(0), 0.0), plane(ChartId::top(0), 1.0)];
    let mut links = Vec::new();
    let nd = lattice.disks.len();
    for i in 0..a {
        for j in 0..b {
            for (k, (disk, profile)) in lattice.disks.iter().zip(&profiles).enumerate() {
                let id = ChartId::tube((i * b + j) * nd + k);
                let center = [i as f64 + disk.center[0], j as f64 + disk.center[1]];
                let len = profile.length();
                charts.push(Chart {
                    id,
                    domain: Domain::Revolution {
                        t_lo: -c,
                        t_hi: len + c,
                    },
                    metric: Arc::new(RevolutionMetric::new(profile.clone())),
                    immersion: Some(Immersion::Tube {
                        center,
                        profile: profile.clone(),
                    }),
                });
                links.push(Link {
                    plane: ChartId::bottom(0),
                    tube: id,
                    center,
                    attach_radius: disk.radius,
                    t_attach: 0.0,
                    inward: 1.0,
                });
                links.push(Link {
                    plane: ChartId::top(0),
                    tube: id,
                    center,
                    attach_radius: disk.radius,
                    t_attach: len,
                    inward: -1.0,
                });
            }
        }
    }
    Ok(ModelSurface {
        atlas: Atlas::new(format!("model-{}x{}", a, b), charts, links, c, true),
        lattice: lattice.clone(),
        quotient,
        params,
        profiles,
    })
}

impl ModelSurface {
    /// The lattice of negatively curved cores: flat collars removed.
    pub fn effective_lattice(&self) -> DiskLattice {
        self.lattice.shrunk(self.params.collar)
    }

    /// Every chart metric multiplied by `1 + ε·cos(2πu)·cos(2πv)`. On the
    /// planes this adds curvature `4π²ε·cos(2πu)·cos(2πv)` to first order,
    /// so the sign of `ε` decides where it turns positive.
    pub fn perturbed(&self, amplitude: f64) -> Atlas {
        self.atlas
            .map_metrics(format!("{}-bump{amplitude}", self.atlas.label), |chart| {
                Arc::new(BumpPerturbation {
                    base: chart.metric.clone(),
                    immersion: chart
                        .immersion
                        .clone()
                        .expect("model charts carry immersions"),
                    amplitude,
                })
            })
    }

    pub fn genus(&self) -> u64 {
        quotient_genus(self.quotient, self.lattice.disks.len() as u64)
    }
}

/// Horizon report for the cores of a lattice and the scan time derived
/// from it: 1.5 times the longest free flight.
pub fn default_tau(
    lattice: &DiskLattice,
    params: &ProfileParams,
    sampling: &HorizonSampling,
) -> (HorizonReport, f64) {
    let report = finite_horizon_bound(&lattice.shrunk(params.collar), sampling);
    let tau = 1.5 * report.bound_t;
    (report, tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnet {
    pub integral: f64,
    pub genus: u64,
    /// `2π(2 − 2g)`.
    pub expected: f64,
}

impl GaussBonnet {
    pub fn relative_error(&self) -> f64 {
        if self.expected == 0.0 {
            self.integral.abs()
        } else {
            ((self.integral - self.expected) / self.expected).abs()
        }
    }
}

/// Quadrature resolution for [`gauss_bonnet_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaussBonnetGrid {
    /// Gauss panels along each tube.
    pub panels: usize,
    /// Uniform samples around each tube and per unit length on the planes.
    pub around: usize,
}

impl Default for GaussBonnetGrid {
    fn default() -> Self {
        Self {
            panels: 64,
            around: 64,
        }
    }
}

/// `∫ K dA` over a compact atlas. Tubes are integrated over `t ∈ [0, L]`
/// with Gauss panels in `t` and the periodic trapezoid rule in `θ`; planes
/// over the region outside the attachment circles with the midpoint rule.
pub fn gauss_bonnet_integral(atlas: &Atlas, grid: GaussBonnetGrid) -> Result<GaussBonnet> {
    if !atlas.is_compact() {
        return Err(Error::InvalidParameter(
            "Gauss–Bonnet needs a compact atlas".into(),
        ));
    }
    let rule = GaussRule::new(8);
    let mut total = KahanSum::default();
    for chart in atlas.charts() {
        match (&chart.domain, chart.id.kind) {
            (Domain::Revolution { .. }, ChartKind::Tube) => {
                let len = atlas
                    .links_of(chart.id)
                    .map(|l| l.t_attach)
                    .fold(0.0_f64, f64::max);
                let n = grid.around;
                let dth = TAU / n as f64;
                let panel = len / grid.panels as f64;
                for p in 0..grid.panels {
                    for (t, w) in rule.mapped(p as f64 * panel, (p + 1) as f64 * panel) {
                        let mut ring = KahanSum::default();
                        for k in 0..n {
                            let l = chart.metric.local([t, k as f64 * dth]);
                            ring.add(l.curvature * l.g.det().sqrt());
                        }
                        total.add(w * dth * ring.value());
                    }
                }
            }
            (Domain::Planar { lo, hi, .. }, _) => {
                let nx = ((hi[0] - lo[0]) * grid.around as f64).ceil() as usize;
                let ny = ((hi[1] - lo[1]) * grid.around as f64).ceil() as usize;
                let (hx, hy) = ((hi[0] - lo[0]) / nx as f64, (hi[1] - lo[1]) / ny as f64);
                for i in 0..nx {
                    for j in 0..ny {
                        let x = [lo[0] + (i as f64 + 0.5) * hx, lo[1] + (j as f64 + 0.5) * hy];
                        let outside = atlas.links_of(chart.id).all(|l| {
                            let d = atlas.displacement(chart, x, l.center);
                            d[0].hypot(d[1]) >= l.attach_radius
                        });
                        if outside {
                            let l = chart.metric.local(x);
                            if l.curvature != 0.0 {
                                total.add(l.curvature * l.g.det().sqrt() * hx * hy);
                            }
                        }
                    }
                }
            }
            (Domain::Revolution { .. }, _) => {
                return Err(Error::InvalidParameter(
                    "unsupported chart in compact atlas".into(),
                ));
            }
        }
    }
    let genus = atlas.tube_count() as u64 + 1;
    Ok(GaussBonnet {
        integral: total.value(),
        genus,
        expected: TAU * (2.0 - 2.0 * genus as f64),
    })
}
