//! Single-chart reference surfaces with known curvature.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::chart::{Atlas, Chart, ChartId, Domain, DEFAULT_COLLAR};
use crate::metrics::{FlatMetric, HalfPlaneMetric, RevolutionMetric};
use crate::profile::AnalyticProfile;

/// The flat torus `[0, width) × [0, height)`.
pub fn flat_torus(width: f64, height: f64) -> Atlas {
    Atlas::new(
        "flat-torus",
        vec![Chart {
            id: ChartId::bottom(0),
            domain: Domain::Planar {
                lo: [0.0, 0.0],
                hi: [width, height],
                periodic: [true, true],
            },
            metric: Arc::new(FlatMetric),
            immersion: None,
        }],
        Vec::new(),
        DEFAULT_COLLAR,
        true,
    )
}

/// The surface of revolution `ρ = cosh t`, of constant curvature −1.
pub fn hyperbolic_cylinder() -> Atlas {
    revolution("hyperbolic-cylinder", AnalyticProfile::Cosh, 25.0)
}

/// The unit sphere without small polar caps, curvature +1.
pub fn sphere_band() -> Atlas {
    revolution("sphere-band", AnalyticProfile::Cos, FRAC_PI_2 - 0.05)
}

/// A circular cylinder of the given radius (flat).
pub fn cylinder(radius: f64) -> Atlas {
    revolution("cylinder", AnalyticProfile::Constant(radius), 1e6)
}

fn revolution(label: &str, profile: AnalyticProfile, half_length: f64) -> Atlas {
    Atlas::new(
        label,
        vec![Chart {
            id: ChartId::tube(0),
            domain: Domain::Revolution {
                t_lo: -half_length,
                t_hi: half_length,
            },
            metric: Arc::new(RevolutionMetric::new(Arc::new(profile))),
            immersion: None,
        }],
        Vec::new(),
        DEFAULT_COLLAR,
        false,
    )
}

/// The Poincaré upper half-plane, restricted to `y ≥ 10⁻⁶`.
pub fn half_plane() -> Atlas {
    Atlas::new(
        "half-plane",
        vec![Chart {
            id: ChartId::bottom(0),
            domain: Domain::Planar {
                lo: [-1e9, 1e-6],
                hi: [1e9, 1e9],
                periodic: [false, false],
            },
            metric: Arc::new(HalfPlaneMetric),
            immersion: None,
        }],
        Vec::new(),
        DEFAULT_COLLAR,
        false,
    )
}
