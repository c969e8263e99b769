//! Concrete chart metrics.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::chart::{Christoffel, Immersion, LocalGeometry, MetricField, MetricJet, Sym2};
use crate::jet::Jet2;
use crate::profile::RadiusProfile;

/// The Euclidean metric in Cartesian coordinates.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatMetric;

impl MetricField for FlatMetric {
    fn jet(&self, _x: [f64; 2]) -> MetricJet {
        MetricJet {
            g11: Jet2::constant(1.0),
            g12: Jet2::constant(0.0),
            g22: Jet2::constant(1.0),
        }
    }

    fn local(&self, _x: [f64; 2]) -> LocalGeometry {
        LocalGeometry {
            g: Sym2::IDENTITY,
            christoffel: Christoffel::default(),
            curvature: 0.0,
        }
    }

    fn value(&self, _x: [f64; 2]) -> Sym2 {
        Sym2::IDENTITY
    }
}

/// `dt² + ρ(t)² dθ²` in coordinates `(t, θ)`.
#[derive(Debug, Clone)]
pub struct RevolutionMetric {
    pub profile: Arc<dyn RadiusProfile>,
}

impl RevolutionMetric {
    pub fn new(profile: Arc<dyn RadiusProfile>) -> Self {
        Self { profile }
    }
}

impl MetricField for RevolutionMetric {
    fn jet(&self, x: [f64; 2]) -> MetricJet {
        let r = self.profile.radius(x[0]);
        let rho = Jet2::var(x[0], 0).compose([r[0], r[1], r[2]]);
        MetricJet {
            g11: Jet2::constant(1.0),
            g12: Jet2::constant(0.0),
            g22: rho * rho,
        }
    }

    fn local(&self, x: [f64; 2]) -> LocalGeometry {
        let [r, r1, r2, _] = self.profile.radius(x[0]);
        LocalGeometry {
            g: Sym2::diag(1.0, r * r),
            christoffel: Christoffel {
                gamma: [[0.0, 0.0, -r * r1], [0.0, r1 / r, 0.0]],
            },
            curvature: -r2 / r,
        }
    }

    fn value(&self, x: [f64; 2]) -> Sym2 {
        let r = self.profile.radius(x[0])[0];
        Sym2::diag(1.0, r * r)
    }
}

/// The Poincaré half-plane `(dx² + dy²)/y²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfPlaneMetric;

impl MetricField for HalfPlaneMetric {
    fn jet(&self, x: [f64; 2]) -> MetricJet {
        let y = Jet2::var(x[1], 1);
        let g = (y * y).recip();
        MetricJet {
            g11: g,
            g12: Jet2::constant(0.0),
            g22: g,
        }
    }
}

/// A diagonal metric on the ambient `(u, v, w)` slab.
pub trait AmbientMetric: Send + Sync + fmt::Debug {
    fn diagonal(&self, p: &[Jet2; 3]) -> [Jet2; 3];
}

/// The identity matrix.
#[derive(Debug, Clone, Copy, Default)]
pub struct EuclideanSlab;

impl AmbientMetric for EuclideanSlab {
    fn diagonal(&self, _p: &[Jet2; 3]) -> [Jet2; 3] {
        [Jet2::constant(1.0); 3]
    }
}

/// The chart metric `Jᵀ Q J` induced through an immersion `P` with
/// Jacobian `J` into a slab carrying the diagonal metric `Q`.
#[derive(Debug, Clone)]
pub struct InducedMetric {
    pub immersion: Immersion,
    pub ambient: Arc<dyn AmbientMetric>,
}

impl MetricField for InducedMetric {
    fn jet(&self, x: [f64; 2]) -> MetricJet {
        let p = self.immersion.position(x);
        let [a, b] = self.immersion.tangents(x);
        let q = self.ambient.diagonal(&p);
        let form = |e: &[Jet2; 3], f: &[Jet2; 3]| {
            q[0] * e[0] * f[0] + q[1] * e[1] * f[1] + q[2] * e[2] * f[2]
        };
        MetricJet {
            g11: form(&a, &a),
            g12: form(&a, &b),
            g22: form(&b, &b),
        }
    }
}

/// A base chart metric multiplied by `1 + ε·cos(2πu)·cos(2πv)`, where
/// `(u, v)` is the slab position of the chart point. The factor is
/// ℤ²-periodic, so the perturbation is well defined on every quotient.
#[derive(Debug, Clone)]
pub struct BumpPerturbation {
    pub base: Arc<dyn MetricField>,
    pub immersion: Immersion,
    pub amplitude: f64,
}

impl BumpPerturbation {
    /// Sum of the sup norms of the factor's deviation and its first and
    /// second derivatives, per unit amplitude.
    pub const C2_NORM_PER_AMPLITUDE: f64 = 1.0 + TAU + TAU * TAU;
}

impl MetricField for BumpPerturbation {
    fn jet(&self, x: [f64; 2]) -> MetricJet {
        let p = self.immersion.position(x);
        let f = (p[0] * TAU).cos() * (p[1] * TAU).cos() * self.amplitude + 1.0;
        let g = self.base.jet(x);
        MetricJet {
            g11: f * g.g11,
            g12: f * g.g12,
            g22: f * g.g22,
        }
    }
}
