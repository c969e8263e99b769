//! Radius profiles for surfaces of revolution, including the smooth
//! negatively curved tube that joins the two planes of the model surface.
//!
//! A tube is parametrized by arclength `t ∈ [0, L]` along its meridian:
//! `ρ(t)` is the distance to the axis and `w(t)` the height. The slope is
//! `ρ′ = −1 + 2·S(σ)` with `σ = (t − collar)/(L − 2·collar)` and `S` a
//! monotone C∞ step, so `ρ″ = 2·S′/(L − 2·collar) ≥ 0` and the tube meets
//! both planes tangentially through flat collars.

use std::fmt;

use crate::error::{Error, Result};
use crate::quadrature::{GaussRule, KahanSum};

/// Distance from the axis together with its first three derivatives.
pub trait RadiusProfile: Send + Sync + fmt::Debug {
    fn radius(&self, t: f64) -> [f64; 4];
}

/// Closed-form profiles used as analytic test surfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticProfile {
    /// `ρ = cosh t`: the hyperbolic cylinder, curvature −1.
    Cosh,
    /// `ρ = cos t` on `(−π/2, π/2)`: the unit sphere, curvature +1.
    Cos,
    /// Straight cylinder of the given radius.
    Constant(f64),
}

impl RadiusProfile for AnalyticProfile {
    fn radius(&self, t: f64) -> [f64; 4] {
        match *self {
            AnalyticProfile::Cosh => {
                let (c, s) = (t.cosh(), t.sinh());
                [c, s, c, s]
            }
            AnalyticProfile::Cos => {
                let (s, c) = t.sin_cos();
                [c, -s, -c, s]
            }
            AnalyticProfile::Constant(r) => [r, 0.0, 0.0, 0.0],
        }
    }
}

const BUMP_INTERVALS: usize = 4096;
const PROFILE_INTERVALS: usize = 4096;

fn bump(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        (-1.0 / (x * (1.0 - x))).exp()
    }
}

/// `bump′ / bump`, finite on the open interval.
fn bump_log_slope(x: f64) -> f64 {
    let q = x * (1.0 - x);
    (1.0 - 2.0 * x) / (q * q)
}

/// Quintic Hermite interpolation on a uniform grid from values and exact
/// first and second derivatives at the nodes.
#[derive(Debug, Clone)]
struct HermiteTable {
    x0: f64,
    h: f64,
    f: Vec<[f64; 3]>,
}

impl HermiteTable {
    fn eval(&self, x: f64) -> f64 {
        let n = self.f.len() - 1;
        let p = ((x - self.x0) / self.h).clamp(0.0, n as f64);
        let i = (p.floor() as usize).min(n - 1);
        let s = p - i as f64;
        let [a0, a1, a2] = self.f[i];
        let [b0, b1, b2] = self.f[i + 1];
        let h = self.h;
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        let h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        a0 * (1.0 - h3)
            + h * a1 * (s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5)
            + h * h * a2 * (0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5)
            + b0 * h3
            + h * b1 * (-4.0 * s3 + 7.0 * s4 - 3.0 * s5)
            + h * h * b2 * (0.5 * s3 - s4 + 0.5 * s5)
    }
}

/// The normalized integral of the standard bump `exp(−1/(x(1−x)))`: a C∞
/// step from 0 on `x ≤ 0` to 1 on `x ≥ 1`.
#[derive(Debug, Clone)]
pub struct SmoothStep {
    norm: f64,
    table: HermiteTable,
}

impl Default for SmoothStep {
    fn default() -> Self {
        Self::new()
    }
}

impl SmoothStep {
    pub fn new() -> Self {
        let rule = GaussRule::new(8);
        let h = 1.0 / BUMP_INTERVALS as f64;
        let mut cum = Vec::with_capacity(BUMP_INTERVALS + 1);
        let mut acc = KahanSum::default();
        cum.push(0.0);
        for i in 0..BUMP_INTERVALS {
            let lo = i as f64 * h;
            acc.add(rule.integrate(lo, lo + h, bump));
            cum.push(acc.value());
        }
        let norm = acc.value();
        let f = cum
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let x = i as f64 * h;
                let b = bump(x) / norm;
                let b1 = if b > 0.0 { b * bump_log_slope(x) } else { 0.0 };
                [c / norm, b, b1]
            })
            .collect();
        Self {
            norm,
            table: HermiteTable { x0: 0.0, h, f },
        }
    }

    /// `[S, S′, S″]` at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        if x <= 0.0 {
            return [0.0, 0.0, 0.0];
        }
        if x >= 1.0 {
            return [1.0, 0.0, 0.0];
        }
        let b = bump(x) / self.norm;
        let b1 = if b > 0.0 { b * bump_log_slope(x) } else { 0.0 };
        [self.table.eval(x), b, b1]
    }
}

/// Shape of the convexity budget: a quick turn of size `(1−slow)/2` over a
/// fraction `turn` of the curved band at each end, plus a slow step of size
/// `slow` across the whole band keeping `ρ″` strictly positive inside.
#[derive(Debug, Clone, Copy, PartialEq)]
struct StepShape {
    turn: f64,
    slow: f64,
}

impl StepShape {
    fn eval(&self, step: &SmoothStep, x: f64) -> [f64; 3] {
        let a = self.turn;
        let q = 0.5 * (1.0 - self.slow);
        let e = step.eval(x / a);
        let m = step.eval(x);
        let l = step.eval((x - 1.0 + a) / a);
        [
            q * (e[0] + l[0]) + self.slow * m[0],
            q * (e[1] + l[1]) / a + self.slow * m[1],
            q * (e[2] + l[2]) / (a * a) + self.slow * m[2],
        ]
    }

    /// `(∫₀^½ (1 − 2S), ∫₀^1 2√(S(1−S)))`: radius drop and height per unit
    /// band length.
    fn moments(&self, step: &SmoothStep) -> (f64, f64) {
        let rule = GaussRule::new(8);
        let n = 512;
        let drop = rule.composite(0.0, 0.5, n, |x| 1.0 - 2.0 * self.eval(step, x)[0]);
        let rise = rule.composite(0.0, 0.5, n, |x| {
            let s = self.eval(step, x)[0];
            2.0 * (s * (1.0 - s)).max(0.0).sqrt()
        });
        (drop, 2.0 * rise)
    }
}

/// A smooth tube of height 1 attached tangentially to the planes `w = 0`
/// and `w = 1` along circles of radius `attach_radius`.
#[derive(Debug, Clone)]
pub struct TubeProfile {
    attach_radius: f64,
    depth: f64,
    collar: f64,
    band: f64,
    shape: StepShape,
    step: SmoothStep,
    /// `∫₀^σ (1 − 2S)` over `σ ∈ [0, ½]`.
    drop: HermiteTable,
    /// `∫₀^σ 2√(S(1−S))` over `σ ∈ [0, ½]`.
    rise: HermiteTable,
}

/// Fraction of the attachment radius removed at the waist when no depth is
/// requested.
pub const DEFAULT_NECK_FRACTION: f64 = 0.5;

impl TubeProfile {
    /// Builds a tube whose radius shrinks by `depth` from `attach_radius` at
    /// the collar ends to the waist at `t = L/2`.
    pub fn build(attach_radius: f64, depth: f64, collar: f64) -> Result<Self> {
        if !(attach_radius > 0.0 && attach_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "attachment radius must be positive, got {attach_radius}"
            )));
        }
        if !(collar >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "collar must be non-negative, got {collar}"
            )));
        }
        if !(depth > collar && depth < attach_radius) {
            return Err(Error::InfeasibleProfile(format!(
                "depth {depth} must lie in ({collar}, {attach_radius})"
            )));
        }
        let step = SmoothStep::new();
        let drop_of = |shape: StepShape| {
            let (d, h) = shape.moments(&step);
            collar + d / h
        };
        let mut turn = 0.5;
        while turn > 1e-3 {
            let lo = drop_of(StepShape { turn, slow: 0.0 });
            let hi = drop_of(StepShape { turn, slow: 1.0 });
            if depth > hi {
                return Err(Error::InfeasibleProfile(format!(
                    "a tube of height 1 cannot drop more than {hi:.4} from radius {attach_radius}"
                )));
            }
            if depth >= lo {
                let (mut a, mut b) = (0.0, 1.0);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if drop_of(StepShape { turn, slow: m }) < depth {
                        a = m;
                    } else {
                        b = m;
                    }
                    if b - a < 1e-15 {
                        break;
                    }
                }
                let shape = StepShape {
                    turn,
                    slow: 0.5 * (a + b),
                };
                return Ok(Self::tabulate(attach_radius, collar, shape, step));
            }
            turn *= 0.5;
        }
        Err(Error::InfeasibleProfile(format!(
            "depth {depth} too shallow for a tube of height 1 and collar {collar}"
        )))
    }

    /// Default tube for a disk of the given radius.
    pub fn for_radius(attach_radius: f64, collar: f64) -> Result<Self> {
        Self::build(attach_radius, DEFAULT_NECK_FRACTION * attach_radius, collar)
    }

    fn tabulate(attach_radius: f64, collar: f64, shape: StepShape, step: SmoothStep) -> Self {
        let rule = GaussRule::new(8);
        let h = 0.5 / PROFILE_INTERVALS as f64;
        let mut drop = Vec::with_capacity(PROFILE_INTERVALS + 1);
        let mut rise = Vec::with_capacity(PROFILE_INTERVALS + 1);
        let (mut dsum, mut rsum) = (KahanSum::default(), KahanSum::default());
        let node = |x: f64| {
            let [s, s1, s2] = shape.eval(&step, x);
            let u = s * (1.0 - s);
            let r1 = 2.0 * u.max(0.0).sqrt();
            let r2 = if u > 1e-280 {
                s1 * (1.0 - 2.0 * s) / u.sqrt()
            } else {
                0.0
            };
            ([1.0 - 2.0 * s, -2.0 * s1, -2.0 * s2], [r1, r2])
        };
        for i in 0..=PROFILE_INTERVALS {
            let x = i as f64 * h;
            if i > 0 {
                let lo = x - h;
                dsum.add(rule.integrate(lo, x, |y| 1.0 - 2.0 * shape.eval(&step, y)[0]));
                rsum.add(rule.integrate(lo, x, |y| {
                    let s = shape.eval(&step, y)[0];
                    2.0 * (s * (1.0 - s)).max(0.0).sqrt()
                }));
            }
            let (d, r) = node(x);
            drop.push([dsum.value(), d[0], d[1]]);
            rise.push([rsum.value(), r[0], r[1]]);
        }
        let half_rise = rsum.value();
        let band = 0.5 / half_rise;
        Self {
            attach_radius,
            depth: collar + band * dsum.value(),
            collar,
            band,
            shape,
            step,
            drop: HermiteTable {
                x0: 0.0,
                h,
                f: drop,
            },
            rise: HermiteTable {
                x0: 0.0,
                h,
                f: rise,
            },
        }
    }

    pub fn attach_radius(&self) -> f64 {
        self.attach_radius
    }

    /// Total meridian arclength `L`.
    pub fn length(&self) -> f64 {
        self.band + 2.0 * self.collar
    }

    pub fn collar(&self) -> f64 {
        self.collar
    }

    /// Actual radius drop from the attachment circle to the waist.
    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn waist(&self) -> f64 {
        self.attach_radius - self.depth
    }

    /// Length of the curved band between the two collars.
    pub fn band(&self) -> f64 {
        self.band
    }

    fn band_coord(&self, t: f64) -> f64 {
        (t - self.collar) / self.band
    }

    /// `[S, dS/dt, d²S/dt²]`.
    fn slope_step(&self, t: f64) -> [f64; 3] {
        let [s, s1, s2] = self.shape.eval(&self.step, self.band_coord(t));
        [s, s1 / self.band, s2 / (self.band * self.band)]
    }

    /// `[ρ, ρ′, ρ″, ρ‴]` for any real `t`; beyond the ends the tube
    /// continues as the flat annulus of the adjoining plane.
    pub fn radius(&self, t: f64) -> [f64; 4] {
        let l = self.length();
        let [s, s1, s2] = self.slope_step(t);
        let deriv = [-1.0 + 2.0 * s, 2.0 * s1, 2.0 * s2];
        let value = if t <= self.collar {
            self.attach_radius - t
        } else if t >= l - self.collar {
            self.attach_radius + (t - l)
        } else {
            let x = self.band_coord(t.min(l - t));
            self.attach_radius - self.collar - self.band * self.drop.eval(x)
        };
        [value, deriv[0], deriv[1], deriv[2]]
    }

    /// `[w, w′, w″]`.
    pub fn height(&self, t: f64) -> [f64; 3] {
        let l = self.length();
        let r = self.height_rate(t);
        let value = if t <= self.collar {
            0.0
        } else if t >= l - self.collar {
            1.0
        } else if t <= 0.5 * l {
            self.band * self.rise.eval(self.band_coord(t))
        } else {
            1.0 - self.band * self.rise.eval(self.band_coord(l - t))
        };
        [value, r[0], r[1]]
    }

    /// `[w′, w″, w‴]`, with `w′ = √(1 − ρ′²) = 2√(S(1−S))`.
    pub fn height_rate(&self, t: f64) -> [f64; 3] {
        let [s, s1, s2] = self.slope_step(t);
        let u = s * (1.0 - s);
        if u <= 1e-280 {
            return [0.0, 0.0, 0.0];
        }
        let du = s1 * (1.0 - 2.0 * s);
        let ddu = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
        let r = u.sqrt();
        [2.0 * r, du / r, ddu / r - 0.5 * du * du / (u * r)]
    }

    /// Gaussian curvature `−ρ″/ρ` of the tube.
    pub fn curvature(&self, t: f64) -> f64 {
        let r = self.radius(t);
        -r[2] / r[0]
    }
}

impl RadiusProfile for TubeProfile {
    fn radius(&self, t: f64) -> [f64; 4] {
        TubeProfile::radius(self, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_monotone_and_normalized() {
        let s = SmoothStep::new();
        assert_eq!(s.eval(0.0)[0], 0.0);
        assert_eq!(s.eval(1.0)[0], 1.0);
        assert!((s.eval(0.5)[0] - 0.5).abs() < 1e-14);
        let mut prev = 0.0;
        for i in 1..1000 {
            let x = i as f64 / 1000.0;
            let v = s.eval(x)[0];
            assert!(v >= prev);
            assert!((v + s.eval(1.0 - x)[0] - 1.0).abs() < 1e-13);
            prev = v;
        }
    }

    #[test]
    fn step_derivatives_match_differences() {
        let s = SmoothStep::new();
        let h = 1e-5;
        for x in [0.1, 0.3, 0.55, 0.8] {
            let [_, d1, d2] = s.eval(x);
            let fd1 = (s.eval(x + h)[0] - s.eval(x - h)[0]) / (2.0 * h);
            let fd2 = (s.eval(x + h)[1] - s.eval(x - h)[1]) / (2.0 * h);
            assert!(
                (d1 - fd1).abs() < 1e-8 * (1.0 + d1.abs()),
                "{x}: {d1} vs {fd1}"
            );
            assert!((d2 - fd2).abs() < 1e-6 * (1.0 + d2.abs()));
        }
    }

    #[test]
    fn tube_reaches_height_one_with_requested_depth() {
        for (r, d) in [(0.26, 0.13), (0.43, 0.215), (0.22, 0.11), (0.3, 0.25)] {
            let p = TubeProfile::build(r, d, 0.05).unwrap();
            let l = p.length();
            assert!((p.height(l)[0] - 1.0).abs() < 1e-12);
            assert!((p.depth() - d).abs() < 1e-9, "{r} {d}: {}", p.depth());
            assert!((p.radius(0.5 * l)[0] - (r - d)).abs() < 1e-9);
            assert_eq!(p.radius(0.0)[1], -1.0);
            assert_eq!(p.radius(l)[1], 1.0);
        }
    }

    #[test]
    fn infeasible_requests_are_rejected() {
        assert!(matches!(
            TubeProfile::build(0.2, 0.25, 0.05),
            Err(Error::InfeasibleProfile(_))
        ));
        assert!(matches!(
            TubeProfile::build(5.0, 4.9, 0.05),
            Err(Error::InfeasibleProfile(_))
        ));
    }
}
