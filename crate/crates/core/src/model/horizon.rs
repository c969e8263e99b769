//! Free-flight times of straight rays in a ℤ²-periodic disk array.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DiskLattice;

/// Largest numerator/denominator of the rational directions checked for
/// corridors.
pub const CORRIDOR_Q_MAX: i64 = 20;
pub const RANDOM_RAYS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub point: [f64; 2],
    pub angle: f64,
}

/// A strip of directions `(p, q)` missing every disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    pub direction: [i64; 2],
    pub angle: f64,
    /// Signed distance of the strip's centre line from the origin, measured
    /// along the left normal of the direction, reduced modulo the line
    /// spacing of the direction.
    pub offset: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonReport {
    /// Longest observed free flight before entering an open disk.
    pub bound_t: f64,
    pub worst_ray: Ray,
    pub violated: bool,
    pub corridor_witness: Option<Corridor>,
    pub corridors: Vec<Corridor>,
    pub rays_traced: usize,
    pub t_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonSampling {
    /// Directions per start point.
    pub angular: usize,
    /// Start points per disk boundary.
    pub offsets: usize,
    pub random_rays: usize,
    pub t_max: f64,
    pub seed: u64,
}

impl Default for HorizonSampling {
    fn default() -> Self {
        Self {
            angular: 512,
            offsets: 256,
            random_rays: RANDOM_RAYS,
            t_max: 100.0,
            seed: 0,
        }
    }
}

/// Time until `p + t·d` first enters an open disk, or `None` before `t_max`.
pub fn free_flight(lattice: &DiskLattice, p: [f64; 2], d: [f64; 2], t_max: f64) -> Option<f64> {
    let mut cell = [p[0].floor() as i64, p[1].floor() as i64];
    let step = [d[0].signum() as i64, d[1].signum() as i64];
    let next_edge = |c: i64, s: i64| if s > 0 { (c + 1) as f64 } else { c as f64 };
    let inv = [1.0 / d[0], 1.0 / d[1]];
    let mut t_cross = [
        if d[0] != 0.0 {
            (next_edge(cell[0], step[0]) - p[0]) * inv[0]
        } else {
            f64::INFINITY
        },
        if d[1] != 0.0 {
            (next_edge(cell[1], step[1]) - p[1]) * inv[1]
        } else {
            f64::INFINITY
        },
    ];
    let dt = [inv[0].abs(), inv[1].abs()];
    loop {
        let t_exit = t_cross[0].min(t_cross[1]);
        let mut best = f64::INFINITY;
        for di in -1..=1 {
            for dj in -1..=1 {
                let base = [(cell[0] + di) as f64, (cell[1] + dj) as f64];
                for disk in &lattice.disks {
                    let c = [
                        base[0] + disk.center[0] - p[0],
                        base[1] + disk.center[1] - p[1],
                    ];
                    let b = c[0] * d[0] + c[1] * d[1];
                    let q = c[0] * c[0] + c[1] * c[1] - disk.radius * disk.radius;
                    let disc = b * b - q;
                    if disc <= 0.0 {
                        continue;
                    }
                    let t1 = b - disc.sqrt();
                    if t1 > 1e-12 && t1 < best {
                        best = t1;
                    }
                }
            }
        }
        if best <= t_exit {
            return (best <= t_max).then_some(best);
        }
        if t_exit > t_max {
            return None;
        }
        let a = if t_cross[0] < t_cross[1] { 0 } else { 1 };
        cell[a] += step[a];
        t_cross[a] += dt[a];
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Corridors along rational directions `(p, q)` with `|p|, |q| ≤ q_max`:
/// projecting every disk onto the normal of the direction gives open
/// intervals on a circle of circumference `1/|(p, q)|`; a corridor is a
/// gap left by their union. Intervals that merely touch leave a gap.
pub fn rational_corridors(lattice: &DiskLattice, q_max: i64) -> Vec<Corridor> {
    let mut out = Vec::new();
    for p in 0..=q_max {
        for q in -q_max..=q_max {
            if gcd(p, q) != 1 || (p == 0 && q != 1) {
                continue;
            }
            let len = ((p * p + q * q) as f64).sqrt();
            let period = 1.0 / len;
            let normal = [-(q as f64) / len, p as f64 / len];
            let mut spans: Vec<(f64, f64)> = lattice
                .disks
                .iter()
                .map(|d| {
                    let o = (normal[0] * d.center[0] + normal[1] * d.center[1]).rem_euclid(period);
                    (o - d.radius, o + d.radius)
                })
                .collect();
            let angle = (q as f64).atan2(p as f64);
            if spans.is_empty() {
                out.push(Corridor {
                    direction: [p, q],
                    angle,
                    offset: 0.0,
                    width: f64::INFINITY,
                });
                continue;
            }
            if spans.iter().any(|(a, b)| b - a >= period) {
                continue;
            }
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            // Sweep once around the circle, starting at the first interval.
            let start = spans[0].0;
            let mut reach = spans[0].1;
            let mut best: Option<(f64, f64)> = None;
            let mut consider = |lo: f64, hi: f64| {
                if hi >= lo && best.is_none_or(|(a, b)| hi - lo > b - a) {
                    best = Some((lo, hi));
                }
            };
            for &(a, b) in spans
                .iter()
                .skip(1)
                .chain(std::iter::once(&(start + period, start + period)))
            {
                if a >= reach {
                    consider(reach, a);
                }
                reach = reach.max(b);
            }
            if let Some((lo, hi)) = best {
                let mid = (0.5 * (lo + hi)).rem_euclid(period);
                let offset = if mid > 0.5 * period {
                    mid - period
                } else {
                    mid
                };
                out.push(Corridor {
                    direction: [p, q],
                    angle,
                    offset,
                    width: hi - lo,
                });
            }
        }
    }
    out
}

/// Longest free flight over rays leaving each disk boundary in every
/// outgoing direction of a grid, seeded random rays, and rays along every
/// rational corridor.
pub fn finite_horizon_bound(lattice: &DiskLattice, sampling: &HorizonSampling) -> HorizonReport {
    let corridors = rational_corridors(lattice, CORRIDOR_Q_MAX);
    let mut rays: Vec<Ray> = Vec::new();
    for disk in &lattice.disks {
        for i in 0..sampling.offsets {
            let phi = TAU * i as f64 / sampling.offsets as f64;
            let n = [phi.cos(), phi.sin()];
            let point = [
                disk.center[0] + disk.radius * n[0],
                disk.center[1] + disk.radius * n[1],
            ];
            for k in 0..sampling.angular {
                let a = TAU * k as f64 / sampling.angular as f64;
                if a.cos() * n[0] + a.sin() * n[1] > 0.0 {
                    rays.push(Ray { point, angle: a });
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut drawn = 0;
    let mut attempts = 0;
    while drawn < sampling.random_rays && attempts < 100 * sampling.random_rays.max(1) {
        attempts += 1;
        let point = [rng.gen::<f64>(), rng.gen::<f64>()];
        let angle = rng.gen::<f64>() * TAU;
        if lattice.inside_any(point) {
            continue;
        }
        rays.push(Ray { point, angle });
        drawn += 1;
    }
    for c in &corridors {
        let normal = [-c.angle.sin(), c.angle.cos()];
        rays.push(Ray {
            point: [c.offset * normal[0], c.offset * normal[1]],
            angle: c.angle,
        });
    }
    if rays.is_empty() {
        rays.push(Ray {
            point: [0.5, 0.5],
            angle: 0.0,
        });
    }

    let t_max = sampling.t_max;
    let times: Vec<f64> = rays
        .par_iter()
        .map(|r| {
            free_flight(lattice, r.point, [r.angle.cos(), r.angle.sin()], t_max)
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    let (worst, &bound) = times
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one ray");
    let violated = bound.is_infinite();
    let witness = corridors
        .iter()
        .copied()
        .min_by(|a, b| {
            let norm = |c: &Corridor| c.direction[0].pow(2) + c.direction[1].pow(2);
            let wider = if (a.width - b.width).abs() <= 1e-12 {
                std::cmp::Ordering::Equal
            } else {
                b.width.total_cmp(&a.width)
            };
            wider
                .then(norm(a).cmp(&norm(b)))
                .then(a.direction[1].abs().cmp(&b.direction[1].abs()))
                .then(b.direction[1].cmp(&a.direction[1]))
        })
        .or_else(|| {
            violated.then(|| Corridor {
                direction: [0, 0],
                angle: rays[worst].angle,
                offset: 0.0,
                width: 0.0,
            })
        });
    HorizonReport {
        bound_t: if violated { t_max } else { bound },
        worst_ray: rays[worst],
        violated,
        corridor_witness: if violated { witness } else { None },
        corridors,
        rays_traced: rays.len(),
        t_max,
    }
}

/// Angle of a direction `(p, q)` folded into `[0, π)`.
pub fn direction_angle(direction: [i64; 2]) -> f64 {
    (direction[1] as f64)
        .atan2(direction[0] as f64)
        .rem_euclid(PI)
}
