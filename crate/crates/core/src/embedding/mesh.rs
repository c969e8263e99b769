//! Triangle meshes of the embedded surface over one fundamental region.
//!
//! Each torus `w = 0, 1` is a periodic `u × v` grid. Grid cells whose
//! centres fall inside a disk are dropped, leaving a staircase hole whose
//! boundary loop is identical on both tori; the tube over that disk is a
//! strip of quads joining the two loops through intermediate rings placed
//! on the tube profile. Seams are identified by vertex index.

use std::collections::HashMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{embed_point, periodicity_check, EmbeddingParams};
use crate::chart::Immersion;
use crate::error::{Error, Result};
use crate::model::{DiskLattice, ProfileParams};
use crate::profile::TubeProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshResolution {
    /// Grid cells along `u` over the whole fundamental region.
    pub u_cells: usize,
    /// Grid cells along `v` over the whole fundamental region.
    pub v_cells: usize,
    /// Vertex rings strictly between the two attachment loops of a tube.
    pub tube_rings: usize,
}

impl MeshResolution {
    /// `cells` grid cells per unit length over an `m × n` region.
    pub fn per_unit(cells: usize, m: u64, n: u64, tube_rings: usize) -> Self {
        Self {
            u_cells: cells * m as usize,
            v_cells: cells * n as usize,
            tube_rings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    /// Slab coordinates `(u, v, w)` each vertex was mapped from.
    pub sources: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    /// Faces belonging to the two tori; the rest belong to tubes.
    pub plane_faces: usize,
}

impl Mesh {
    fn push_vertex(&mut self, source: [f64; 3], params: &EmbeddingParams) -> usize {
        self.sources.push(source);
        self.vertices.push(embed_point(source, params));
        self.vertices.len() - 1
    }

    fn edge_uses(&self, faces: &[[usize; 3]]) -> HashMap<(usize, usize), (u32, u32)> {
        let mut uses: HashMap<(usize, usize), (u32, u32)> = HashMap::new();
        for f in faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let e = uses.entry((a.min(b), a.max(b))).or_default();
                if a < b {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        uses
    }

    pub fn edge_count(&self) -> usize {
        self.edge_uses(&self.faces).len()
    }

    /// `V − E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.faces.len() as i64
    }

    /// Every edge bounds exactly two faces, traversed in opposite senses.
    pub fn is_closed_oriented(&self) -> bool {
        self.edge_uses(&self.faces)
            .values()
            .all(|&(f, b)| f == 1 && b == 1)
    }

    /// Edges used by exactly one face of the given range.
    pub fn boundary_edges(&self, faces: std::ops::Range<usize>) -> usize {
        self.edge_uses(&self.faces[faces])
            .values()
            .filter(|&&(f, b)| f + b == 1)
            .count()
    }

    /// Plain-text polygon format: `v x y z` and 1-indexed `f i j k` records.
    pub fn write_obj(&self, mut out: impl Write) -> io::Result<()> {
        for v in &self.vertices {
            writeln!(out, "v {} {} {}", v[0], v[1], v[2])?;
        }
        for f in &self.faces {
            writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        Ok(())
    }
}

struct Hole {
    center: [f64; 2],
    profile: usize,
}

/// Meshes `X(𝓜)` over the fundamental region `[0, m] × [0, n]` fixed by
/// the radii. Requires integer periods and an embedded slab.
pub fn export_mesh(
    lattice: &DiskLattice,
    profile: ProfileParams,
    params: &EmbeddingParams,
    res: MeshResolution,
) -> Result<Mesh> {
    let (m, n) = periodicity_check(params).ok_or(Error::NonPeriodic {
        m: params.periods()[0],
        n: params.periods()[1],
    })?;
    params.require_slab_embedded()?;
    lattice.validate()?;
    let (nu, nv) = (res.u_cells, res.v_cells);
    if nu < 2 || nv < 2 {
        return Err(Error::InvalidParameter(
            "mesh needs at least 2 cells per axis".into(),
        ));
    }
    let profiles = lattice
        .disks
        .iter()
        .map(|d| TubeProfile::build(d.radius, profile.neck_fraction * d.radius, profile.collar))
        .collect::<Result<Vec<_>>>()?;
    let (hu, hv) = (m as f64 / nu as f64, n as f64 / nv as f64);
    let wrap = |x: f64, p: f64| x - p * (x / p).round();

    // Which disk instance, if any, owns each cell.
    let nd = lattice.disks.len();
    let mut holes: Vec<Hole> = Vec::new();
    let mut hole_index: HashMap<(i64, i64, usize), usize> = HashMap::new();
    let mut owner = vec![None; nu * nv];
    for i in 0..nu {
        for j in 0..nv {
            let p = [(i as f64 + 0.5) * hu, (j as f64 + 0.5) * hv];
            for (k, disk) in lattice.disks.iter().enumerate() {
                let shift = [
                    (p[0] - disk.center[0]).round(),
                    (p[1] - disk.center[1]).round(),
                ];
                let d = [
                    p[0] - disk.center[0] - shift[0],
                    p[1] - disk.center[1] - shift[1],
                ];
                if d[0].hypot(d[1]) < disk.radius {
                    let cell = (
                        (shift[0] as i64).rem_euclid(m as i64),
                        (shift[1] as i64).rem_euclid(n as i64),
                        k,
                    );
                    let next = holes.len();
                    let h = *hole_index.entry(cell).or_insert(next);
                    if h == next {
                        holes.push(Hole {
                            center: [
                                cell.0 as f64 + disk.center[0],
                                cell.1 as f64 + disk.center[1],
                            ],
                            profile: k,
                        });
                    }
                    owner[i * nv + j] = Some(h);
                }
            }
        }
    }
    let expected = nd * (m * n) as usize;
    if holes.len() != expected {
        return Err(Error::InvalidParameter(format!(
            "grid {nu}×{nv} resolves {} of {expected} disks",
            holes.len()
        )));
    }
    let cell = |i: i64, j: i64| {
        owner[(i.rem_euclid(nu as i64) * nv as i64 + j.rem_euclid(nv as i64)) as usize]
    };
    for i in 0..nu as i64 {
        for j in 0..nv as i64 {
            if let Some(h) = cell(i, j) {
                for (di, dj) in [(1, 0), (0, 1), (1, 1), (1, -1)] {
                    if let Some(g) = cell(i + di, j + dj) {
                        if g != h {
                            return Err(Error::InvalidParameter(format!(
                                "holes {h} and {g} touch on a {nu}×{nv} grid"
                            )));
                        }
                    }
                }
            }
        }
    }

    let mut mesh = Mesh::default();
    // Grid vertices used by a kept cell, per torus.
    let mut grid_vertex = [vec![usize::MAX; nu * nv], vec![usize::MAX; nu * nv]];
    let vid = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    for (layer, w) in [0.0, 1.0].into_iter().enumerate() {
        for i in 0..nu {
            for j in 0..nv {
                if owner[i * nv + j].is_some() {
                    continue;
                }
                let corners = [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)];
                let mut idx = [0; 4];
                for (c, &g) in corners.iter().enumerate() {
                    if grid_vertex[layer][g] == usize::MAX {
                        let (gi, gj) = (g / nv, g % nv);
                        grid_vertex[layer][g] =
                            mesh.push_vertex([gi as f64 * hu, gj as f64 * hv, w], params);
                    }
                    idx[c] = grid_vertex[layer][g];
                }
                let [a, b, c, d] = idx;
                if layer == 0 {
                    mesh.faces.push([a, b, c]);
                    mesh.faces.push([a, c, d]);
                } else {
                    mesh.faces.push([a, c, b]);
                    mesh.faces.push([a, d, c]);
                }
            }
        }
    }
    mesh.plane_faces = mesh.faces.len();

    // Hole boundaries as directed grid edges of the bottom torus with the
    // kept region on the left.
    let mut next_of: Vec<HashMap<usize, usize>> =
        (0..holes.len()).map(|_| HashMap::new()).collect();
    for i in 0..nu as i64 {
        for j in 0..nv as i64 {
            let Some(h) = cell(i, j) else { continue };
            let v = |a: i64, b: i64| {
                vid(
                    a.rem_euclid(nu as i64) as usize,
                    b.rem_euclid(nv as i64) as usize,
                )
            };
            // Kept neighbour below, right, above, left; edge runs with the
            // hole on the right.
            let sides = [
                ((i, j - 1), (v(i, j), v(i + 1, j))),
                ((i + 1, j), (v(i + 1, j), v(i + 1, j + 1))),
                ((i, j + 1), (v(i + 1, j + 1), v(i, j + 1))),
                ((i - 1, j), (v(i, j + 1), v(i, j))),
            ];
            for ((a, b), (from, to)) in sides {
                if cell(a, b).is_none() {
                    // Reverse of the kept face's edge.
                    next_of[h].insert(to, from);
                }
            }
        }
    }
    for (h, hole) in holes.iter().enumerate() {
        let edges = &next_of[h];
        let start = *edges.keys().min().expect("hole has a boundary");
        let mut lp = vec![start];
        let mut at = edges[&start];
        while at != start {
            lp.push(at);
            at = *edges
                .get(&at)
                .ok_or_else(|| Error::InvalidParameter("hole boundary is not a loop".into()))?;
            if lp.len() > edges.len() {
                return Err(Error::InvalidParameter(
                    "hole boundary is not a simple loop".into(),
                ));
            }
        }
        if lp.len() != edges.len() {
            return Err(Error::InvalidParameter(
                "hole boundary is not a simple loop".into(),
            ));
        }
        let profile = &profiles[hole.profile];
        let len = profile.length();
        let immersion = Immersion::Tube {
            center: hole.center,
            profile: std::sync::Arc::new(profile.clone()),
        };
        let mut rings: Vec<Vec<usize>> = vec![lp.iter().map(|&g| grid_vertex[0][g]).collect()];
        for r in 1..=res.tube_rings {
            let t = len * r as f64 / (res.tube_rings + 1) as f64;
            let ring = lp
                .iter()
                .map(|&g| {
                    let (gi, gj) = (g / nv, g % nv);
                    let du = wrap(gi as f64 * hu - hole.center[0], m as f64);
                    let dv = wrap(gj as f64 * hv - hole.center[1], n as f64);
                    let p = immersion.point([t, dv.atan2(du)]);
                    mesh.push_vertex(p, params)
                })
                .collect();
            rings.push(ring);
        }
        rings.push(lp.iter().map(|&g| grid_vertex[1][g]).collect());
        let k = lp.len();
        for pair in rings.windows(2) {
            let (lo, hi) = (&pair[0], &pair[1]);
            for a in 0..k {
                let b = (a + 1) % k;
                mesh.faces.push([lo[b], lo[a], hi[a]]);
                mesh.faces.push([lo[b], hi[a], hi[b]]);
            }
        }
    }
    Ok(mesh)
}
