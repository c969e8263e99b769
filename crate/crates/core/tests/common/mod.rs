#![allow(dead_code)]

use std::f64::consts::TAU;

use anosov_core::chart::Domain;
use anosov_core::flow::TangentState;
use anosov_core::model::{assemble_model_atlas, DiskLattice, ModelSurface};
use anosov_core::{Atlas, ChartId, ChartPoint};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn model() -> ModelSurface {
    assemble_model_atlas(&DiskLattice::default_two_disk(), None).unwrap()
}

/// A uniformly random point of the chart's fundamental domain.
pub fn random_point(atlas: &Atlas, id: ChartId, rng: &mut ChaCha8Rng) -> ChartPoint {
    let chart = atlas.chart(id).unwrap();
    loop {
        let x = match &chart.domain {
            Domain::Planar { lo, hi, .. } => {
                [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])]
            }
            Domain::Revolution { t_lo, t_hi } => {
                [rng.gen_range(*t_lo..*t_hi), rng.gen_range(0.0..TAU)]
            }
        };
        let p = ChartPoint::new(id, x);
        if atlas.contains(&p).unwrap() {
            return p;
        }
    }
}

/// A random unit tangent vector over a random chart.
pub fn random_state(atlas: &Atlas, rng: &mut ChaCha8Rng) -> TangentState {
    let charts = atlas.charts();
    let id = charts[rng.gen_range(0..charts.len())].id;
    let p = random_point(atlas, id, rng);
    TangentState::with_angle(atlas, p, rng.gen_range(0.0..TAU)).unwrap()
}
