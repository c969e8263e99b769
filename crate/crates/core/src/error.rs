use thiserror::Error;

use crate::chart::ChartId;

/// Errors raised by geometry construction, integration and analysis.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("point {coords:?} lies outside the domain of chart {chart}")]
    OutOfDomain { chart: ChartId, coords: [f64; 2] },

    #[error("metric is not positive definite at {coords:?} in chart {chart} (det = {det:e})")]
    NotPositiveDefinite {
        chart: ChartId,
        coords: [f64; 2],
        det: f64,
    },

    #[error("point {coords:?} of chart {chart} is not in any overlap region")]
    NoOverlap { chart: ChartId, coords: [f64; 2] },

    #[error("unknown chart {0}")]
    UnknownChart(ChartId),

    #[error("trajectory left the atlas at t = {time} (chart {chart}, coords {coords:?})")]
    DomainEscape {
        chart: ChartId,
        coords: [f64; 2],
        time: f64,
    },

    #[error("step size control failed at t = {time} (h = {step:e})")]
    StepFailure { time: f64, step: f64 },

    #[error("degenerate cone: edge vectors are parallel or zero")]
    DegenerateCone,

    #[error("singular matrix (det = {0:e})")]
    SingularMatrix(f64),

    #[error("infeasible tube profile: {0}")]
    InfeasibleProfile(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("embedding is not periodic on the model surface (2πR1 = {m}, 2πR2 = {n})")]
    NonPeriodic { m: f64, n: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
