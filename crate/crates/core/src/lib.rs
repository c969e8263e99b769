//! Geodesic flows and Jacobi fields on chart-atlas surfaces, cone-field
//! hyperbolicity scans, the periodic two-plane model surface with
//! negatively curved tubes, and its embeddings into nested tori.

// Negated comparisons such as `!(x > 0.0)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chart;
pub mod cone;
pub mod embedding;
pub mod error;
pub mod flow;
pub mod jet;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod profile;
pub mod quadrature;
pub mod surfaces;

pub use chart::{Atlas, Chart, ChartId, ChartKind, ChartPoint, Sym2};
pub use error::{Error, Result};
