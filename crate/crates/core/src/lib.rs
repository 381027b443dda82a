//! Spanners for directed disk graphs over finite metrics of bounded doubling
//! dimension.
//!
//! The crate covers the whole pipeline:
//!
//! * [`metric`]: finite metric spaces (Euclidean or explicit matrix), metric
//!   closure, validation, nearest-pivot queries and a greedy doubling-constant
//!   estimator.
//! * [`diskgraph`]: the directed disk graph `I(V, E, r)` with `p -> q` iff
//!   `d(p, q) <= r(p)`, scale normalization and the geometric level structure.
//! * [`spanner`]: the hierarchical pivot construction producing a
//!   `(1+eps)`-spanner with `O(n / eps^d * log M)` edges.
//! * [`relaxed`]: the two-spanner construction over the `(1+eps)`-inflated disk
//!   graph followed by per-target level pruning, giving `O(n / eps^d)` edges.
//! * [`adversarial`]: a non-sparsifiable disk graph family with computational
//!   verifiers for its structural claims.
//! * [`oracle`]: exact directed shortest paths, stretch certification, size
//!   accounting and pivot packing checks.

pub mod adversarial;
pub mod diskgraph;
pub mod error;
pub mod metric;
pub mod oracle;
pub mod params;
pub mod relaxed;
pub mod spanner;

pub use diskgraph::{DiskGraph, Edge, LevelStructure, RadiusAssignment};
pub use error::{Error, Result};
pub use metric::{Metric, PivotSet};
pub use params::{Params, Regime};
pub use relaxed::RelaxedSpanner;
pub use spanner::{Spanner, SpannerEdge};
