//! Out-of-core dimensionality reduction.
//!
//! The pipeline fits a DR method (PCA, metric MDS, or exact t-SNE) on a
//! random reference subset of a dataset, then streams the remaining rows
//! from disk in fixed-size batches and maps each point independently with
//! the frozen reference model. Because out-of-sample points never see
//! each other, the assembled projection does not depend on batch size or
//! order, and memory stays bounded by one reference set plus one batch.
//!
//! Modules:
//! - [`io`]: on-disk matrix format, batch streaming, reference sampling,
//!   synthetic blobs, CSV import.
//! - [`method`]: the DR method contract and the three backends.
//! - [`project`]: the end-to-end fit + stream + transform orchestration.
//! - [`bench`]: runtime measurement across reference sizes.
//! - [`metrics`]: block-wise projection quality measures.
//! - [`plot`]: scatter and density-heatmap rendering.

pub mod bench;
pub mod error;
pub mod io;
pub mod method;
pub mod metrics;
pub mod numeric;
pub mod plot;
pub mod project;

pub use error::{Error, Result};
