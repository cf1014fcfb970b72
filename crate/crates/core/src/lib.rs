//! Vessel centreline reconstruction from tracked ultrasound segmentation
//! masks.
//!
//! The pipeline takes a sweep of binary vessel masks with time-synchronized
//! probe poses and
//!
//! 1. erodes each mask until adjacent vessels separate ([`mask`]),
//! 2. detects vessel centres as minimum-enclosing-circle centres,
//! 3. lifts them into the world frame with the pose log ([`projection`]),
//! 4. groups them into per-vessel tracks by optimal assignment and removes
//!    outliers ([`tracking`]),
//! 5. merges tracks that form one branching vessel, finds bifurcations and
//!    picks a needle insertion site cranial to each ([`skeleton`]).
//!
//! [`pipeline::run`] drives all stages; [`simulate`] renders synthetic scans
//! with known ground truth and [`eval`] scores results against it.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod eval;
pub mod export;
pub mod geometry;
pub mod mask;
pub mod params;
pub mod pipeline;
pub mod projection;
pub mod simulate;
pub mod skeleton;
pub mod tracking;

pub use error::{Error, Result, Stage};
pub use params::{HyperParams, Profile};
pub use pipeline::{run, PipelineResult};
