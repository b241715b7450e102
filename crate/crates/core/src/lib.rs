//! Multimodal cough detection on wearable audio and IMU streams.
//!
//! The crate covers the whole batch pipeline: loading and framing recordings,
//! audio and kinematic feature banks, boosted-tree inference, the
//! kinematic-triggers-audio scheduler, cough event delineation, event-based
//! scoring and a trace-driven energy simulator.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod inference;
pub mod ingest;
pub mod pipeline;
pub mod postproc;
pub mod registry;
pub mod scheduler;
pub mod simkit;

pub use error::{Error, Result};
pub use ingest::Modality;
pub use registry::FeatureVector;
