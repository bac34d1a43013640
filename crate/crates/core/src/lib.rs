//! Foveated video streaming simulator and gaze analytics.
//!
//! The crate models a cloud gaming server that raises the quantization
//! parameter of every macroblock in proportion to its distance from the
//! player's gaze, estimates the bandwidth saved by doing so, and replays
//! recorded gaze traces through a simulated client to server telemetry
//! path. The [`analytics`] module holds the trace statistics (gaze
//! moments, change rate, heatmaps, empirical CDFs, latency budget).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
mod error;
pub mod export;
pub mod foveation;
pub mod gaze;
pub mod grid;
pub mod ratemodel;
pub mod session;
mod stats;
pub mod telemetry;

pub use error::{Error, Result};
pub use foveation::{compute_offset_map, FovealWidth, FoveationParams, OffsetMap};
pub use gaze::{FilterParams, GazeSample, GazeTrace, TraceKind};
pub use grid::{GridSpec, PixelPoint};
pub use ratemodel::{BitrateEstimate, RateModel};
pub use session::{run_session, FrameRecord, SessionConfig};
pub use telemetry::{ChannelSpec, DecodeError, GazeMessage, LatestGazeCell};
