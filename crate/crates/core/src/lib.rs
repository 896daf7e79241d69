//! Online multi-object vehicle tracking with fused spatial/appearance
//! association, plus the evaluation and synthetic-data tooling around it.
//!
//! The pipeline: per-frame detections (optionally carrying re-identification
//! embeddings) are associated to tracks by a gated minimum-cost assignment
//! over the fused cost `1 - alpha * IOU - beta * cosine`. Unmatched tracks
//! coast on motion-model predictions for up to `ttl` frames; new tracks can
//! merge backward into recently ended ones; tracks shorter than `t_min`
//! detections are dropped. Evaluation covers CLEAR-MOT scores and their
//! detector-threshold-swept (PR) aggregation.

pub mod affinity;
pub mod assignment;
pub mod config;
pub mod error;
pub mod geom;
pub mod metrics;
pub mod mot_io;
pub mod predictor;
pub mod sweep;
pub mod synth;
pub mod tracker;
pub mod workload;

pub use affinity::{AssocParams, Embedding};
pub use error::{Error, Result};
pub use geom::{BBox, FrameIndex, TrackId};
pub use metrics::MetricsBundle;
pub use tracker::{Detection, FrameInput, Track, Tracker, TrackerConfig};
