//! Spatio-temporal human-object interaction detection.
//!
//! The pipeline turns per-frame object detections and human keypoints into
//! object trajectories, recognizes fine-grained human-object interactions
//! per trajectory pair from multi-modal features, and scores the results
//! with detection-style metrics:
//!
//! 1. [`tracklets`] — greedy confidence-ordered tracklet generation inside
//!    overlapping video segments, merged into long-term trajectories.
//! 2. [`pairing`] — co-occurrent human-object candidate pairs cut into
//!    fixed-duration segments.
//! 3. [`features`] — body-part behavior descriptor (RoI-align + temporal max
//!    pooling), relative motion feature, semantic embedding feature.
//! 4. [`recognition`] — three masked predicate classifiers with late score
//!    fusion, trained with binary cross entropy and analytic gradients, plus
//!    greedy association of consecutive segments into instances.
//! 5. [`evaluation`] — class mAP, video mAP, recall@K, tagging precision@N.
//!
//! [`synth`] generates deterministic synthetic scenes (with recoverable
//! interactions by construction) so the full pipeline can be exercised at
//! desk scale; [`io`] defines every on-disk format; [`commands`] wires the
//! stages into the operator-facing subcommands exposed by the `sthoi`
//! binary. See the crate examples for one runnable program per capability.

pub mod commands;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod geometry;
pub mod io;
pub mod pairing;
pub mod recognition;
pub mod synth;
pub mod tracklets;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use geometry::{iou, trajectory_overlap, viou, BBox, FrameSpan, Trajectory};
pub use recognition::{HoiInstance, LabelSpace};
