//! On-disk formats: dataset manifest, detections, keypoints, feature grids,
//! embeddings, annotations, predictions, and model checkpoints.
//!
//! Text formats are line-delimited JSON records for diffability; feature
//! grids use a little-endian binary container with random frame access. The
//! byte-level layouts are documented in `docs/FORMATS.md`.

mod annotations;
mod checkpoint;
mod detections;
mod embeddings;
mod grids;
mod keypoints;
mod manifest;
mod predictions;

pub use annotations::{
    load_annotations, save_annotations, AnnotatedInstance, AnnotatedTrajectory, AnnotationRecord,
};
pub use checkpoint::{load_model, save_model, CHECKPOINT_VERSION};
pub use detections::{load_detections, save_detections};
pub use embeddings::{load_embeddings, save_embeddings};
pub use grids::{GridHeader, GridReader, GridWriter, GRID_MAGIC, GRID_VERSION};
pub use keypoints::{load_keypoints, save_keypoints};
pub use manifest::{DatasetManifest, VideoEntry};
pub use predictions::{load_predictions, save_predictions};
