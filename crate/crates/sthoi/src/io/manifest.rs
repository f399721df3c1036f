use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recognition::LabelSpace;

/// Index of a dataset: the label space plus per-video metadata and file
/// paths. Paths are stored relative to the manifest file and resolved to
/// absolute paths on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub labels: LabelSpace,
    /// Embedding table shared by all videos.
    pub embeddings: Option<PathBuf>,
    pub videos: Vec<VideoEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VideoEntry {
    pub id: String,
    pub frames: usize,
    pub fps: f64,
    #[serde(default)]
    pub detections: Option<PathBuf>,
    #[serde(default)]
    pub keypoints: Option<PathBuf>,
    #[serde(default)]
    pub features: Option<PathBuf>,
    #[serde(default)]
    pub annotations: Option<PathBuf>,
}

impl DatasetManifest {
    /// Parse, resolve every path against the manifest's directory, and check
    /// that all referenced files exist.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingFile { path: path.into() });
        }
        let text = std::fs::read_to_string(path)?;
        let mut manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.into(),
                line: Some(e.line()),
                message: e.to_string(),
            })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| -> Result<()> {
            if let Some(rel) = p.as_ref() {
                let abs = if rel.is_absolute() {
                    rel.clone()
                } else {
                    base.join(rel)
                };
                if !abs.is_file() {
                    return Err(Error::MissingFile { path: abs });
                }
                *p = Some(abs);
            }
            Ok(())
        };
        resolve(&mut manifest.embeddings)?;
        let mut seen = std::collections::BTreeSet::new();
        for video in &mut manifest.videos {
            if video.frames == 0 {
                return Err(Error::invalid(
                    "manifest video",
                    format!("{}: zero frames", video.id),
                ));
            }
            if !seen.insert(video.id.clone()) {
                return Err(Error::invalid(
                    "manifest",
                    format!("duplicate video id {:?}", video.id),
                ));
            }
            resolve(&mut video.detections)?;
            resolve(&mut video.keypoints)?;
            resolve(&mut video.features)?;
            resolve(&mut video.annotations)?;
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn video(&self, id: &str) -> Result<&VideoEntry> {
        self.videos
            .iter()
            .find(|v| v.id == id)
            .ok_or_else(|| Error::mismatch(format!("video {id:?} not in manifest")))
    }
}
