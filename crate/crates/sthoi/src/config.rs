//! Pipeline configuration: one TOML document with module-scoped sections.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::MatchConfig;
use crate::features::FeatureConfig;
use crate::pairing::PairingConfig;
use crate::recognition::RecognitionConfig;
use crate::tracklets::TrackingConfig;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tracking: TrackingConfig,
    pub pairing: PairingConfig,
    pub features: FeatureConfig,
    pub recognition: RecognitionConfig,
    pub evaluation: MatchConfig,
    pub runtime: RuntimeConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct RuntimeConfig {
    /// Worker pool size for per-video fan-out; 0 means available parallelism.
    /// Overridable with the STHOI_WORKERS environment variable.
    pub workers: usize,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|_| Error::MissingFile { path: path.into() })?;
        let cfg: PipelineConfig = toml::from_str(&text).map_err(|e| Error::Invalid {
            what: format!("config {}", path.display()),
            why: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.tracking.validate()?;
        self.pairing.validate()?;
        self.features.validate()?;
        self.recognition.validate()?;
        self.evaluation.validate()?;
        Ok(())
    }

    /// Full configuration as TOML, defaults included.
    pub fn dump(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Effective worker count: env override, then config, then available
    /// parallelism.
    pub fn effective_workers(&self) -> usize {
        let configured = std::env::var("STHOI_WORKERS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .unwrap_or(self.runtime.workers);
        if configured == 0 {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        } else {
            configured
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        let dumped = cfg.dump();
        let parsed: PipelineConfig = toml::from_str(&dumped).unwrap();
        assert_eq!(parsed.tracking.segment_len, 10);
        assert_eq!(parsed.tracking.segment_stride, 5);
        assert_eq!(parsed.tracking.iou_threshold, 0.5);
        assert_eq!(parsed.pairing.segment_len, 10);
        assert_eq!(parsed.evaluation.k_values, vec![50, 100]);
        assert_eq!(parsed.evaluation.n_values, vec![1, 5, 10]);
    }

    #[test]
    fn load_rejects_bad_values_naming_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[tracking]\nsegment_stride = 0\n").unwrap();
        match PipelineConfig::load(&path) {
            Err(Error::Invalid { what, .. }) => assert!(what.contains("segment_stride")),
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[tracking]\nsegment_lenn = 10\n").unwrap();
        assert!(PipelineConfig::load(&path).is_err());
    }
}
