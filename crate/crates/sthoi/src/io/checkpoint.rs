//! Model checkpoint: a one-line JSON header (format name, version, payload
//! checksum) followed by the JSON payload with label space, mask, branch
//! tensors, and the training configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::recognition::{
    AttentionMask, Branch, InteractionModel, LabelSpace, OutputSpace, RecognitionConfig,
};

pub const CHECKPOINT_VERSION: u32 = 1;
const CHECKPOINT_FORMAT: &str = "sthoi-model";

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    version: u32,
    sha256: String,
}

#[derive(Serialize, Deserialize)]
struct CheckpointPayload {
    labels: LabelSpace,
    mask: AttentionMask,
    output: OutputSpace,
    branches: Vec<Branch>,
    config: RecognitionConfig,
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn save_model(path: &Path, model: &InteractionModel, config: &RecognitionConfig) -> Result<()> {
    let payload = CheckpointPayload {
        labels: model.labels.clone(),
        mask: model.mask.clone(),
        output: model.output,
        branches: model.branches.clone(),
        config: config.clone(),
    };
    let payload_json = serde_json::to_string(&payload)?;
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        sha256: hex_digest(payload_json.as_bytes()),
    };
    let mut text = serde_json::to_string(&header)?;
    text.push('\n');
    text.push_str(&payload_json);
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(InteractionModel, RecognitionConfig)> {
    let text =
        std::fs::read_to_string(path).map_err(|_| Error::MissingFile { path: path.into() })?;
    let bad = |message: String| Error::Format {
        path: path.into(),
        message,
    };
    let (header_line, payload_json) = text
        .split_once('\n')
        .ok_or_else(|| bad("missing payload".into()))?;
    let header: CheckpointHeader =
        serde_json::from_str(header_line).map_err(|e| bad(format!("bad header: {e}")))?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(bad(format!("unknown format {:?}", header.format)));
    }
    if header.version != CHECKPOINT_VERSION {
        return Err(bad(format!(
            "version {} unsupported (expected {CHECKPOINT_VERSION})",
            header.version
        )));
    }
    let digest = hex_digest(payload_json.as_bytes());
    if digest != header.sha256 {
        return Err(bad("checksum mismatch, file corrupted".into()));
    }
    let payload: CheckpointPayload =
        serde_json::from_str(payload_json).map_err(|e| bad(format!("bad payload: {e}")))?;
    let model = InteractionModel::new(
        payload.labels,
        payload.mask,
        payload.branches,
        payload.output,
    )?;
    Ok((model, payload.config))
}
