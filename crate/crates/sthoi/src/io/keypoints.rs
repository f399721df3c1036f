use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Joint, Skeleton, JOINT_COUNT};

/// One skeleton on one frame. `joints` holds `[x, y, visibility]` triples in
/// the canonical 17-joint order (see [`crate::features::JOINT_NAMES`]).
#[derive(Debug, Serialize, Deserialize)]
struct KeypointRecord {
    video: String,
    frame: usize,
    joints: Vec<[f64; 3]>,
}

/// Per-video, per-frame skeleton lists.
pub type KeypointMap = BTreeMap<String, BTreeMap<usize, Vec<Skeleton>>>;

pub fn load_keypoints(path: &Path) -> Result<KeypointMap> {
    let file = std::fs::File::open(path).map_err(|_| Error::MissingFile { path: path.into() })?;
    let reader = BufReader::new(file);
    let mut out: KeypointMap = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: KeypointRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.into(),
            line: Some(lineno + 1),
            message: e.to_string(),
        })?;
        let located = |message: String| Error::Parse {
            path: path.into(),
            line: Some(lineno + 1),
            message,
        };
        if record.joints.len() != JOINT_COUNT {
            return Err(located(format!(
                "{} joints, expected {JOINT_COUNT}",
                record.joints.len()
            )));
        }
        let mut joints = [Joint {
            x: 0.0,
            y: 0.0,
            visibility: 0.0,
        }; JOINT_COUNT];
        for (i, [x, y, v]) in record.joints.iter().copied().enumerate() {
            if !(x.is_finite() && y.is_finite()) {
                return Err(located(format!("joint {i} has non-finite coordinates")));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(located(format!("joint {i} visibility {v} outside [0, 1]")));
            }
            joints[i] = Joint {
                x,
                y,
                visibility: v,
            };
        }
        out.entry(record.video)
            .or_default()
            .entry(record.frame)
            .or_default()
            .push(Skeleton { joints });
    }
    Ok(out)
}

pub fn save_keypoints<'a, I>(path: &Path, records: I) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, usize, &'a Skeleton)>,
{
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (video, frame, sk) in records {
        let record = KeypointRecord {
            video: video.to_string(),
            frame,
            joints: sk.joints.iter().map(|j| [j.x, j.y, j.visibility]).collect(),
        };
        writeln!(file, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}
