use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::recognition::LabelSpace;
use crate::tracklets::Detection;

/// One line of a detections file.
#[derive(Debug, Serialize, Deserialize)]
struct DetectionRecord {
    video: String,
    frame: usize,
    #[serde(rename = "box")]
    bbox: [f64; 4],
    category: String,
    score: f64,
}

/// Read a line-delimited detections file, grouped per video. Every record is
/// range-checked and its category validated against the label space.
pub fn load_detections(
    path: &Path,
    labels: &LabelSpace,
) -> Result<BTreeMap<String, Vec<Detection>>> {
    let file = std::fs::File::open(path).map_err(|_| Error::MissingFile { path: path.into() })?;
    let reader = BufReader::new(file);
    let mut out: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DetectionRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.into(),
            line: Some(lineno + 1),
            message: e.to_string(),
        })?;
        let located = |message: String| Error::Parse {
            path: path.into(),
            line: Some(lineno + 1),
            message,
        };
        if !labels.is_known_category(&record.category) {
            return Err(located(format!("unknown category {:?}", record.category)));
        }
        if !(0.0..=1.0).contains(&record.score) {
            return Err(located(format!("score {} outside [0, 1]", record.score)));
        }
        let [x, y, w, h] = record.bbox;
        let bbox = BBox::new(x, y, w, h).map_err(|e| located(e.to_string()))?;
        out.entry(record.video).or_default().push(Detection {
            frame: record.frame,
            bbox,
            category: record.category,
            score: record.score,
        });
    }
    Ok(out)
}

pub fn save_detections<'a, I>(path: &Path, records: I) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, &'a Detection)>,
{
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (video, d) in records {
        let record = DetectionRecord {
            video: video.to_string(),
            frame: d.frame,
            bbox: [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h],
            category: d.category.clone(),
            score: d.score,
        };
        writeln!(file, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> LabelSpace {
        LabelSpace::new(vec!["dog".into()], vec!["hold".into()], "human".into()).unwrap()
    }

    #[test]
    fn empty_file_loads_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(load_detections(&path, &labels()).unwrap().is_empty());
    }

    #[test]
    fn round_trip_one_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let det = Detection {
            frame: 3,
            bbox: BBox::new(1.5, 2.25, 10.0, 12.0).unwrap(),
            category: "dog".into(),
            score: 0.875,
        };
        save_detections(&path, [("v0", &det)]).unwrap();
        let loaded = load_detections(&path, &labels()).unwrap();
        assert_eq!(loaded["v0"], vec![det]);
    }

    #[test]
    fn rejects_out_of_range_score() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        std::fs::write(
            &path,
            r#"{"video":"v0","frame":0,"box":[0,0,5,5],"category":"dog","score":1.5}"#,
        )
        .unwrap();
        match load_detections(&path, &labels()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, Some(1)),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_category_and_malformed_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        std::fs::write(
            &path,
            "{\"video\":\"v0\",\"frame\":0,\"box\":[0,0,5,5],\"category\":\"zebra\",\"score\":0.5}\n",
        )
        .unwrap();
        match load_detections(&path, &labels()) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("zebra")),
            other => panic!("expected parse error, got {other:?}"),
        }

        std::fs::write(&path, "{not json\n").unwrap();
        match load_detections(&path, &labels()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, Some(1)),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
