use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::VideoInstances;
use crate::geometry::{BBox, FrameSpan, Trajectory};
use crate::recognition::HoiInstance;

#[derive(Serialize, Deserialize)]
struct PredictionRecord {
    video: String,
    predicate: String,
    object: String,
    score: f64,
    begin: usize,
    end: usize,
    subject_trajectory: TrajectoryData,
    object_trajectory: TrajectoryData,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryData {
    category: String,
    score: f64,
    begin: usize,
    end: usize,
    boxes: Vec<[f64; 4]>,
}

fn to_data(t: &Trajectory) -> TrajectoryData {
    TrajectoryData {
        category: t.category.clone(),
        score: t.score,
        begin: t.span.begin,
        end: t.span.end,
        boxes: t.boxes.iter().map(|b| [b.x, b.y, b.w, b.h]).collect(),
    }
}

fn from_data(d: TrajectoryData, path: &Path, lineno: usize) -> Result<Trajectory> {
    let span = FrameSpan::new(d.begin, d.end)?;
    if d.boxes.len() != span.len() {
        return Err(Error::Parse {
            path: path.into(),
            line: Some(lineno),
            message: format!(
                "{} boxes for span [{}, {}] ({} frames)",
                d.boxes.len(),
                d.begin,
                d.end,
                span.len()
            ),
        });
    }
    let boxes = d
        .boxes
        .iter()
        .map(|&[x, y, w, h]| BBox::new(x, y, w, h))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(span, boxes, d.category, d.score)
}

/// Write predicted instances as line-delimited JSON, videos in id order,
/// instances in the given order. Loading the file back is an identity.
pub fn save_predictions(path: &Path, predictions: &VideoInstances) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (video, instances) in predictions {
        for inst in instances {
            let record = PredictionRecord {
                video: video.clone(),
                predicate: inst.predicate.clone(),
                object: inst.object_category.clone(),
                score: inst.score,
                begin: inst.span.begin,
                end: inst.span.end,
                subject_trajectory: to_data(&inst.subject),
                object_trajectory: to_data(&inst.object),
            };
            writeln!(file, "{}", serde_json::to_string(&record)?)?;
        }
    }
    Ok(())
}

pub fn load_predictions(path: &Path) -> Result<VideoInstances> {
    let file = std::fs::File::open(path).map_err(|_| Error::MissingFile { path: path.into() })?;
    let reader = BufReader::new(file);
    let mut out = VideoInstances::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.into(),
            line: Some(lineno + 1),
            message: e.to_string(),
        })?;
        let span = FrameSpan::new(record.begin, record.end)?;
        let inst = HoiInstance {
            predicate: record.predicate,
            object_category: record.object,
            subject: from_data(record.subject_trajectory, path, lineno + 1)?,
            object: from_data(record.object_trajectory, path, lineno + 1)?,
            span,
            score: record.score,
        };
        out.entry(record.video).or_default().push(inst);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_instance(rng: &mut rand_chacha::ChaCha8Rng) -> HoiInstance {
        let begin = rng.random_range(0..50);
        let len = rng.random_range(1..20);
        let span = FrameSpan::new(begin, begin + len - 1).unwrap();
        let traj = |rng: &mut rand_chacha::ChaCha8Rng, category: &str| {
            Trajectory::new(
                span,
                (0..len)
                    .map(|_| {
                        BBox::new(
                            rng.random_range(0.0..500.0),
                            rng.random_range(0.0..500.0),
                            rng.random_range(1.0..80.0),
                            rng.random_range(1.0..80.0),
                        )
                        .unwrap()
                    })
                    .collect(),
                category.into(),
                rng.random_range(0.0..1.0),
            )
            .unwrap()
        };
        HoiInstance {
            predicate: format!("p{}", rng.random_range(0..5)),
            object_category: format!("o{}", rng.random_range(0..5)),
            subject: traj(rng, "human"),
            object: traj(rng, "thing"),
            span,
            score: rng.random_range(0.0..1.0),
        }
    }

    #[test]
    fn round_trip_random_instances() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let mut preds = VideoInstances::new();
        for v in 0..4 {
            let insts: Vec<HoiInstance> = (0..25).map(|_| random_instance(&mut rng)).collect();
            preds.insert(format!("v{v}"), insts);
        }
        save_predictions(&path, &preds).unwrap();
        assert_eq!(load_predictions(&path).unwrap(), preds);

        // identical bytes when saved twice
        let path2 = dir.path().join("p2.jsonl");
        save_predictions(&path2, &preds).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        save_predictions(&path, &VideoInstances::new()).unwrap();
        assert!(load_predictions(&path).unwrap().is_empty());
    }

    #[test]
    fn rejects_box_count_mismatch_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        let line = r#"{"video":"v0","predicate":"hold","object":"cup","score":0.5,"begin":0,"end":2,"subject_trajectory":{"category":"human","score":1.0,"begin":0,"end":2,"boxes":[[0,0,5,5],[0,0,5,5]]},"object_trajectory":{"category":"cup","score":1.0,"begin":0,"end":2,"boxes":[[0,0,5,5],[0,0,5,5],[0,0,5,5]]}}"#;
        std::fs::write(&path, format!("{line}\n")).unwrap();
        match load_predictions(&path) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, Some(1));
                assert!(message.contains("2 boxes"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        std::fs::write(&path, &line[..120]).unwrap();
        match load_predictions(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, Some(1)),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
