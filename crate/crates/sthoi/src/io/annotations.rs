use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, FrameSpan, Trajectory};
use crate::recognition::{HoiInstance, LabelSpace};

/// Ground-truth content of one video: entity trajectories plus interaction
/// instances referencing them by id. Doubles as the output container for
/// detected trajectories (empty instance list).
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub video: String,
    pub frames: usize,
    pub trajectories: Vec<AnnotatedTrajectory>,
    pub instances: Vec<AnnotatedInstance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedTrajectory {
    pub id: usize,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedInstance {
    pub subject: usize,
    pub object: usize,
    pub predicate: String,
    pub span: FrameSpan,
}

impl AnnotationRecord {
    pub fn trajectory(&self, id: usize) -> Result<&Trajectory> {
        self.trajectories
            .iter()
            .find(|t| t.id == id)
            .map(|t| &t.trajectory)
            .ok_or_else(|| Error::mismatch(format!("trajectory id {id} not in {}", self.video)))
    }

    /// Instances as scored evaluation units: label pair plus both
    /// trajectories cropped to the instance span, score 1.
    pub fn gt_instances(&self) -> Result<Vec<HoiInstance>> {
        self.instances
            .iter()
            .map(|inst| {
                let subject = self.trajectory(inst.subject)?;
                let object = self.trajectory(inst.object)?;
                Ok(HoiInstance {
                    predicate: inst.predicate.clone(),
                    object_category: object.category.clone(),
                    subject: subject
                        .crop(&inst.span)
                        .ok_or_else(|| Error::mismatch("instance span outside subject"))?,
                    object: object
                        .crop(&inst.span)
                        .ok_or_else(|| Error::mismatch("instance span outside object"))?,
                    span: inst.span,
                    score: 1.0,
                })
            })
            .collect()
    }

    fn validate(&self, labels: &LabelSpace) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.trajectories {
            if !seen.insert(t.id) {
                return Err(Error::invalid(
                    "annotation",
                    format!("{}: duplicate trajectory id {}", self.video, t.id),
                ));
            }
            if !labels.is_known_category(&t.trajectory.category) {
                return Err(Error::MissingToken {
                    token: t.trajectory.category.clone(),
                    context: Some(format!("annotation {}", self.video)),
                });
            }
            if t.trajectory.span.end >= self.frames {
                return Err(Error::invalid(
                    "annotation",
                    format!(
                        "{}: trajectory {} ends at frame {} in a {}-frame video",
                        self.video, t.id, t.trajectory.span.end, self.frames
                    ),
                ));
            }
        }
        for inst in &self.instances {
            let subject = self.trajectory(inst.subject)?;
            let object = self.trajectory(inst.object)?;
            if !labels.is_human(&subject.category) {
                return Err(Error::invalid(
                    "annotation",
                    format!(
                        "{}: instance subject {} is not human",
                        self.video, inst.subject
                    ),
                ));
            }
            if inst.subject == inst.object {
                return Err(Error::invalid(
                    "annotation",
                    format!(
                        "{}: instance pairs trajectory {} with itself",
                        self.video, inst.subject
                    ),
                ));
            }
            labels.predicate_idx(&inst.predicate)?;
            for (name, t) in [("subject", subject), ("object", object)] {
                if inst.span.begin < t.span.begin || inst.span.end > t.span.end {
                    return Err(Error::invalid(
                        "annotation",
                        format!(
                            "{}: instance span [{}, {}] outside {name} span [{}, {}]",
                            self.video, inst.span.begin, inst.span.end, t.span.begin, t.span.end
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct AnnotationData {
    video: String,
    frames: usize,
    trajectories: Vec<TrajectoryData>,
    instances: Vec<InstanceData>,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryData {
    id: usize,
    category: String,
    score: f64,
    begin: usize,
    boxes: Vec<[f64; 4]>,
}

#[derive(Serialize, Deserialize)]
struct InstanceData {
    subject: usize,
    object: usize,
    predicate: String,
    begin: usize,
    end: usize,
}

pub fn load_annotations(path: &Path, labels: &LabelSpace) -> Result<AnnotationRecord> {
    let text =
        std::fs::read_to_string(path).map_err(|_| Error::MissingFile { path: path.into() })?;
    let data: AnnotationData = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.into(),
        line: Some(e.line()),
        message: e.to_string(),
    })?;
    let trajectories = data
        .trajectories
        .into_iter()
        .map(|t| {
            if t.boxes.is_empty() {
                return Err(Error::Parse {
                    path: path.into(),
                    line: None,
                    message: format!("trajectory {} has no boxes", t.id),
                });
            }
            let span = FrameSpan::new(t.begin, t.begin + t.boxes.len() - 1)?;
            let boxes = t
                .boxes
                .iter()
                .map(|&[x, y, w, h]| BBox::new(x, y, w, h))
                .collect::<Result<Vec<_>>>()?;
            Ok(AnnotatedTrajectory {
                id: t.id,
                trajectory: Trajectory::new(span, boxes, t.category, t.score)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let instances = data
        .instances
        .into_iter()
        .map(|i| {
            Ok(AnnotatedInstance {
                subject: i.subject,
                object: i.object,
                predicate: i.predicate,
                span: FrameSpan::new(i.begin, i.end)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let record = AnnotationRecord {
        video: data.video,
        frames: data.frames,
        trajectories,
        instances,
    };
    record.validate(labels)?;
    Ok(record)
}

pub fn save_annotations(path: &Path, record: &AnnotationRecord) -> Result<()> {
    let data = AnnotationData {
        video: record.video.clone(),
        frames: record.frames,
        trajectories: record
            .trajectories
            .iter()
            .map(|t| TrajectoryData {
                id: t.id,
                category: t.trajectory.category.clone(),
                score: t.trajectory.score,
                begin: t.trajectory.span.begin,
                boxes: t
                    .trajectory
                    .boxes
                    .iter()
                    .map(|b| [b.x, b.y, b.w, b.h])
                    .collect(),
            })
            .collect(),
        instances: record
            .instances
            .iter()
            .map(|i| InstanceData {
                subject: i.subject,
                object: i.object,
                predicate: i.predicate.clone(),
                begin: i.span.begin,
                end: i.span.end,
            })
            .collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&data)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> LabelSpace {
        LabelSpace::new(vec!["cup".into()], vec!["hold".into()], "human".into()).unwrap()
    }

    fn record() -> AnnotationRecord {
        let human = Trajectory::new(
            FrameSpan::new(0, 19).unwrap(),
            vec![BBox::new(0.0, 0.0, 10.0, 10.0).unwrap(); 20],
            "human".into(),
            1.0,
        )
        .unwrap();
        let cup = Trajectory::new(
            FrameSpan::new(5, 19).unwrap(),
            vec![BBox::new(20.0, 0.0, 5.0, 5.0).unwrap(); 15],
            "cup".into(),
            1.0,
        )
        .unwrap();
        AnnotationRecord {
            video: "v0".into(),
            frames: 20,
            trajectories: vec![
                AnnotatedTrajectory {
                    id: 0,
                    trajectory: human,
                },
                AnnotatedTrajectory {
                    id: 1,
                    trajectory: cup,
                },
            ],
            instances: vec![AnnotatedInstance {
                subject: 0,
                object: 1,
                predicate: "hold".into(),
                span: FrameSpan::new(5, 14).unwrap(),
            }],
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        let rec = record();
        save_annotations(&path, &rec).unwrap();
        assert_eq!(load_annotations(&path, &labels()).unwrap(), rec);
    }

    #[test]
    fn gt_instances_cropped() {
        let insts = record().gt_instances().unwrap();
        assert_eq!(insts.len(), 1);
        assert_eq!(insts[0].subject.span, FrameSpan::new(5, 14).unwrap());
        assert_eq!(insts[0].object_category, "cup");
    }

    #[test]
    fn rejects_nonhuman_subject() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        let mut rec = record();
        rec.instances[0].subject = 1;
        rec.instances[0].object = 0;
        save_annotations(&path, &rec).unwrap();
        assert!(load_annotations(&path, &labels()).is_err());
    }

    #[test]
    fn rejects_instance_outside_trajectory_span() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        let mut rec = record();
        rec.instances[0].span = FrameSpan::new(0, 14).unwrap(); // cup starts at 5
        save_annotations(&path, &rec).unwrap();
        assert!(load_annotations(&path, &labels()).is_err());
    }
}
