//! Operator-facing command implementations behind the CLI subcommands.
//!
//! Each command validates its configuration up front, fans per-video work out
//! to a bounded worker pool, and merges results deterministically by video
//! id, so identical inputs and seeds produce identical outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::evaluation::{self, MetricsReport, VideoInstances};
use crate::features::{
    assign_skeletons, behavior_descriptor, motion_feature, semantic_feature, EmbeddingTable,
    FeatureBundle, SkeletonTrajectory,
};
use crate::geometry::{iou, Trajectory};
use crate::io::{
    load_annotations, load_detections, load_embeddings, load_keypoints, load_model,
    load_predictions, save_annotations, save_model, save_predictions, AnnotationRecord,
    DatasetManifest, GridReader, VideoEntry,
};
use crate::pairing::{co_occurrent_pairs, split_candidate_segments, CandidateSegment};
use crate::recognition::{
    associate_instances, fuse_scores, train, BaseFeature, HoiInstance, InteractionModel,
    OutputSpace, ScoreSpace, ScoredSegment, TrainingSample,
};
use crate::synth::{suite_specs, write_suite, NoiseSpec, SuiteSpec};
use crate::tracklets::detect_trajectories;

fn worker_pool(cfg: &PipelineConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.effective_workers())
        .build()
        .map_err(|e| Error::invalid("runtime.workers", e.to_string()))
}

#[derive(Clone, Copy)]
enum VideoFile {
    Detections,
    Keypoints,
    Features,
    Annotations,
}

fn required_path(entry: &VideoEntry, what: VideoFile) -> Result<&Path> {
    let (field, name) = match what {
        VideoFile::Detections => (&entry.detections, "detections"),
        VideoFile::Keypoints => (&entry.keypoints, "keypoints"),
        VideoFile::Features => (&entry.features, "features"),
        VideoFile::Annotations => (&entry.annotations, "annotations"),
    };
    field
        .as_deref()
        .ok_or_else(|| Error::mismatch(format!("video {} has no {name} file", entry.id)))
}

#[derive(Debug, Clone)]
pub struct TrackReport {
    pub videos: usize,
    pub frames: usize,
    pub trajectories: usize,
    pub fps: f64,
    /// Frame-level detection mAP of trajectory boxes against ground truth,
    /// when annotations are available.
    pub detection_map: Option<f64>,
    pub per_video: Vec<(String, usize)>,
}

impl TrackReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("videos\t{}\n", self.videos));
        s.push_str(&format!("frames\t{}\n", self.frames));
        s.push_str(&format!("trajectories\t{}\n", self.trajectories));
        s.push_str(&format!("fps\t{:.2}\n", self.fps));
        if let Some(map) = self.detection_map {
            s.push_str(&format!("detection_map\t{map:.6}\n"));
        }
        for (video, n) in &self.per_video {
            s.push_str(&format!("video\t{video}\t{n}\n"));
        }
        s
    }
}

/// Detect object trajectories for every video in the manifest and write one
/// trajectory file per video, plus a throughput/quality report.
pub fn cmd_track(
    manifest_path: &Path,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> Result<TrackReport> {
    cfg.validate()?;
    let manifest = DatasetManifest::load(manifest_path)?;
    std::fs::create_dir_all(out_dir)?;
    let pool = worker_pool(cfg)?;

    let started = Instant::now();
    let results: Vec<(String, usize, Vec<Trajectory>)> = pool.install(|| {
        manifest
            .videos
            .par_iter()
            .map(|video| -> Result<(String, usize, Vec<Trajectory>)> {
                let det_path = required_path(video, VideoFile::Detections)?;
                let mut per_video = load_detections(det_path, &manifest.labels)?;
                let detections = per_video.remove(&video.id).unwrap_or_default();
                if let Some((other, _)) = per_video.into_iter().next() {
                    return Err(Error::mismatch(format!(
                        "{} contains detections for foreign video {other:?}",
                        det_path.display()
                    )));
                }
                let trajs = detect_trajectories(&detections, video.frames, &cfg.tracking)?;
                Ok((video.id.clone(), video.frames, trajs))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let elapsed = started.elapsed().as_secs_f64();

    let mut report = TrackReport {
        videos: results.len(),
        frames: results.iter().map(|(_, f, _)| f).sum(),
        trajectories: results.iter().map(|(_, _, t)| t.len()).sum(),
        fps: results.iter().map(|(_, f, _)| f).sum::<usize>() as f64 / elapsed.max(1e-9),
        detection_map: None,
        per_video: results
            .iter()
            .map(|(v, _, t)| (v.clone(), t.len()))
            .collect(),
    };

    for (video, frames, trajs) in &results {
        let record = AnnotationRecord {
            video: video.clone(),
            frames: *frames,
            trajectories: trajs
                .iter()
                .enumerate()
                .map(|(id, t)| crate::io::AnnotatedTrajectory {
                    id,
                    trajectory: t.clone(),
                })
                .collect(),
            instances: Vec::new(),
        };
        save_annotations(&out_dir.join(format!("{video}.trajectories.json")), &record)?;
    }

    // frame-level detection mAP against annotated trajectories, when present
    let mut gt_available = true;
    let mut predicted: Vec<(String, Trajectory)> = Vec::new();
    let mut actual: Vec<(String, Trajectory)> = Vec::new();
    for video in &manifest.videos {
        match &video.annotations {
            Some(path) => {
                let ann = load_annotations(path, &manifest.labels)?;
                for t in ann.trajectories {
                    actual.push((video.id.clone(), t.trajectory));
                }
            }
            None => gt_available = false,
        }
    }
    if gt_available {
        for (video, _, trajs) in &results {
            for t in trajs {
                predicted.push((video.clone(), t.clone()));
            }
        }
        report.detection_map = Some(frame_detection_map(&predicted, &actual, 0.5));
    }

    std::fs::write(out_dir.join("track_report.txt"), report.render())?;
    Ok(report)
}

/// Frame-level detection mAP: every trajectory contributes one scored box
/// per frame; boxes match unused same-frame ground-truth boxes of the same
/// category above the IoU threshold; AP per category, averaged over
/// categories with ground truth.
pub fn frame_detection_map(
    predicted: &[(String, Trajectory)],
    actual: &[(String, Trajectory)],
    iou_threshold: f64,
) -> f64 {
    use std::collections::BTreeSet;

    let categories: BTreeSet<&str> = actual.iter().map(|(_, t)| t.category.as_str()).collect();
    if categories.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for category in &categories {
        // gt boxes per (video, frame)
        let mut gt: BTreeMap<(&str, usize), Vec<(&crate::geometry::BBox, bool)>> = BTreeMap::new();
        let mut num_gt = 0usize;
        for (video, t) in actual {
            if t.category != *category {
                continue;
            }
            for f in t.span.frames() {
                gt.entry((video.as_str(), f))
                    .or_default()
                    .push((t.box_at(f).unwrap(), false));
                num_gt += 1;
            }
        }
        // ranked predicted boxes
        let mut preds: Vec<(f64, &str, usize, &crate::geometry::BBox)> = Vec::new();
        for (video, t) in predicted {
            if t.category != *category {
                continue;
            }
            for f in t.span.frames() {
                preds.push((t.score, video.as_str(), f, t.box_at(f).unwrap()));
            }
        }
        preds.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(b.1))
                .then(a.2.cmp(&b.2))
        });
        let flags: Vec<bool> = preds
            .iter()
            .map(|(_, video, frame, bbox)| {
                let Some(slots) = gt.get_mut(&(*video, *frame)) else {
                    return false;
                };
                let mut best: Option<(usize, f64)> = None;
                for (i, (g, used)) in slots.iter().enumerate() {
                    if *used {
                        continue;
                    }
                    let v = iou(bbox, g);
                    if v > iou_threshold && best.is_none_or(|(_, b)| v > b) {
                        best = Some((i, v));
                    }
                }
                match best {
                    Some((i, _)) => {
                        slots[i].1 = true;
                        true
                    }
                    None => false,
                }
            })
            .collect();
        total += evaluation::average_precision(&flags, num_gt);
    }
    total / categories.len() as f64
}

/// Per-video inputs shared by training and detection feature building.
struct VideoPipeline<'a> {
    trajectories: Vec<Trajectory>,
    skeletons: Vec<SkeletonTrajectory>,
    reader: GridReader,
    table: &'a EmbeddingTable,
    labels: &'a crate::recognition::LabelSpace,
    features: crate::features::FeatureConfig,
}

impl<'a> VideoPipeline<'a> {
    fn open(
        entry: &VideoEntry,
        trajectories: Vec<Trajectory>,
        table: &'a EmbeddingTable,
        labels: &'a crate::recognition::LabelSpace,
        features: &crate::features::FeatureConfig,
    ) -> Result<Self> {
        let keypoints = load_keypoints(required_path(entry, VideoFile::Keypoints)?)?;
        let per_frame = keypoints.get(&entry.id).cloned().unwrap_or_default();
        let skeletons = assign_skeletons(&per_frame, &trajectories, labels.human());
        let reader = GridReader::open(required_path(entry, VideoFile::Features)?)?;
        Ok(VideoPipeline {
            trajectories,
            skeletons,
            reader,
            table,
            labels,
            features: features.clone(),
        })
    }

    fn skeleton_for(&self, host: usize) -> Option<&SkeletonTrajectory> {
        self.skeletons.iter().find(|s| s.host == host)
    }

    fn bundle(&mut self, segment: &CandidateSegment, with_behavior: bool) -> Result<FeatureBundle> {
        let object_category = self.trajectories[segment.pair.object].category.clone();
        let motion = motion_feature(segment)?;
        let semantic = semantic_feature(self.labels.human(), &object_category, self.table)?;
        let behavior = if with_behavior {
            let grids = self.reader.read_span(segment.span)?;
            let sk = self.skeleton_for(segment.pair.human);
            behavior_descriptor(segment, sk, &grids, &self.features)?
        } else {
            Array1::zeros(0)
        };
        Ok(FeatureBundle {
            behavior,
            motion,
            semantic,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub samples: usize,
    pub epochs: usize,
    pub final_loss: f64,
    pub model_path: PathBuf,
    pub curve_path: PathBuf,
}

/// Build training samples from annotated (ground-truth) trajectories, train
/// the recognizer, and write the checkpoint plus the loss curve.
pub fn cmd_train(
    manifest_path: &Path,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> Result<TrainSummary> {
    cfg.validate()?;
    let manifest = DatasetManifest::load(manifest_path)?;
    std::fs::create_dir_all(out_dir)?;
    let embeddings_path = manifest
        .embeddings
        .as_deref()
        .ok_or_else(|| Error::mismatch("manifest has no embeddings file".to_string()))?;
    let table = load_embeddings(embeddings_path)?;
    let pool = worker_pool(cfg)?;

    let annotated: Vec<&VideoEntry> = manifest
        .videos
        .iter()
        .filter(|v| v.annotations.is_some())
        .collect();

    let per_video: Vec<Vec<TrainingSample>> = pool.install(|| {
        annotated
            .par_iter()
            .map(|entry| collect_video_samples(entry, &manifest, &table, cfg))
            .collect::<Result<Vec<_>>>()
    })?;
    let samples: Vec<TrainingSample> = per_video.into_iter().flatten().collect();
    if !samples.iter().any(|s| !s.predicates.is_empty()) {
        return Err(Error::invalid(
            "training set",
            "no annotated interaction instances in manifest",
        ));
    }

    let trained = train(&samples, &manifest.labels, &cfg.recognition)?;
    let model_path = out_dir.join("model.ckpt");
    save_model(&model_path, &trained.model, &cfg.recognition)?;
    let curve_path = out_dir.join("loss_curve.txt");
    let curve_text: String = trained
        .loss_curve
        .iter()
        .map(|l| format!("{l:.9}\n"))
        .collect();
    std::fs::write(&curve_path, curve_text)?;

    Ok(TrainSummary {
        samples: samples.len(),
        epochs: cfg.recognition.epochs,
        final_loss: *trained.loss_curve.last().unwrap(),
        model_path,
        curve_path,
    })
}

/// Candidate windows over all co-occurrent ground-truth pairs; a window's
/// targets are the predicates of same-pair instances overlapping it.
fn collect_video_samples(
    entry: &VideoEntry,
    manifest: &DatasetManifest,
    table: &EmbeddingTable,
    cfg: &PipelineConfig,
) -> Result<Vec<TrainingSample>> {
    let ann = load_annotations(
        required_path(entry, VideoFile::Annotations)?,
        &manifest.labels,
    )?;
    let trajectories: Vec<Trajectory> = ann
        .trajectories
        .iter()
        .map(|t| t.trajectory.clone())
        .collect();
    let ids: Vec<usize> = ann.trajectories.iter().map(|t| t.id).collect();
    let mut pipeline =
        VideoPipeline::open(entry, trajectories, table, &manifest.labels, &cfg.features)?;

    let with_behavior = cfg.recognition.behavior_descriptor;
    let pairs = co_occurrent_pairs(&pipeline.trajectories, manifest.labels.human());
    let mut samples = Vec::new();
    for pair in pairs {
        let subject_id = ids[pair.human];
        let object_id = ids[pair.object];
        let segments =
            split_candidate_segments(&pair, &pipeline.trajectories, cfg.pairing.segment_len)?;
        for segment in segments {
            let predicates: Vec<String> = ann
                .instances
                .iter()
                .filter(|inst| {
                    inst.subject == subject_id
                        && inst.object == object_id
                        && inst.span.intersect(&segment.span).is_some()
                })
                .map(|inst| inst.predicate.clone())
                .collect();
            let mut predicates = predicates;
            predicates.sort();
            predicates.dedup();
            let bundle = pipeline.bundle(&segment, with_behavior)?;
            samples.push(TrainingSample {
                bundle,
                object_category: pipeline.trajectories[pair.object].category.clone(),
                predicates,
            });
        }
    }
    Ok(samples)
}

#[derive(Debug, Clone)]
pub struct DetectSummary {
    pub videos: usize,
    pub instances: usize,
    pub predictions_path: PathBuf,
}

/// Full detection pipeline: trajectories (detected, or annotated with
/// `gt_trajectories`), candidate pairs, features, masked prediction, and
/// greedy association, written as one predictions file.
pub fn cmd_detect(
    manifest_path: &Path,
    model_path: &Path,
    cfg: &PipelineConfig,
    out_path: &Path,
    gt_trajectories: bool,
) -> Result<DetectSummary> {
    cfg.validate()?;
    let manifest = DatasetManifest::load(manifest_path)?;
    let (model, _train_cfg) = load_model(model_path)?;
    if model.labels != manifest.labels {
        return Err(Error::mismatch(
            "label space of the model differs from the manifest".to_string(),
        ));
    }
    let embeddings_path = manifest
        .embeddings
        .as_deref()
        .ok_or_else(|| Error::mismatch("manifest has no embeddings file".to_string()))?;
    let table = load_embeddings(embeddings_path)?;
    let pool = worker_pool(cfg)?;

    let results: Vec<(String, Vec<HoiInstance>)> = pool.install(|| {
        manifest
            .videos
            .par_iter()
            .map(|entry| -> Result<(String, Vec<HoiInstance>)> {
                let instances =
                    detect_video(entry, &manifest, &model, &table, cfg, gt_trajectories)?;
                Ok((entry.id.clone(), instances))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut predictions = VideoInstances::new();
    let mut count = 0usize;
    for (video, instances) in results {
        count += instances.len();
        predictions.insert(video, instances);
    }
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    save_predictions(out_path, &predictions)?;
    Ok(DetectSummary {
        videos: predictions.len(),
        instances: count,
        predictions_path: out_path.into(),
    })
}

fn detect_video(
    entry: &VideoEntry,
    manifest: &DatasetManifest,
    model: &InteractionModel,
    table: &EmbeddingTable,
    cfg: &PipelineConfig,
    gt_trajectories: bool,
) -> Result<Vec<HoiInstance>> {
    let trajectories: Vec<Trajectory> = if gt_trajectories {
        let ann = load_annotations(
            required_path(entry, VideoFile::Annotations)?,
            &manifest.labels,
        )?;
        ann.trajectories.into_iter().map(|t| t.trajectory).collect()
    } else {
        let det_path = required_path(entry, VideoFile::Detections)?;
        let mut per_video = load_detections(det_path, &manifest.labels)?;
        let detections = per_video.remove(&entry.id).unwrap_or_default();
        detect_trajectories(&detections, entry.frames, &cfg.tracking)?
    };

    let with_behavior = model
        .branches
        .iter()
        .any(|b| b.inputs.contains(&BaseFeature::Behavior));
    let mut pipeline =
        VideoPipeline::open(entry, trajectories, table, &manifest.labels, &cfg.features)?;

    let mut instances = Vec::new();
    let pairs = co_occurrent_pairs(&pipeline.trajectories, manifest.labels.human());
    for pair in pairs {
        let segments =
            split_candidate_segments(&pair, &pipeline.trajectories, cfg.pairing.segment_len)?;
        if segments.is_empty() {
            continue;
        }
        let object_category = pipeline.trajectories[pair.object].category.clone();
        let mut scored = Vec::with_capacity(segments.len());
        for segment in &segments {
            let bundle = pipeline.bundle(segment, with_behavior)?;
            let branch_scores = model.predict_segment(&bundle, &object_category)?;
            scored.push(ScoredSegment {
                span: segment.span,
                scores: fuse_scores(&branch_scores),
            });
        }
        let space = match model.output {
            OutputSpace::Predicates => ScoreSpace::Predicates {
                labels: &model.labels,
                object_category: &object_category,
            },
            OutputSpace::JointHoi => ScoreSpace::JointHoi {
                labels: &model.labels,
            },
        };
        instances.extend(associate_instances(
            &pipeline.trajectories[pair.human],
            &pipeline.trajectories[pair.object],
            &scored,
            space,
            cfg.recognition.score_threshold,
            cfg.recognition.top_k,
            cfg.recognition.multiply_trajectory_scores,
        ));
    }

    instances.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.predicate.cmp(&b.predicate))
            .then(a.object_category.cmp(&b.object_category))
            .then(a.span.begin.cmp(&b.span.begin))
            .then(a.span.end.cmp(&b.span.end))
    });
    Ok(instances)
}

/// Score a predictions file against the manifest's annotations.
pub fn cmd_evaluate(
    predictions_path: &Path,
    manifest_path: &Path,
    cfg: &PipelineConfig,
    out_path: Option<&Path>,
    per_class_path: Option<&Path>,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let manifest = DatasetManifest::load(manifest_path)?;
    let predictions = load_predictions(predictions_path)?;

    let orphans: Vec<&String> = predictions
        .keys()
        .filter(|v| manifest.videos.iter().all(|m| &m.id != *v))
        .collect();
    if !orphans.is_empty() {
        return Err(Error::mismatch(format!(
            "predictions reference videos absent from the manifest: {orphans:?}"
        )));
    }

    let mut gts = VideoInstances::new();
    for video in &manifest.videos {
        let path = required_path(video, VideoFile::Annotations)?;
        let ann = load_annotations(path, &manifest.labels)?;
        gts.insert(video.id.clone(), ann.gt_instances()?);
    }

    let report = evaluation::evaluate(&predictions, &gts, &cfg.evaluation)?;
    if let Some(path) = out_path {
        std::fs::write(path, report.render())?;
    }
    if let Some(path) = per_class_path {
        std::fs::write(path, report.per_class_csv())?;
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct TagReport {
    /// Per video: ranked `(predicate, object, score)` labels.
    pub tags: BTreeMap<String, Vec<(String, String, f64)>>,
}

impl TagReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (video, tags) in &self.tags {
            for (rank, (predicate, object, score)) in tags.iter().enumerate() {
                s.push_str(&format!(
                    "{video}\t{}\t{predicate}\t{object}\t{score:.6}\n",
                    rank + 1
                ));
            }
        }
        s
    }
}

/// Rank each video's deduplicated HOI labels by best instance score and emit
/// the top-N list (N = the largest configured precision cutoff).
pub fn cmd_tag(
    predictions_path: &Path,
    cfg: &PipelineConfig,
    out_path: Option<&Path>,
) -> Result<TagReport> {
    cfg.validate()?;
    let predictions = load_predictions(predictions_path)?;
    let top = cfg.evaluation.n_values.iter().copied().max().unwrap_or(10);
    let mut tags = BTreeMap::new();
    for (video, instances) in &predictions {
        let ranked: Vec<(String, String, f64)> = evaluation::ranked_video_labels(instances)
            .into_iter()
            .take(top)
            .map(|((p, o), s)| (p, o, s))
            .collect();
        tags.insert(video.clone(), ranked);
    }
    let report = TagReport { tags };
    if let Some(path) = out_path {
        std::fs::write(path, report.render())?;
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct SynthArgs {
    pub seed: u64,
    pub scenes: usize,
    pub frames: usize,
    pub jitter_sigma: f64,
    pub drop_rate: f64,
    pub false_positive_rate: f64,
    pub embedding_dim: usize,
}

impl Default for SynthArgs {
    fn default() -> Self {
        SynthArgs {
            seed: 7,
            scenes: 20,
            frames: 100,
            jitter_sigma: 0.0,
            drop_rate: 0.0,
            false_positive_rate: 0.0,
            embedding_dim: 16,
        }
    }
}

/// Generate a synthetic scene suite with manifest and embeddings; returns
/// the manifest path.
pub fn cmd_synth(args: &SynthArgs, out_dir: &Path) -> Result<PathBuf> {
    let suite = SuiteSpec {
        seed: args.seed,
        scenes: args.scenes,
        frames: args.frames,
        noise: NoiseSpec {
            jitter_sigma: args.jitter_sigma,
            drop_rate: args.drop_rate,
            false_positive_rate: args.false_positive_rate,
        },
    };
    let specs = suite_specs(&suite)?;
    write_suite(&specs, args.embedding_dim, args.seed, out_dir)
}
