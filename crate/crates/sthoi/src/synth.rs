//! Deterministic synthetic scene generator.
//!
//! Produces everything the pipeline consumes — ground-truth trajectories,
//! noisy detections, keypoints, feature grids, embeddings, annotations — for
//! scripted interaction scenes. Entities live in separated horizontal lanes
//! (no mutual occlusion) and move slowly enough for segment-level absorption
//! to hold. Feature grids are built so that every scripted predicate is
//! recoverable from the pooled body-part features: while an instance of
//! predicate `k` is active, grid channel `k` is lit in a small region around
//! the subject's involved joints. This separability is a test-fixture
//! construction, not a claim about real data.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Joint, Skeleton, JOINT_COUNT};
use crate::geometry::{BBox, FrameSpan, Trajectory};
use crate::io::{
    save_annotations, save_detections, save_embeddings, save_keypoints, AnnotatedInstance,
    AnnotatedTrajectory, AnnotationRecord, DatasetManifest, GridHeader, GridWriter, VideoEntry,
};
use crate::recognition::LabelSpace;
use crate::tracklets::Detection;

/// Grid cell size in pixels.
const GRID_CELL: f64 = 10.0;
/// Chebyshev radius (pixels) of the activation patch painted around a joint.
const ACTIVATION_RADIUS: f64 = 18.0;
/// Vertical gap between entity lanes; keeps activation patches and part
/// boxes of different entities from touching.
const ENTITY_GAP: f64 = 40.0;
const HUMAN_SIZE: f64 = 60.0;
const OBJECT_SIZE: f64 = 40.0;
const MARGIN: f64 = 20.0;

/// Normalized joint offsets inside a human box, canonical 17-joint order.
const JOINT_OFFSETS: [(f64, f64); JOINT_COUNT] = [
    (0.50, 0.08), // nose
    (0.44, 0.05),
    (0.56, 0.05), // eyes
    (0.38, 0.08),
    (0.62, 0.08), // ears
    (0.32, 0.22),
    (0.68, 0.22), // shoulders
    (0.24, 0.38),
    (0.76, 0.38), // elbows
    (0.18, 0.52),
    (0.82, 0.52), // wrists
    (0.40, 0.55),
    (0.60, 0.55), // hips
    (0.38, 0.74),
    (0.62, 0.74), // knees
    (0.36, 0.94),
    (0.64, 0.94), // ankles
];

/// Joints involved in performing predicate `k`.
pub fn predicate_parts(predicate_idx: usize) -> [usize; 2] {
    [
        predicate_idx % JOINT_COUNT,
        (predicate_idx + 8) % JOINT_COUNT,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionModel {
    Static,
    Linear,
    Sinusoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Gaussian box jitter in pixels.
    pub jitter_sigma: f64,
    /// Probability a true detection is dropped.
    pub drop_rate: f64,
    /// Probability an extra (duplicated, heavily jittered) detection is
    /// emitted per entity-frame.
    pub false_positive_rate: f64,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec {
        jitter_sigma: 0.0,
        drop_rate: 0.0,
        false_positive_rate: 0.0,
    };
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntitySpec {
    pub category: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionScript {
    /// Entity indices into `SceneSpec::entities`.
    pub subject: usize,
    pub object: usize,
    pub predicate: String,
    pub span: FrameSpan,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSpec {
    pub video: String,
    pub seed: u64,
    pub num_frames: usize,
    pub frame_width: f64,
    pub frame_height: f64,
    pub motion: MotionModel,
    pub noise: NoiseSpec,
    pub labels: LabelSpace,
    pub entities: Vec<EntitySpec>,
    pub script: Vec<InteractionScript>,
}

/// A fully generated scene, ready to be written in the io-module formats.
#[derive(Debug, Clone)]
pub struct Scene {
    pub video: String,
    pub frames: usize,
    pub frame_width: f64,
    pub frame_height: f64,
    pub annotations: AnnotationRecord,
    pub detections: Vec<Detection>,
    /// Per frame, per human entity (entity order) skeletons.
    pub keypoints: BTreeMap<usize, Vec<Skeleton>>,
    /// One `(channels, grid_h, grid_w)` activation grid per frame.
    pub grids: Vec<Array3<f32>>,
}

impl SceneSpec {
    fn entity_size(&self, idx: usize) -> f64 {
        if self.labels.is_human(&self.entities[idx].category) {
            HUMAN_SIZE
        } else {
            OBJECT_SIZE
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_frames < 2 {
            return Err(Error::invalid("scene", "need at least 2 frames"));
        }
        for rate in [self.noise.drop_rate, self.noise.false_positive_rate] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::invalid("scene noise", "rates must be in [0, 1]"));
            }
        }
        if self.noise.jitter_sigma < 0.0 {
            return Err(Error::invalid("scene noise", "negative jitter"));
        }
        if self.entities.is_empty() {
            return Err(Error::invalid("scene", "no entities"));
        }
        for e in &self.entities {
            if !self.labels.is_known_category(&e.category) {
                return Err(Error::MissingToken {
                    token: e.category.clone(),
                    context: Some("scene entity".into()),
                });
            }
        }
        // vertical lane packing must fit the frame
        let total: f64 = (0..self.entities.len())
            .map(|i| self.entity_size(i))
            .sum::<f64>()
            + ENTITY_GAP * (self.entities.len() - 1) as f64
            + 2.0 * MARGIN;
        if total > self.frame_height {
            return Err(Error::invalid(
                "scene",
                format!(
                    "{} entities need {total:.0}px of height, frame has {:.0}",
                    self.entities.len(),
                    self.frame_height
                ),
            ));
        }
        let widest = (0..self.entities.len())
            .map(|i| self.entity_size(i))
            .fold(0.0, f64::max);
        if widest + 2.0 * MARGIN > self.frame_width {
            return Err(Error::invalid("scene", "frame too narrow for entities"));
        }
        for s in &self.script {
            if s.subject >= self.entities.len() || s.object >= self.entities.len() {
                return Err(Error::invalid("scene script", "entity index out of range"));
            }
            if s.subject == s.object {
                return Err(Error::invalid(
                    "scene script",
                    "subject interacts with itself",
                ));
            }
            if !self.labels.is_human(&self.entities[s.subject].category) {
                return Err(Error::invalid("scene script", "subject must be human"));
            }
            self.labels.predicate_idx(&s.predicate)?;
            if s.span.end >= self.num_frames {
                return Err(Error::invalid(
                    "scene script",
                    format!(
                        "span ends at {} in a {}-frame scene",
                        s.span.end, self.num_frames
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Horizontal position generator for one entity.
struct MotionTrack {
    x0: f64,
    velocity: f64,
    amplitude: f64,
    period: f64,
    phase: f64,
    model: MotionModel,
}

impl MotionTrack {
    fn sample(spec: &SceneSpec, size: f64, rng: &mut ChaCha8Rng) -> MotionTrack {
        let lo = MARGIN;
        let hi = spec.frame_width - size - MARGIN;
        match spec.motion {
            MotionModel::Static => MotionTrack {
                x0: rng.random_range(lo..hi),
                velocity: 0.0,
                amplitude: 0.0,
                period: 1.0,
                phase: 0.0,
                model: spec.motion,
            },
            MotionModel::Linear => {
                // speed <= 0.8 px/frame keeps within-segment absorption overlaps
                // high even against the interaction size pulse
                let mut v: f64 =
                    rng.random_range(0.3..0.8) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let travel = v * (spec.num_frames - 1) as f64;
                let max_travel = hi - lo;
                if travel.abs() > max_travel {
                    v = v.signum() * max_travel / (spec.num_frames - 1) as f64;
                }
                let travel = v * (spec.num_frames - 1) as f64;
                let x0 = if travel >= 0.0 {
                    rng.random_range(lo..(hi - travel).max(lo + 1e-9))
                } else {
                    rng.random_range((lo - travel).min(hi - 1e-9)..hi)
                };
                MotionTrack {
                    x0,
                    velocity: v,
                    amplitude: 0.0,
                    period: 1.0,
                    phase: 0.0,
                    model: spec.motion,
                }
            }
            MotionModel::Sinusoidal => {
                let amplitude = rng.random_range(5.0..8.0);
                let period = rng.random_range(70.0..90.0);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                let x0 = rng.random_range((lo + amplitude)..(hi - amplitude));
                MotionTrack {
                    x0,
                    velocity: 0.0,
                    amplitude,
                    period,
                    phase,
                    model: spec.motion,
                }
            }
        }
    }

    fn x(&self, frame: usize) -> f64 {
        let t = frame as f64;
        match self.model {
            MotionModel::Static => self.x0,
            MotionModel::Linear => self.x0 + self.velocity * t,
            MotionModel::Sinusoidal => {
                self.x0
                    + self.amplitude * (std::f64::consts::TAU * t / self.period + self.phase).sin()
            }
        }
    }
}

fn joint_position(host: &BBox, joint: usize) -> (f64, f64) {
    let (fx, fy) = JOINT_OFFSETS[joint];
    (host.x + fx * host.w, host.y + fy * host.h)
}

fn skeleton_for(host: &BBox) -> Skeleton {
    Skeleton {
        joints: std::array::from_fn(|i| {
            let (x, y) = joint_position(host, i);
            Joint {
                x,
                y,
                visibility: 1.0,
            }
        }),
    }
}

/// Generate the full input file set and ground truth for one scene spec.
/// Deterministic: the same spec (seed included) yields identical output.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // lane layout and motion tracks
    let mut lane_y = Vec::with_capacity(spec.entities.len());
    let mut cursor = MARGIN;
    for i in 0..spec.entities.len() {
        lane_y.push(cursor);
        cursor += spec.entity_size(i) + ENTITY_GAP;
    }
    let tracks: Vec<MotionTrack> = (0..spec.entities.len())
        .map(|i| MotionTrack::sample(spec, spec.entity_size(i), &mut rng))
        .collect();

    // ground-truth trajectories over the full scene span
    let full_span = FrameSpan {
        begin: 0,
        end: spec.num_frames - 1,
    };
    // The target of an active interaction runs 8% inflated. The relative
    // motion feature picks this up as a per-pair level signature on the
    // log-scale terms, while the one-off size step stays inside the
    // absorption IoU budget of the tracker.
    let pulse = |entity: usize, frame: usize| -> f64 {
        let active = spec
            .script
            .iter()
            .any(|s| s.object == entity && s.span.contains(frame));
        if active {
            1.08
        } else {
            1.0
        }
    };
    let true_box = |entity: usize, frame: usize| -> BBox {
        let size = spec.entity_size(entity);
        let scaled = size * pulse(entity, frame);
        let x = tracks[entity].x(frame);
        BBox {
            x: x + (size - scaled) / 2.0,
            y: lane_y[entity] + (size - scaled) / 2.0,
            w: scaled,
            h: scaled,
        }
    };
    let trajectories: Vec<AnnotatedTrajectory> = (0..spec.entities.len())
        .map(|e| AnnotatedTrajectory {
            id: e,
            trajectory: Trajectory {
                span: full_span,
                boxes: full_span.frames().map(|f| true_box(e, f)).collect(),
                category: spec.entities[e].category.clone(),
                score: 1.0,
            },
        })
        .collect();

    let annotations = AnnotationRecord {
        video: spec.video.clone(),
        frames: spec.num_frames,
        trajectories,
        instances: spec
            .script
            .iter()
            .map(|s| AnnotatedInstance {
                subject: s.subject,
                object: s.object,
                predicate: s.predicate.clone(),
                span: s.span,
            })
            .collect(),
    };

    // detections: per frame, per entity; fixed draw count per entity-frame
    // so noise settings do not shift the generator sequence
    let normal = StandardNormal;
    let mut detections = Vec::new();
    for frame in 0..spec.num_frames {
        for entity in 0..spec.entities.len() {
            let score: f64 = rng.random_range(0.75..0.95);
            let jx: f64 = normal.sample(&mut rng);
            let jy: f64 = normal.sample(&mut rng);
            let jw: f64 = normal.sample(&mut rng);
            let jh: f64 = normal.sample(&mut rng);
            let dropped = rng.random_bool(spec.noise.drop_rate);
            let fp = rng.random_bool(spec.noise.false_positive_rate);
            let fx: f64 = normal.sample(&mut rng);
            let fy: f64 = normal.sample(&mut rng);
            let fp_score: f64 = rng.random_range(0.5..0.7);

            let truth = true_box(entity, frame);
            if !dropped {
                let sigma = spec.noise.jitter_sigma;
                detections.push(Detection {
                    frame,
                    bbox: BBox {
                        x: truth.x + jx * sigma,
                        y: truth.y + jy * sigma,
                        w: (truth.w + jw * sigma * 0.5).max(4.0),
                        h: (truth.h + jh * sigma * 0.5).max(4.0),
                    },
                    category: spec.entities[entity].category.clone(),
                    score,
                });
            }
            if fp {
                let sigma = spec.noise.jitter_sigma.max(1.0) * 2.0;
                detections.push(Detection {
                    frame,
                    bbox: BBox {
                        x: truth.x + fx * sigma,
                        y: truth.y + fy * sigma,
                        w: truth.w,
                        h: truth.h,
                    },
                    category: spec.entities[entity].category.clone(),
                    score: fp_score,
                });
            }
        }
    }

    // keypoints: exact anatomical placements on every frame (the pose source
    // is independent of the detector)
    let mut keypoints: BTreeMap<usize, Vec<Skeleton>> = BTreeMap::new();
    for frame in 0..spec.num_frames {
        let mut sks = Vec::new();
        for entity in 0..spec.entities.len() {
            if spec.labels.is_human(&spec.entities[entity].category) {
                sks.push(skeleton_for(&true_box(entity, frame)));
            }
        }
        if !sks.is_empty() {
            keypoints.insert(frame, sks);
        }
    }

    // feature grids: channel k lit around the subject's involved joints
    // while an instance of predicate k is active
    let grid_w = (spec.frame_width / GRID_CELL).round() as usize;
    let grid_h = (spec.frame_height / GRID_CELL).round() as usize;
    let channels = spec.labels.num_predicates();
    let cell_w = spec.frame_width / grid_w as f64;
    let cell_h = spec.frame_height / grid_h as f64;
    let mut grids = Vec::with_capacity(spec.num_frames);
    for frame in 0..spec.num_frames {
        let mut grid = Array3::<f32>::zeros((channels, grid_h, grid_w));
        for s in &spec.script {
            if !s.span.contains(frame) {
                continue;
            }
            let k = spec.labels.predicate_idx(&s.predicate)?;
            let host = true_box(s.subject, frame);
            for joint in predicate_parts(k) {
                let (jx, jy) = joint_position(&host, joint);
                for r in 0..grid_h {
                    let cy = (r as f64 + 0.5) * cell_h;
                    if (cy - jy).abs() > ACTIVATION_RADIUS {
                        continue;
                    }
                    for c in 0..grid_w {
                        let cx = (c as f64 + 0.5) * cell_w;
                        if (cx - jx).abs() <= ACTIVATION_RADIUS {
                            grid[(k, r, c)] = 1.0;
                        }
                    }
                }
            }
        }
        grids.push(grid);
    }

    Ok(Scene {
        video: spec.video.clone(),
        frames: spec.num_frames,
        frame_width: spec.frame_width,
        frame_height: spec.frame_height,
        annotations,
        detections,
        keypoints,
        grids,
    })
}

/// Deterministic per-token embedding vectors covering a label space.
pub fn synthetic_embeddings(
    labels: &LabelSpace,
    dim: usize,
    seed: u64,
) -> Result<crate::features::EmbeddingTable> {
    let mut vectors = BTreeMap::new();
    let mut tokens: Vec<String> = labels.objects().to_vec();
    tokens.push(labels.human().to_string());
    tokens.sort();
    tokens.dedup();
    for token in tokens {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in token.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ h);
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        vectors.insert(token, v);
    }
    crate::features::EmbeddingTable::new(vectors)
}

/// Write one scene under `dir/<video>/` in the io-module formats and return
/// the manifest entry (paths relative to `dir`).
pub fn write_scene(scene: &Scene, dir: &Path) -> Result<VideoEntry> {
    let sub = dir.join(&scene.video);
    std::fs::create_dir_all(&sub)?;

    let det_path = sub.join("detections.jsonl");
    save_detections(
        &det_path,
        scene.detections.iter().map(|d| (scene.video.as_str(), d)),
    )?;

    let kp_path = sub.join("keypoints.jsonl");
    let records: Vec<(&str, usize, &Skeleton)> = scene
        .keypoints
        .iter()
        .flat_map(|(&frame, sks)| sks.iter().map(move |sk| (scene.video.as_str(), frame, sk)))
        .collect();
    save_keypoints(&kp_path, records)?;

    let grid_path = sub.join("features.stg");
    let dims = scene.grids.first().map(|g| g.dim()).unwrap_or((1, 1, 1));
    let mut writer = GridWriter::create(
        &grid_path,
        GridHeader {
            channels: dims.0,
            height: dims.1,
            width: dims.2,
            first_frame: 0,
            frame_count: scene.grids.len(),
            frame_width: scene.frame_width as f32,
            frame_height: scene.frame_height as f32,
        },
    )?;
    for g in &scene.grids {
        writer.write_frame(g)?;
    }
    writer.finish()?;

    let ann_path = sub.join("annotations.json");
    save_annotations(&ann_path, &scene.annotations)?;

    Ok(VideoEntry {
        id: scene.video.clone(),
        frames: scene.frames,
        fps: 10.0,
        detections: Some(PathBuf::from(&scene.video).join("detections.jsonl")),
        keypoints: Some(PathBuf::from(&scene.video).join("keypoints.jsonl")),
        features: Some(PathBuf::from(&scene.video).join("features.stg")),
        annotations: Some(PathBuf::from(&scene.video).join("annotations.json")),
    })
}

/// Label space used by the generated suites: each predicate is tied to one
/// object category (the feasibility structure the mask is meant to learn),
/// including one human-directed predicate.
pub fn suite_labels() -> LabelSpace {
    LabelSpace::new(
        vec!["bag".into(), "dog".into(), "cat".into(), "human".into()],
        vec![
            "carry".into(),
            "feed".into(),
            "pet".into(),
            "wave_to".into(),
        ],
        "human".into(),
    )
    .unwrap()
}

fn suite_predicate_for(category: &str) -> &'static str {
    match category {
        "bag" => "carry",
        "dog" => "feed",
        "cat" => "pet",
        "human" => "wave_to",
        other => unreachable!("no predicate associated with {other}"),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub seed: u64,
    pub scenes: usize,
    pub frames: usize,
    pub noise: NoiseSpec,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        SuiteSpec {
            seed: 7,
            scenes: 20,
            frames: 100,
            noise: NoiseSpec::NONE,
        }
    }
}

/// Scene specs for a suite: varying entity counts, motion models, and
/// scripts; instance spans are snapped to the segment length and sized to
/// cover roughly half of each interacting pair's span.
pub fn suite_specs(suite: &SuiteSpec) -> Result<Vec<SceneSpec>> {
    if suite.scenes == 0 {
        return Err(Error::invalid("suite", "zero scenes"));
    }
    if suite.frames < 60 || suite.frames > 300 {
        return Err(Error::invalid("suite.frames", "must be in [60, 300]"));
    }
    let labels = suite_labels();
    let mut master = ChaCha8Rng::seed_from_u64(suite.seed);
    let motions = [
        MotionModel::Static,
        MotionModel::Linear,
        MotionModel::Sinusoidal,
    ];

    let mut specs = Vec::with_capacity(suite.scenes);
    for idx in 0..suite.scenes {
        let scene_seed: u64 = master.random();
        let mut rng = ChaCha8Rng::seed_from_u64(scene_seed);

        let humans = 1 + (idx % 2);
        let mut entities: Vec<EntitySpec> = (0..humans)
            .map(|_| EntitySpec {
                category: "human".into(),
            })
            .collect();
        let mut object_cats = ["bag", "dog", "cat"];
        // deterministic shuffle, then take 2
        for i in (1..object_cats.len()).rev() {
            let j = rng.random_range(0..=i);
            object_cats.swap(i, j);
        }
        for cat in object_cats.iter().take(2) {
            entities.push(EntitySpec {
                category: (*cat).to_string(),
            });
        }

        // one instance per (subject, object) pair, covering ~half the video;
        // spans snap to window boundaries and leave one window margin at
        // both ends
        let total_windows = suite.frames / 10;
        let span_for = |rng: &mut ChaCha8Rng, lo: usize, hi: usize| -> FrameSpan {
            let dur = rng.random_range(lo..=hi).min(total_windows - 2);
            let begin_window = rng.random_range(1..=(total_windows - dur - 1));
            FrameSpan {
                begin: begin_window * 10,
                end: (begin_window + dur) * 10 - 1,
            }
        };
        let mut script = Vec::new();
        for (rotation, obj) in (humans..entities.len()).enumerate() {
            let span = span_for(&mut rng, 4, 6); // 40-60 frames
            script.push(InteractionScript {
                subject: rotation % humans,
                object: obj,
                predicate: suite_predicate_for(&entities[obj].category).to_string(),
                span,
            });
        }
        if humans == 2 {
            let span = span_for(&mut rng, 4, 6);
            script.push(InteractionScript {
                subject: 0,
                object: 1,
                predicate: "wave_to".into(),
                span,
            });
        }

        specs.push(SceneSpec {
            video: format!("scene{idx:03}"),
            seed: scene_seed,
            num_frames: suite.frames,
            frame_width: 640.0,
            frame_height: 480.0,
            motion: motions[idx % motions.len()],
            noise: suite.noise,
            labels: labels.clone(),
            entities,
            script,
        });
    }
    Ok(specs)
}

/// Generate and write a whole suite: scenes, shared embeddings, and the
/// dataset manifest. Returns the manifest path.
pub fn write_suite(
    specs: &[SceneSpec],
    embedding_dim: usize,
    seed: u64,
    dir: &Path,
) -> Result<PathBuf> {
    if specs.is_empty() {
        return Err(Error::invalid("suite", "no scenes"));
    }
    let labels = specs[0].labels.clone();
    std::fs::create_dir_all(dir)?;

    let mut videos = Vec::with_capacity(specs.len());
    for spec in specs {
        if spec.labels != labels {
            return Err(Error::mismatch("scenes disagree on the label space"));
        }
        let scene = generate_scene(spec)?;
        videos.push(write_scene(&scene, dir)?);
    }

    let table = synthetic_embeddings(&labels, embedding_dim, seed)?;
    save_embeddings(&dir.join("embeddings.txt"), &table)?;

    let manifest = DatasetManifest {
        labels,
        embeddings: Some("embeddings.txt".into()),
        videos,
    };
    let manifest_path = dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracklets::{detect_trajectories, TrackingConfig};

    fn basic_spec(seed: u64, noise: NoiseSpec) -> SceneSpec {
        let labels = suite_labels();
        SceneSpec {
            video: "t0".into(),
            seed,
            num_frames: 60,
            frame_width: 640.0,
            frame_height: 480.0,
            motion: MotionModel::Linear,
            noise,
            labels,
            entities: vec![
                EntitySpec {
                    category: "human".into(),
                },
                EntitySpec {
                    category: "dog".into(),
                },
            ],
            script: vec![InteractionScript {
                subject: 0,
                object: 1,
                predicate: "feed".into(),
                span: FrameSpan { begin: 10, end: 39 },
            }],
        }
    }

    #[test]
    fn zero_noise_detections_equal_truth() {
        let scene = generate_scene(&basic_spec(3, NoiseSpec::NONE)).unwrap();
        assert_eq!(scene.detections.len(), 2 * 60);
        for d in &scene.detections {
            let entity = scene
                .annotations
                .trajectories
                .iter()
                .find(|t| t.trajectory.category == d.category)
                .unwrap();
            assert_eq!(entity.trajectory.box_at(d.frame).unwrap(), &d.bbox);
        }
    }

    #[test]
    fn same_seed_same_scene() {
        let noise = NoiseSpec {
            jitter_sigma: 2.0,
            drop_rate: 0.1,
            false_positive_rate: 0.05,
        };
        let a = generate_scene(&basic_spec(9, noise)).unwrap();
        let b = generate_scene(&basic_spec(9, noise)).unwrap();
        assert_eq!(a.detections, b.detections);
        assert_eq!(a.keypoints, b.keypoints);
        assert_eq!(a.grids, b.grids);
    }

    #[test]
    fn full_drop_empties_detections() {
        let noise = NoiseSpec {
            jitter_sigma: 0.0,
            drop_rate: 1.0,
            false_positive_rate: 0.0,
        };
        let scene = generate_scene(&basic_spec(4, noise)).unwrap();
        assert!(scene.detections.is_empty());
        assert_eq!(scene.annotations.instances.len(), 1);
    }

    #[test]
    fn infeasible_spec_rejected() {
        let mut spec = basic_spec(5, NoiseSpec::NONE);
        for _ in 0..10 {
            spec.entities.push(EntitySpec {
                category: "cat".into(),
            });
        }
        assert!(generate_scene(&spec).is_err());
    }

    #[test]
    fn noiseless_tracking_recovers_ground_truth() {
        for seed in [11, 12, 13] {
            let mut spec = basic_spec(seed, NoiseSpec::NONE);
            spec.motion = match seed % 3 {
                0 => MotionModel::Static,
                1 => MotionModel::Linear,
                _ => MotionModel::Sinusoidal,
            };
            let scene = generate_scene(&spec).unwrap();
            let trajs =
                detect_trajectories(&scene.detections, scene.frames, &TrackingConfig::default())
                    .unwrap();
            assert_eq!(trajs.len(), 2, "seed {seed}");
            for t in &trajs {
                let gt = scene
                    .annotations
                    .trajectories
                    .iter()
                    .find(|a| a.trajectory.category == t.category)
                    .unwrap();
                assert_eq!(t.span, gt.trajectory.span);
                for f in t.span.frames() {
                    let v = crate::geometry::iou(
                        t.box_at(f).unwrap(),
                        gt.trajectory.box_at(f).unwrap(),
                    );
                    assert!((v - 1.0).abs() < 1e-12, "seed {seed} frame {f}: iou {v}");
                }
            }
        }
    }

    #[test]
    fn scripted_instances_stay_inside_cooccurrence() {
        let suite = SuiteSpec {
            seed: 21,
            scenes: 8,
            frames: 100,
            noise: NoiseSpec::NONE,
        };
        for spec in suite_specs(&suite).unwrap() {
            let scene = generate_scene(&spec).unwrap();
            for inst in &scene.annotations.instances {
                let s = scene.annotations.trajectory(inst.subject).unwrap();
                let o = scene.annotations.trajectory(inst.object).unwrap();
                assert!(inst.span.begin >= s.span.begin && inst.span.end <= s.span.end);
                assert!(inst.span.begin >= o.span.begin && inst.span.end <= o.span.end);
            }
        }
    }

    #[test]
    fn activation_lights_only_subject_region() {
        let spec = basic_spec(6, NoiseSpec::NONE);
        let scene = generate_scene(&spec).unwrap();
        let labels = &spec.labels;
        let k = labels.predicate_idx("feed").unwrap();
        // active frame: channel k has activation; inactive frame: none
        assert!(scene.grids[20]
            .index_axis(ndarray::Axis(0), k)
            .iter()
            .any(|&v| v > 0.0));
        assert!(scene.grids[50]
            .index_axis(ndarray::Axis(0), k)
            .iter()
            .all(|&v| v == 0.0));
        // other channels stay dark on the active frame
        for ch in 0..labels.num_predicates() {
            if ch != k {
                assert!(scene.grids[20]
                    .index_axis(ndarray::Axis(0), ch)
                    .iter()
                    .all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn write_suite_produces_loadable_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let suite = SuiteSpec {
            seed: 30,
            scenes: 2,
            frames: 60,
            noise: NoiseSpec::NONE,
        };
        let specs = suite_specs(&suite).unwrap();
        let manifest_path = write_suite(&specs, 8, suite.seed, dir.path()).unwrap();
        let manifest = DatasetManifest::load(&manifest_path).unwrap();
        assert_eq!(manifest.videos.len(), 2);
        assert!(manifest.embeddings.is_some());
    }
}
