//! Object trajectory detection.
//!
//! A video is cut into temporally overlapping fixed-duration segments. Inside
//! each segment, frame-level detections are turned into short-term tracklets
//! by a greedy absorption loop: the highest-confidence untracked detection
//! seeds a full-segment trajectory, every same-category detection that
//! overlaps the trajectory box on its frame is merged in, and the loop
//! repeats until no detection is left. Tracklets from overlapping segments
//! are then greedily merged into long-term trajectories whenever their
//! overlap ratio clears the merge threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, trajectory_overlap, BBox, FrameSpan, Trajectory};

/// One frame-level detected box.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Absolute video frame number.
    pub frame: usize,
    pub bbox: BBox,
    pub category: String,
    /// Detector confidence in `[0, 1]`.
    pub score: f64,
}

impl Detection {
    pub fn validate(&self) -> Result<()> {
        self.bbox.validate()?;
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::invalid(
                "detection score",
                format!("{} outside [0, 1]", self.score),
            ));
        }
        Ok(())
    }
}

/// Provenance of a tracklet box on one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoxSource {
    /// Backed by a merged detection on that frame.
    Detected,
    /// Synthesized by the box propagator.
    Filled,
}

/// Short-term trajectory confined to one video segment.
#[derive(Debug, Clone)]
pub struct Tracklet {
    /// Absolute frame span (the segment span until trimmed).
    pub span: FrameSpan,
    pub boxes: Vec<BBox>,
    pub sources: Vec<BoxSource>,
    pub category: String,
    /// Max confidence over merged detections.
    pub score: f64,
    /// Confidence of the seed detection that started this tracklet.
    pub seed_score: f64,
    /// Number of detections this tracklet consumed (incl. the seed).
    pub detection_count: usize,
}

impl Tracklet {
    /// Cut leading and trailing runs of filled frames so the span reaches
    /// exactly from the first to the last detected frame. Hold-fill otherwise
    /// inflates spans and corrupts the overlap ratio during merging.
    pub fn trimmed(&self) -> Tracklet {
        let first = self.sources.iter().position(|s| *s == BoxSource::Detected);
        let last = self.sources.iter().rposition(|s| *s == BoxSource::Detected);
        let (Some(first), Some(last)) = (first, last) else {
            return self.clone();
        };
        Tracklet {
            span: FrameSpan {
                begin: self.span.begin + first,
                end: self.span.begin + last,
            },
            boxes: self.boxes[first..=last].to_vec(),
            sources: self.sources[first..=last].to_vec(),
            category: self.category.clone(),
            score: self.score,
            seed_score: self.seed_score,
            detection_count: self.detection_count,
        }
    }

    pub fn to_trajectory(&self) -> Trajectory {
        Trajectory {
            span: self.span,
            boxes: self.boxes.clone(),
            category: self.category.clone(),
            score: self.score,
        }
    }
}

/// Segmentation and merging parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingConfig {
    /// Segment duration in frames.
    pub segment_len: usize,
    /// Stride between segment starts.
    pub segment_stride: usize,
    /// Frame-level IoU threshold for absorption and for the per-frame
    /// indicator inside the overlap ratio.
    pub iou_threshold: f64,
    /// Minimum overlap ratio for merging two same-category tracklets.
    pub merge_threshold: f64,
    /// Tublet-NMS threshold. Reserved for the tracker-based baseline
    /// strategy; the default pipeline does not apply tublet NMS.
    pub nms_iou: f64,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        TrackingConfig {
            segment_len: 10,
            segment_stride: 5,
            iou_threshold: 0.5,
            merge_threshold: 0.5,
            nms_iou: 0.3,
        }
    }
}

impl TrackingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_len == 0 {
            return Err(Error::invalid("tracking.segment_len", "must be >= 1"));
        }
        if self.segment_stride == 0 || self.segment_stride > self.segment_len {
            return Err(Error::invalid(
                "tracking.segment_stride",
                format!(
                    "{} outside [1, segment_len={}]",
                    self.segment_stride, self.segment_len
                ),
            ));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold < 1.0) {
            return Err(Error::invalid(
                "tracking.iou_threshold",
                "must be in (0, 1)",
            ));
        }
        if !(0.0..=1.0).contains(&self.merge_threshold) || self.merge_threshold == 0.0 {
            return Err(Error::invalid(
                "tracking.merge_threshold",
                "must be in (0, 1]",
            ));
        }
        if !(0.0..=1.0).contains(&self.nms_iou) {
            return Err(Error::invalid("tracking.nms_iou", "must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Extends sparse per-frame anchor boxes to a full segment window.
///
/// The default pipeline uses [`HoldFill`]; a visual tracker can be slotted in
/// behind this trait without touching the absorption loop.
pub trait BoxPropagator {
    /// Produce one box per frame of a `span_len`-frame window. `anchors` maps
    /// window-relative offsets to resolved boxes, is sorted by offset, has no
    /// duplicate offsets, and is non-empty.
    fn propagate(&self, span_len: usize, anchors: &[(usize, BBox)]) -> Vec<BBox>;
}

/// Nearest-in-time anchor copy; on equidistant anchors the earlier one wins
/// (forward fill).
#[derive(Debug, Clone, Copy, Default)]
pub struct HoldFill;

impl BoxPropagator for HoldFill {
    fn propagate(&self, span_len: usize, anchors: &[(usize, BBox)]) -> Vec<BBox> {
        assert!(!anchors.is_empty(), "propagate needs at least one anchor");
        (0..span_len)
            .map(|f| {
                let mut best = anchors[0];
                let mut best_d = usize::MAX;
                for &(off, b) in anchors {
                    let d = off.abs_diff(f);
                    // strict < keeps the earlier anchor on ties
                    if d < best_d {
                        best_d = d;
                        best = (off, b);
                    }
                }
                best.1
            })
            .collect()
    }
}

/// Cut `[0, num_frames)` into fixed-duration spans starting at stride
/// multiples; a trailing shorter span covers any frames the full-length
/// windows miss.
pub fn split_video_segments(num_frames: usize, cfg: &TrackingConfig) -> Vec<FrameSpan> {
    if num_frames == 0 {
        return Vec::new();
    }
    let mut spans = Vec::new();
    let mut start = 0usize;
    while start + cfg.segment_len <= num_frames {
        spans.push(FrameSpan {
            begin: start,
            end: start + cfg.segment_len - 1,
        });
        start += cfg.segment_stride;
    }
    let covered_to = spans.last().map(|s| s.end + 1).unwrap_or(0);
    if covered_to < num_frames {
        spans.push(FrameSpan {
            begin: start.min(num_frames - 1),
            end: num_frames - 1,
        });
    }
    spans
}

/// Greedy absorption inside one segment. Every input detection ends up in
/// exactly one tracklet.
pub fn build_segment_tracklets(
    detections: &[Detection],
    segment: FrameSpan,
    cfg: &TrackingConfig,
) -> Result<Vec<Tracklet>> {
    build_segment_tracklets_with(detections, segment, cfg, &HoldFill)
}

pub fn build_segment_tracklets_with(
    detections: &[Detection],
    segment: FrameSpan,
    cfg: &TrackingConfig,
    propagator: &dyn BoxPropagator,
) -> Result<Vec<Tracklet>> {
    cfg.validate()?;
    for d in detections {
        d.validate()?;
        if !segment.contains(d.frame) {
            return Err(Error::invalid(
                "detection frame",
                format!(
                    "{} outside segment [{}, {}]",
                    d.frame, segment.begin, segment.end
                ),
            ));
        }
    }

    // Confidence-descending order; stable sort keeps input order on ties so
    // the loop is deterministic for a fixed input.
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .score
            .partial_cmp(&detections[a].score)
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let span_len = segment.len();
    let mut untracked = vec![true; detections.len()];
    let mut tracklets = Vec::new();

    for pos in 0..order.len() {
        let seed_idx = order[pos];
        if !untracked[seed_idx] {
            continue;
        }
        untracked[seed_idx] = false;
        let seed = &detections[seed_idx];

        // Extend the seed to a full-segment trajectory, then absorb every
        // untracked same-category detection overlapping it on its frame.
        let seed_boxes = propagator.propagate(span_len, &[(seed.frame - segment.begin, seed.bbox)]);
        let mut merged = vec![seed_idx];
        for &j in order[pos + 1..].iter() {
            if !untracked[j] || detections[j].category != seed.category {
                continue;
            }
            let d = &detections[j];
            if iou(&d.bbox, &seed_boxes[d.frame - segment.begin]) > cfg.iou_threshold {
                untracked[j] = false;
                merged.push(j);
            }
        }

        // Resolve the output boxes from the merged detections: per frame the
        // highest-confidence detection wins, gaps are propagator-filled.
        let mut best_per_frame: Vec<Option<usize>> = vec![None; span_len];
        for &j in &merged {
            let off = detections[j].frame - segment.begin;
            let better = match best_per_frame[off] {
                None => true,
                Some(cur) => detections[j].score > detections[cur].score,
            };
            if better {
                best_per_frame[off] = Some(j);
            }
        }
        let anchors: Vec<(usize, BBox)> = best_per_frame
            .iter()
            .enumerate()
            .filter_map(|(off, j)| j.map(|j| (off, detections[j].bbox)))
            .collect();
        let boxes = propagator.propagate(span_len, &anchors);
        let sources: Vec<BoxSource> = best_per_frame
            .iter()
            .map(|j| {
                if j.is_some() {
                    BoxSource::Detected
                } else {
                    BoxSource::Filled
                }
            })
            .collect();
        let score = merged
            .iter()
            .map(|&j| detections[j].score)
            .fold(f64::NEG_INFINITY, f64::max);

        tracklets.push(Tracklet {
            span: segment,
            boxes,
            sources,
            category: seed.category.clone(),
            score,
            seed_score: seed.score,
            detection_count: merged.len(),
        });
    }

    Ok(tracklets)
}

/// Greedy cross-segment merging: repeatedly merge the same-category pair with
/// the highest overlap ratio until no pair clears the threshold.
pub fn merge_tracklets(tracklets: &[Tracklet], cfg: &TrackingConfig) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    let mut items: Vec<MergeItem> = tracklets
        .iter()
        .map(|t| MergeItem {
            traj: t.to_trajectory(),
        })
        .collect();
    // Canonical working order so tie-breaking is input-order independent.
    items.sort_by(|a, b| {
        a.traj
            .span
            .begin
            .cmp(&b.traj.span.begin)
            .then(
                b.traj
                    .score
                    .partial_cmp(&a.traj.score)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
            .then(a.traj.category.cmp(&b.traj.category))
            .then(a.traj.span.end.cmp(&b.traj.span.end))
    });

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..items.len() {
            for j in i + 1..items.len() {
                if items[i].traj.category != items[j].traj.category {
                    continue;
                }
                let theta = trajectory_overlap(&items[i].traj, &items[j].traj, cfg.iou_threshold);
                if theta >= cfg.merge_threshold && best.is_none_or(|(b, _, _)| theta > b) {
                    best = Some((theta, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        let merged = merge_pair(&items[i].traj, &items[j].traj);
        items[i].traj = merged;
        items.remove(j);
    }

    let mut out: Vec<Trajectory> = items.into_iter().map(|m| m.traj).collect();
    out.sort_by(|a, b| {
        a.span
            .begin
            .cmp(&b.span.begin)
            .then(
                b.score
                    .partial_cmp(&a.score)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
            .then(a.category.cmp(&b.category))
            .then(a.span.end.cmp(&b.span.end))
    });
    Ok(out)
}

struct MergeItem {
    traj: Trajectory,
}

/// Union-span merge; on doubly-covered frames the higher-scored constituent
/// supplies the box. Only called for temporally overlapping pairs, so the
/// union is contiguous.
fn merge_pair(a: &Trajectory, b: &Trajectory) -> Trajectory {
    let (hi, lo) = if a.score >= b.score { (a, b) } else { (b, a) };
    let span = FrameSpan {
        begin: a.span.begin.min(b.span.begin),
        end: a.span.end.max(b.span.end),
    };
    let boxes = span
        .frames()
        .map(|f| match hi.box_at(f) {
            Some(b) => *b,
            None => *lo.box_at(f).expect("merged spans must be contiguous"),
        })
        .collect();
    Trajectory {
        span,
        boxes,
        category: a.category.clone(),
        score: a.score.max(b.score),
    }
}

/// Full trajectory detection: segment the video, build tracklets per segment,
/// trim the filled margins, and merge across segments.
pub fn detect_trajectories(
    detections: &[Detection],
    num_frames: usize,
    cfg: &TrackingConfig,
) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    for d in detections {
        if d.frame >= num_frames {
            return Err(Error::invalid(
                "detection frame",
                format!("{} beyond video length {num_frames}", d.frame),
            ));
        }
    }
    let mut tracklets = Vec::new();
    for segment in split_video_segments(num_frames, cfg) {
        let in_segment: Vec<Detection> = detections
            .iter()
            .filter(|d| segment.contains(d.frame))
            .cloned()
            .collect();
        if in_segment.is_empty() {
            continue;
        }
        for t in build_segment_tracklets(&in_segment, segment, cfg)? {
            tracklets.push(t.trimmed());
        }
    }
    merge_tracklets(&tracklets, cfg)
}
