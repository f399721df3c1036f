//! Multi-modal per-segment features.
//!
//! Three features describe a candidate segment: a human behavior descriptor
//! built from body-part trajectories pooled over CNN feature grids, a
//! relative motion encoding of the pair's endpoint geometry, and a semantic
//! feature from category word embeddings.

use std::collections::BTreeMap;

use ndarray::{Array1, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox, FrameSpan, Trajectory};
use crate::pairing::CandidateSegment;

/// Number of joints in the standard 17-keypoint human layout.
pub const JOINT_COUNT: usize = 17;

/// Canonical joint order of the 17-keypoint layout used by keypoint files.
pub const JOINT_NAMES: [&str; JOINT_COUNT] = [
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub x: f64,
    pub y: f64,
    /// Visibility score in `[0, 1]`.
    pub visibility: f64,
}

/// One person's pose on one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub joints: [Joint; JOINT_COUNT],
}

impl Skeleton {
    /// Tight box over the joints with non-zero visibility; `None` when no
    /// joint is visible. Degenerate extents are padded to one pixel so the
    /// result is always a valid box.
    pub fn bbox(&self) -> Option<BBox> {
        let visible: Vec<&Joint> = self.joints.iter().filter(|j| j.visibility > 0.0).collect();
        if visible.is_empty() {
            return None;
        }
        let min_x = visible.iter().map(|j| j.x).fold(f64::INFINITY, f64::min);
        let max_x = visible
            .iter()
            .map(|j| j.x)
            .fold(f64::NEG_INFINITY, f64::max);
        let min_y = visible.iter().map(|j| j.y).fold(f64::INFINITY, f64::min);
        let max_y = visible
            .iter()
            .map(|j| j.y)
            .fold(f64::NEG_INFINITY, f64::max);
        Some(BBox {
            x: min_x,
            y: min_y,
            w: (max_x - min_x).max(1.0),
            h: (max_y - min_y).max(1.0),
        })
    }
}

/// Per-frame skeletons attached to one human trajectory.
#[derive(Debug, Clone)]
pub struct SkeletonTrajectory {
    /// Index of the host human trajectory.
    pub host: usize,
    /// Host trajectory span; `skeletons[f - span.begin]` is the pose on frame `f`.
    pub span: FrameSpan,
    pub skeletons: Vec<Option<Skeleton>>,
}

impl SkeletonTrajectory {
    pub fn skeleton_at(&self, frame: usize) -> Option<&Skeleton> {
        if !self.span.contains(frame) {
            return None;
        }
        self.skeletons[frame - self.span.begin].as_ref()
    }
}

/// Assign frame-level skeletons to human trajectories by box IoU.
///
/// Per frame, each skeleton goes to the human trajectory maximizing the IoU
/// between the skeleton's joint bounding box and the trajectory box, provided
/// the IoU is positive. A trajectory receives at most one skeleton per frame;
/// when two skeletons prefer the same trajectory the higher IoU wins and the
/// loser stays unassigned.
pub fn assign_skeletons(
    skeletons_per_frame: &BTreeMap<usize, Vec<Skeleton>>,
    trajectories: &[Trajectory],
    human_category: &str,
) -> Vec<SkeletonTrajectory> {
    let mut out: Vec<SkeletonTrajectory> = trajectories
        .iter()
        .enumerate()
        .filter(|(_, t)| t.category == human_category)
        .map(|(i, t)| SkeletonTrajectory {
            host: i,
            span: t.span,
            skeletons: vec![None; t.span.len()],
        })
        .collect();

    for (&frame, skeletons) in skeletons_per_frame {
        // skeleton -> (best trajectory slot, best iou)
        let mut claims: Vec<(usize, usize, f64)> = Vec::new();
        for (s_idx, sk) in skeletons.iter().enumerate() {
            let Some(sk_box) = sk.bbox() else { continue };
            let mut best: Option<(usize, f64)> = None;
            for (slot, st) in out.iter().enumerate() {
                let Some(tb) = trajectories[st.host].box_at(frame) else {
                    continue;
                };
                let v = iou(&sk_box, tb);
                if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                    best = Some((slot, v));
                }
            }
            if let Some((slot, v)) = best {
                claims.push((s_idx, slot, v));
            }
        }
        // per trajectory keep the highest-IoU claimant
        let mut winner: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
        for (s_idx, slot, v) in claims {
            let replace = winner.get(&slot).is_none_or(|&(_, b)| v > b);
            if replace {
                winner.insert(slot, (s_idx, v));
            }
        }
        for (slot, (s_idx, _)) in winner {
            let off = frame - out[slot].span.begin;
            out[slot].skeletons[off] = Some(skeletons[s_idx].clone());
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Body-part box side as a ratio of the larger host-box dimension.
    pub part_box_ratio: f64,
    /// Joints below this visibility fall back to the whole host box.
    pub visibility_min: f64,
    /// Spatial resolution of the pooled output grid.
    pub roi_grid: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            part_box_ratio: 0.2,
            visibility_min: 0.3,
            roi_grid: 7,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.part_box_ratio > 0.0 && self.part_box_ratio < 1.0) {
            return Err(Error::invalid(
                "features.part_box_ratio",
                "must be in (0, 1)",
            ));
        }
        if !(0.0..=1.0).contains(&self.visibility_min) {
            return Err(Error::invalid(
                "features.visibility_min",
                "must be in [0, 1]",
            ));
        }
        if self.roi_grid == 0 {
            return Err(Error::invalid("features.roi_grid", "must be >= 1"));
        }
        Ok(())
    }
}

/// Square body-part boxes, one per joint, clipped to the frame.
///
/// Joint `i` yields a square of side `ratio * max(host.w, host.h)` centered
/// at the joint; joints with visibility below `visibility_min` fall back to
/// the whole host box. Centers are clamped into the frame before clipping so
/// the result always has positive extent.
pub fn body_part_boxes(
    skeleton: &Skeleton,
    host_box: &BBox,
    frame: &BBox,
    cfg: &FeatureConfig,
) -> [BBox; JOINT_COUNT] {
    let side = cfg.part_box_ratio * host_box.w.max(host_box.h);
    std::array::from_fn(|i| {
        let j = &skeleton.joints[i];
        if j.visibility < cfg.visibility_min {
            return *host_box;
        }
        let cx = j.x.clamp(frame.x, frame.right());
        let cy = j.y.clamp(frame.y, frame.bottom());
        let x0 = (cx - side / 2.0).max(frame.x);
        let y0 = (cy - side / 2.0).max(frame.y);
        let x1 = (cx + side / 2.0).min(frame.right());
        let y1 = (cy + side / 2.0).min(frame.bottom());
        if x1 > x0 && y1 > y0 {
            BBox {
                x: x0,
                y: y0,
                w: x1 - x0,
                h: y1 - y0,
            }
        } else {
            // center pinned to an edge of a zero-margin frame; keep the host box
            *host_box
        }
    })
}

/// A CNN feature map for one frame, supplied as input data.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    /// Absolute frame number.
    pub frame: usize,
    /// `(channels, height, width)` activation cells.
    pub values: Array3<f32>,
    /// Full-frame extent in pixels that the grid covers.
    pub frame_width: f64,
    pub frame_height: f64,
}

impl FeatureGrid {
    pub fn channels(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn frame_box(&self) -> BBox {
        BBox {
            x: 0.0,
            y: 0.0,
            w: self.frame_width,
            h: self.frame_height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.values.shape();
        if s[0] == 0 || s[1] == 0 || s[2] == 0 {
            return Err(Error::invalid("feature grid", "zero-sized dimension"));
        }
        if self.frame_width <= 0.0 || self.frame_height <= 0.0 {
            return Err(Error::invalid("feature grid", "non-positive frame extent"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature grid", "non-finite value"));
        }
        Ok(())
    }
}

/// Bilinear sample of one channel at continuous grid coordinates `(gx, gy)`,
/// where cell `(r, c)` has its center at `(c + 0.5, r + 0.5)`. Samples beyond
/// the border clamp to the edge cells.
fn bilinear(grid: &FeatureGrid, ch: usize, gx: f64, gy: f64) -> f64 {
    let h = grid.values.shape()[1] as isize;
    let w = grid.values.shape()[2] as isize;
    let fx = gx - 0.5;
    let fy = gy - 0.5;
    let x0 = fx.floor();
    let y0 = fy.floor();
    let tx = fx - x0;
    let ty = fy - y0;
    let clamp = |v: isize, hi: isize| v.clamp(0, hi - 1) as usize;
    let x0i = x0 as isize;
    let y0i = y0 as isize;
    let at = |r: isize, c: isize| grid.values[(ch, clamp(r, h), clamp(c, w))] as f64;
    let v00 = at(y0i, x0i);
    let v01 = at(y0i, x0i + 1);
    let v10 = at(y0i + 1, x0i);
    let v11 = at(y0i + 1, x0i + 1);
    v00 * (1.0 - tx) * (1.0 - ty) + v01 * tx * (1.0 - ty) + v10 * (1.0 - tx) * ty + v11 * tx * ty
}

/// RoI-align of a pixel-space box into an `out x out` grid per channel, one
/// bilinear sample at each bin center.
pub fn roi_pool_frame(grid: &FeatureGrid, bbox: &BBox, out: usize) -> Result<Array3<f64>> {
    grid.validate()?;
    if out == 0 {
        return Err(Error::invalid("roi output grid", "must be >= 1"));
    }
    let clipped = bbox
        .intersection(&grid.frame_box())
        .ok_or_else(|| Error::invalid("roi box", "zero-area after clipping to frame"))?;

    let gh = grid.values.shape()[1] as f64;
    let gw = grid.values.shape()[2] as f64;
    let sx = gw / grid.frame_width;
    let sy = gh / grid.frame_height;
    // box in grid coordinates
    let bx = clipped.x * sx;
    let by = clipped.y * sy;
    let bw = clipped.w * sx;
    let bh = clipped.h * sy;

    let c = grid.channels();
    let mut pooled = Array3::zeros((c, out, out));
    for ch in 0..c {
        for oy in 0..out {
            for ox in 0..out {
                let gx = bx + bw * (ox as f64 + 0.5) / out as f64;
                let gy = by + bh * (oy as f64 + 0.5) / out as f64;
                pooled[(ch, oy, ox)] = bilinear(grid, ch, gx, gy);
            }
        }
    }
    Ok(pooled)
}

/// Trajectory-of-interest pooling: RoI-align each frame's box, take the
/// element-wise maximum across frames, then global-average-pool spatially to
/// one value per channel.
pub fn toi_pool(grids: &[FeatureGrid], boxes: &[BBox], out: usize) -> Result<Array1<f64>> {
    if grids.is_empty() {
        return Err(Error::invalid("toi pool", "empty frame list"));
    }
    if grids.len() != boxes.len() {
        return Err(Error::mismatch(format!(
            "{} grids for {} boxes",
            grids.len(),
            boxes.len()
        )));
    }
    let mut fused: Option<Array3<f64>> = None;
    for (grid, bbox) in grids.iter().zip(boxes) {
        let pooled = roi_pool_frame(grid, bbox, out)?;
        fused = Some(match fused {
            None => pooled,
            Some(mut acc) => {
                acc.zip_mut_with(&pooled, |a, &b| *a = a.max(b));
                acc
            }
        });
    }
    let fused = fused.unwrap();
    let c = fused.shape()[0];
    let cells = (fused.shape()[1] * fused.shape()[2]) as f64;
    let mut v = Array1::zeros(c);
    for ch in 0..c {
        v[ch] = fused.index_axis(ndarray::Axis(0), ch).sum() / cells;
    }
    Ok(v)
}

/// Behavior descriptor: pooled dynamic features of each body part over the
/// segment, concatenated in fixed joint order. On frames where the skeleton
/// is missing or a joint is invisible the whole-body box stands in, so the
/// pooling window is always fully defined; with no skeleton at all the
/// descriptor degrades to `JOINT_COUNT` copies of whole-body pooling.
pub fn behavior_descriptor(
    segment: &CandidateSegment,
    skeleton_traj: Option<&SkeletonTrajectory>,
    grids: &[FeatureGrid],
    cfg: &FeatureConfig,
) -> Result<Array1<f64>> {
    cfg.validate()?;
    if grids.len() != segment.span.len() {
        return Err(Error::mismatch(format!(
            "{} grids for a {}-frame segment",
            grids.len(),
            segment.span.len()
        )));
    }
    let channels = grids[0].channels();
    let mut descriptor = Array1::zeros(JOINT_COUNT * channels);
    let frame_box = grids[0].frame_box();

    for part in 0..JOINT_COUNT {
        let boxes: Vec<BBox> = segment
            .span
            .frames()
            .enumerate()
            .map(|(off, frame)| {
                let host = &segment.human_boxes[off];
                match skeleton_traj.and_then(|st| st.skeleton_at(frame)) {
                    Some(sk) => body_part_boxes(sk, host, &frame_box, cfg)[part],
                    None => *host,
                }
            })
            .collect();
        let v = toi_pool(grids, &boxes, cfg.roi_grid)?;
        descriptor
            .slice_mut(ndarray::s![part * channels..(part + 1) * channels])
            .assign(&v);
    }
    Ok(descriptor)
}

/// Relative location encoding of a human/object box pair:
/// `(s_x, s_y, s_w, s_h, s_a)` with offsets normalized by the human box and
/// log-ratio scale terms.
pub fn relative_location(human: &BBox, object: &BBox) -> Result<[f64; 5]> {
    for (name, b) in [("human", human), ("object", object)] {
        if b.w <= 0.0 || b.h <= 0.0 {
            return Err(Error::invalid(
                "relative location",
                format!("{name} box has non-positive size"),
            ));
        }
    }
    Ok([
        (human.x - object.x) / human.w,
        (human.y - object.y) / human.h,
        (human.w / object.w).ln(),
        (human.h / object.h).ln(),
        ((human.w * human.h) / (object.w * object.h)).ln(),
    ])
}

/// Relative motion feature of a segment: the relative location of the first
/// frame, of the last frame, and their difference, concatenated (length 15).
pub fn motion_feature(segment: &CandidateSegment) -> Result<Array1<f64>> {
    if segment.span.len() < 2 {
        return Err(Error::invalid(
            "motion feature",
            "segment must span at least 2 frames",
        ));
    }
    let first = relative_location(&segment.human_boxes[0], &segment.object_boxes[0])?;
    let n = segment.span.len() - 1;
    let last = relative_location(&segment.human_boxes[n], &segment.object_boxes[n])?;
    let mut f = Array1::zeros(15);
    for i in 0..5 {
        f[i] = first[i];
        f[5 + i] = last[i];
        f[10 + i] = last[i] - first[i];
    }
    Ok(f)
}

/// Category word vectors, one fixed-dimension row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vectors: BTreeMap<String, Vec<f64>>,
    dim: usize,
}

impl EmbeddingTable {
    pub fn new(vectors: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let mut dim = None;
        for (token, v) in &vectors {
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::mismatch(format!(
                        "embedding for {token:?} has dimension {} != {d}",
                        v.len()
                    )))
                }
                _ => {}
            }
        }
        let dim = dim.ok_or_else(|| Error::invalid("embedding table", "empty table"))?;
        if dim == 0 {
            return Err(Error::invalid(
                "embedding table",
                "zero-dimensional vectors",
            ));
        }
        Ok(EmbeddingTable { vectors, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Result<&[f64]> {
        self.vectors
            .get(token)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::MissingToken {
                token: token.to_string(),
                context: Some("embedding table".into()),
            })
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(|s| s.as_str())
    }
}

/// Semantic context feature: the human-category vector concatenated with the
/// object-category vector.
pub fn semantic_feature(
    human_category: &str,
    object_category: &str,
    table: &EmbeddingTable,
) -> Result<Array1<f64>> {
    let vh = table.get(human_category)?;
    let vo = table.get(object_category)?;
    let mut f = Array1::zeros(2 * table.dim());
    f.slice_mut(ndarray::s![..table.dim()])
        .assign(&Array1::from_vec(vh.to_vec()));
    f.slice_mut(ndarray::s![table.dim()..])
        .assign(&Array1::from_vec(vo.to_vec()));
    Ok(f)
}

/// The three per-segment features fed to the recognizer.
#[derive(Debug, Clone)]
pub struct FeatureBundle {
    pub behavior: Array1<f64>,
    pub motion: Array1<f64>,
    pub semantic: Array1<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::CandidatePair;
    use approx::assert_abs_diff_eq;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox::new(x, y, w, h).unwrap()
    }

    fn skeleton_at(points: [(f64, f64); JOINT_COUNT], visibility: f64) -> Skeleton {
        Skeleton {
            joints: std::array::from_fn(|i| Joint {
                x: points[i].0,
                y: points[i].1,
                visibility,
            }),
        }
    }

    fn uniform_skeleton(cx: f64, cy: f64, spread: f64) -> Skeleton {
        Skeleton {
            joints: std::array::from_fn(|i| Joint {
                x: cx + spread * ((i % 5) as f64 - 2.0) / 2.0,
                y: cy + spread * ((i / 5) as f64 - 1.5) / 2.0,
                visibility: 1.0,
            }),
        }
    }

    fn grid_const(frame: usize, c: usize, h: usize, w: usize, value: f32) -> FeatureGrid {
        FeatureGrid {
            frame,
            values: Array3::from_elem((c, h, w), value),
            frame_width: 100.0,
            frame_height: 100.0,
        }
    }

    fn traj(begin: usize, end: usize, b: BBox, category: &str) -> Trajectory {
        let span = FrameSpan::new(begin, end).unwrap();
        Trajectory::new(span, vec![b; span.len()], category.into(), 1.0).unwrap()
    }

    #[test]
    fn assign_prefers_highest_iou() {
        let trajs = vec![
            traj(0, 5, bx(0.0, 0.0, 40.0, 40.0), "human"),
            traj(0, 5, bx(100.0, 0.0, 40.0, 40.0), "human"),
        ];
        let sk = uniform_skeleton(20.0, 20.0, 30.0);
        let mut per_frame = BTreeMap::new();
        per_frame.insert(2usize, vec![sk.clone()]);
        let assigned = assign_skeletons(&per_frame, &trajs, "human");
        assert_eq!(assigned.len(), 2);
        assert!(assigned[0].skeleton_at(2).is_some());
        assert!(assigned[1].skeleton_at(2).is_none());
        assert!(assigned[0].skeleton_at(3).is_none());
    }

    #[test]
    fn assign_skips_zero_iou() {
        let trajs = vec![traj(0, 5, bx(0.0, 0.0, 40.0, 40.0), "human")];
        let sk = uniform_skeleton(500.0, 500.0, 30.0);
        let mut per_frame = BTreeMap::new();
        per_frame.insert(2usize, vec![sk]);
        let assigned = assign_skeletons(&per_frame, &trajs, "human");
        assert!(assigned[0].skeleton_at(2).is_none());
    }

    #[test]
    fn assign_one_skeleton_per_trajectory_per_frame() {
        let trajs = vec![traj(0, 5, bx(0.0, 0.0, 40.0, 40.0), "human")];
        let strong = uniform_skeleton(20.0, 20.0, 36.0);
        let weak = uniform_skeleton(30.0, 30.0, 18.0);
        let mut per_frame = BTreeMap::new();
        per_frame.insert(2usize, vec![weak, strong.clone()]);
        let assigned = assign_skeletons(&per_frame, &trajs, "human");
        assert_eq!(assigned[0].skeleton_at(2), Some(&strong));
    }

    #[test]
    fn part_box_centered_square() {
        let cfg = FeatureConfig::default();
        let host = bx(0.0, 0.0, 100.0, 100.0);
        let frame = bx(0.0, 0.0, 1000.0, 1000.0);
        let sk = skeleton_at([(50.0, 50.0); JOINT_COUNT], 1.0);
        let parts = body_part_boxes(&sk, &host, &frame, &cfg);
        assert_abs_diff_eq!(parts[0].x, 40.0, epsilon = 1e-12);
        assert_abs_diff_eq!(parts[0].y, 40.0, epsilon = 1e-12);
        assert_abs_diff_eq!(parts[0].w, 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(parts[0].h, 20.0, epsilon = 1e-12);
    }

    #[test]
    fn invisible_joint_falls_back_to_host() {
        let cfg = FeatureConfig::default();
        let host = bx(10.0, 10.0, 50.0, 50.0);
        let frame = bx(0.0, 0.0, 1000.0, 1000.0);
        let sk = skeleton_at([(30.0, 30.0); JOINT_COUNT], 0.1);
        let parts = body_part_boxes(&sk, &host, &frame, &cfg);
        assert_eq!(parts[5], host);
    }

    #[test]
    fn corner_joint_clips_positive() {
        let cfg = FeatureConfig::default();
        let host = bx(0.0, 0.0, 100.0, 100.0);
        let frame = bx(0.0, 0.0, 640.0, 480.0);
        let sk = skeleton_at([(0.0, 0.0); JOINT_COUNT], 1.0);
        let parts = body_part_boxes(&sk, &host, &frame, &cfg);
        assert!(parts[0].w > 0.0 && parts[0].h > 0.0);
        assert_abs_diff_eq!(parts[0].w, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn roi_pool_constant_grid() {
        let grid = grid_const(0, 3, 8, 8, 2.5);
        let pooled = roi_pool_frame(&grid, &bx(13.0, 27.0, 31.0, 42.0), 7).unwrap();
        for v in pooled.iter() {
            assert_abs_diff_eq!(*v, 2.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn roi_pool_identity_sampling() {
        let mut grid = grid_const(0, 1, 4, 4, 0.0);
        for r in 0..4 {
            for c in 0..4 {
                grid.values[(0, r, c)] = (r * 4 + c) as f32;
            }
        }
        let pooled = roi_pool_frame(&grid, &bx(0.0, 0.0, 100.0, 100.0), 4).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_abs_diff_eq!(pooled[(0, r, c)], (r * 4 + c) as f64, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn roi_pool_right_half_of_step_grid() {
        let mut grid = grid_const(0, 1, 1, 2, 0.0);
        grid.values[(0, 0, 1)] = 1.0;
        let pooled = roi_pool_frame(&grid, &bx(50.0, 0.0, 50.0, 100.0), 3).unwrap();
        for v in pooled.iter() {
            assert!(*v >= 0.5, "sample {v} below 0.5");
        }
    }

    #[test]
    fn roi_pool_rejects_outside_box() {
        let grid = grid_const(0, 1, 4, 4, 1.0);
        assert!(roi_pool_frame(&grid, &bx(500.0, 500.0, 10.0, 10.0), 3).is_err());
    }

    #[test]
    fn toi_pool_max_then_mean() {
        let a = grid_const(0, 2, 4, 4, 1.0);
        let b = grid_const(1, 2, 4, 4, 3.0);
        let full = bx(0.0, 0.0, 100.0, 100.0);
        let v = toi_pool(&[a.clone(), b.clone()], &[full, full], 4).unwrap();
        assert_eq!(v.len(), 2);
        assert_abs_diff_eq!(v[0], 3.0, epsilon = 1e-9);

        // frame order and duplication do not change the max
        let v2 = toi_pool(&[b.clone(), a.clone(), b], &[full, full, full], 4).unwrap();
        assert_abs_diff_eq!(v[0], v2[0], epsilon = 1e-12);

        assert!(toi_pool(&[], &[], 4).is_err());
        let zero = grid_const(0, 2, 4, 4, 0.0);
        let vz = toi_pool(&[zero], &[full], 4).unwrap();
        assert!(vz.iter().all(|x| *x == 0.0));
    }

    fn segment(begin: usize, end: usize, human: BBox, object: BBox) -> CandidateSegment {
        let span = FrameSpan::new(begin, end).unwrap();
        CandidateSegment {
            pair: CandidatePair {
                human: 0,
                object: 1,
                span,
            },
            span,
            human_boxes: vec![human; span.len()],
            object_boxes: vec![object; span.len()],
        }
    }

    #[test]
    fn behavior_descriptor_shape_and_constant_grid() {
        let cfg = FeatureConfig::default();
        let seg = segment(0, 4, bx(10.0, 10.0, 40.0, 40.0), bx(60.0, 10.0, 20.0, 20.0));
        let grids: Vec<FeatureGrid> = (0..5).map(|f| grid_const(f, 3, 6, 6, 1.5)).collect();
        let f = behavior_descriptor(&seg, None, &grids, &cfg).unwrap();
        assert_eq!(f.len(), JOINT_COUNT * 3);
        for v in f.iter() {
            assert_abs_diff_eq!(*v, 1.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn relative_location_cases() {
        let h = bx(10.0, 10.0, 20.0, 20.0);
        assert_eq!(relative_location(&h, &h).unwrap(), [0.0; 5]);

        let o = bx(20.0, 10.0, 10.0, 20.0);
        let f = relative_location(&h, &o).unwrap();
        assert_abs_diff_eq!(f[0], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[2], 2.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(f[3], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[4], 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn relative_location_swap_negates_log_terms() {
        let h = bx(5.0, 8.0, 30.0, 18.0);
        let o = bx(12.0, 4.0, 22.0, 40.0);
        let ho = relative_location(&h, &o).unwrap();
        let oh = relative_location(&o, &h).unwrap();
        for i in 2..5 {
            assert_abs_diff_eq!(ho[i], -oh[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn relative_location_rejects_degenerate_box() {
        let h = bx(0.0, 0.0, 10.0, 10.0);
        let flat = BBox {
            x: 5.0,
            y: 5.0,
            w: 0.0,
            h: 10.0,
        };
        assert!(relative_location(&h, &flat).is_err());
        assert!(relative_location(&flat, &h).is_err());
    }

    #[test]
    fn behavior_blocks_follow_joint_order() {
        // a horizontal gradient so each part pools a value tied to its x position
        let cfg = FeatureConfig::default();
        let mut grid = grid_const(0, 1, 10, 10, 0.0);
        for r in 0..10 {
            for c in 0..10 {
                grid.values[(0, r, c)] = c as f32;
            }
        }
        let host = bx(5.0, 5.0, 90.0, 90.0);
        let seg = segment(0, 0, host, bx(0.0, 0.0, 10.0, 10.0));

        let mut points = [(20.0, 50.0); JOINT_COUNT];
        points[3] = (80.0, 50.0); // one joint far right of the others
        let sk_a = skeleton_at(points, 1.0);
        points.swap(0, 3);
        let sk_b = skeleton_at(points, 1.0);

        let wrap = |sk: Skeleton| SkeletonTrajectory {
            host: 0,
            span: seg.span,
            skeletons: vec![Some(sk)],
        };
        let fa = behavior_descriptor(&seg, Some(&wrap(sk_a)), std::slice::from_ref(&grid), &cfg)
            .unwrap();
        let fb = behavior_descriptor(&seg, Some(&wrap(sk_b)), std::slice::from_ref(&grid), &cfg)
            .unwrap();
        // swapping joints 0 and 3 swaps the corresponding channel blocks
        assert_abs_diff_eq!(fa[0], fb[3], epsilon = 1e-12);
        assert_abs_diff_eq!(fa[3], fb[0], epsilon = 1e-12);
        assert!(fa[0] != fa[3], "gradient should separate the two joints");
        for part in 4..JOINT_COUNT {
            assert_abs_diff_eq!(fa[part], fb[part], epsilon = 1e-12);
        }
    }

    #[test]
    fn motion_feature_static_pair() {
        let seg = segment(0, 9, bx(10.0, 10.0, 20.0, 20.0), bx(40.0, 10.0, 20.0, 20.0));
        let f = motion_feature(&seg).unwrap();
        assert_eq!(f.len(), 15);
        for i in 0..5 {
            assert_abs_diff_eq!(f[i], f[5 + i], epsilon = 1e-12);
            assert_abs_diff_eq!(f[10 + i], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn motion_feature_drift() {
        let span = FrameSpan::new(0, 9).unwrap();
        let human = bx(10.0, 10.0, 20.0, 20.0);
        let mut object_boxes = vec![bx(10.0, 10.0, 20.0, 20.0); 10];
        object_boxes[9] = bx(20.0, 10.0, 20.0, 20.0); // s_x goes 0 -> -0.5
        let seg = CandidateSegment {
            pair: CandidatePair {
                human: 0,
                object: 1,
                span,
            },
            span,
            human_boxes: vec![human; 10],
            object_boxes,
        };
        let f = motion_feature(&seg).unwrap();
        assert_abs_diff_eq!(f[10], -0.5, epsilon = 1e-12);
        for i in 11..15 {
            assert_abs_diff_eq!(f[i], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn semantic_feature_concat() {
        let mut vectors = BTreeMap::new();
        vectors.insert("human".to_string(), vec![1.0, 0.0, 0.0]);
        vectors.insert("dog".to_string(), vec![0.0, 1.0, 0.0]);
        vectors.insert("cat".to_string(), vec![0.0, 0.0, 1.0]);
        let table = EmbeddingTable::new(vectors).unwrap();

        let fd = semantic_feature("human", "dog", &table).unwrap();
        let fc = semantic_feature("human", "cat", &table).unwrap();
        assert_eq!(fd.len(), 6);
        assert_eq!(fd.slice(ndarray::s![..3]), fc.slice(ndarray::s![..3]));
        assert_ne!(fd.slice(ndarray::s![3..]), fc.slice(ndarray::s![3..]));

        match semantic_feature("human", "zebra", &table) {
            Err(Error::MissingToken { token, .. }) => assert_eq!(token, "zebra"),
            other => panic!("expected missing token, got {other:?}"),
        }
    }

    #[test]
    fn embedding_table_rejects_inconsistent_dims() {
        let mut vectors = BTreeMap::new();
        vectors.insert("a".to_string(), vec![1.0, 2.0]);
        vectors.insert("b".to_string(), vec![1.0]);
        assert!(EmbeddingTable::new(vectors).is_err());
        assert!(EmbeddingTable::new(BTreeMap::new()).is_err());
    }
}
