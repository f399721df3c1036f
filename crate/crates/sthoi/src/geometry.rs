//! Box and trajectory overlap arithmetic.
//!
//! Everything downstream (tracklet absorption, cross-segment merging,
//! candidate pairing, evaluation matching) reduces to the three overlap
//! measures defined here: frame-level IoU, the per-frame indicator overlap
//! ratio used for merging, and volumetric IoU used for evaluation matching.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in pixel units. `(x, y)` is the top-left corner; the
/// right edge sits at `x + w` (continuous geometry, no inclusive-pixel +1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let b = BBox { x, y, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()) {
            return Err(Error::invalid("box", "non-finite coordinate"));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::invalid(
                "box",
                format!("non-positive size {}x{}", self.w, self.h),
            ));
        }
        Ok(())
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    /// Overlapping region, if any.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x = self.x.max(other.x);
        let y = self.y.max(other.y);
        let r = self.right().min(other.right());
        let b = self.bottom().min(other.bottom());
        if r > x && b > y {
            Some(BBox {
                x,
                y,
                w: r - x,
                h: b - y,
            })
        } else {
            None
        }
    }
}

/// Intersection over union of two boxes. Symmetric, in `[0, 1]`, and 0 for
/// disjoint boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    match a.intersection(b) {
        Some(i) => {
            let inter = i.area();
            inter / (a.area() + b.area() - inter)
        }
        None => 0.0,
    }
}

/// Inclusive frame interval `[begin, end]` in absolute video frame numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FrameSpan {
    pub begin: usize,
    pub end: usize,
}

impl FrameSpan {
    pub fn new(begin: usize, end: usize) -> Result<Self> {
        if begin > end {
            return Err(Error::invalid(
                "frame span",
                format!("begin {begin} > end {end}"),
            ));
        }
        Ok(FrameSpan { begin, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.begin + 1
    }

    pub fn is_empty(&self) -> bool {
        false // begin <= end by construction; a span always covers >= 1 frame
    }

    pub fn contains(&self, frame: usize) -> bool {
        frame >= self.begin && frame <= self.end
    }

    pub fn intersect(&self, other: &FrameSpan) -> Option<FrameSpan> {
        let begin = self.begin.max(other.begin);
        let end = self.end.min(other.end);
        (begin <= end).then_some(FrameSpan { begin, end })
    }

    /// Frame count of the temporal union (frames covered by either span).
    pub fn union_len(&self, other: &FrameSpan) -> usize {
        let inter = self.intersect(other).map(|s| s.len()).unwrap_or(0);
        self.len() + other.len() - inter
    }

    pub fn frames(&self) -> impl Iterator<Item = usize> {
        self.begin..=self.end
    }
}

/// A per-frame bounding-box sequence for one entity over a contiguous span,
/// with its category and confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub span: FrameSpan,
    /// One box per frame of `span`, in frame order.
    pub boxes: Vec<BBox>,
    pub category: String,
    pub score: f64,
}

impl Trajectory {
    pub fn new(span: FrameSpan, boxes: Vec<BBox>, category: String, score: f64) -> Result<Self> {
        if boxes.len() != span.len() {
            return Err(Error::invalid(
                "trajectory",
                format!("{} boxes for a {}-frame span", boxes.len(), span.len()),
            ));
        }
        for b in &boxes {
            b.validate()?;
        }
        Ok(Trajectory {
            span,
            boxes,
            category,
            score,
        })
    }

    pub fn box_at(&self, frame: usize) -> Option<&BBox> {
        self.span
            .contains(frame)
            .then(|| &self.boxes[frame - self.span.begin])
    }

    /// Restriction to `span`; `None` when the spans do not intersect.
    pub fn crop(&self, span: &FrameSpan) -> Option<Trajectory> {
        let inter = self.span.intersect(span)?;
        let lo = inter.begin - self.span.begin;
        let hi = inter.end - self.span.begin;
        Some(Trajectory {
            span: inter,
            boxes: self.boxes[lo..=hi].to_vec(),
            category: self.category.clone(),
            score: self.score,
        })
    }
}

/// Trajectory overlap ratio: the fraction of temporally shared frames on
/// which the two box sequences overlap with IoU above `beta`. Zero when the
/// spans are temporally disjoint.
pub fn trajectory_overlap(tx: &Trajectory, ty: &Trajectory, beta: f64) -> f64 {
    let Some(inter) = tx.span.intersect(&ty.span) else {
        return 0.0;
    };
    let hits = inter
        .frames()
        .filter(|&f| iou(tx.box_at(f).unwrap(), ty.box_at(f).unwrap()) > beta)
        .count();
    hits as f64 / inter.len() as f64
}

/// Volumetric IoU: per-frame IoU summed over the temporal intersection,
/// divided by the length of the temporal union. Zero for disjoint spans.
pub fn viou(tx: &Trajectory, ty: &Trajectory) -> f64 {
    let Some(inter) = tx.span.intersect(&ty.span) else {
        return 0.0;
    };
    let sum: f64 = inter
        .frames()
        .map(|f| iou(tx.box_at(f).unwrap(), ty.box_at(f).unwrap()))
        .sum();
    sum / tx.span.union_len(&ty.span) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox::new(x, y, w, h).unwrap()
    }

    /// Trajectory with a constant box over `[begin, end]`.
    fn held(begin: usize, end: usize, b: BBox) -> Trajectory {
        let span = FrameSpan::new(begin, end).unwrap();
        Trajectory::new(span, vec![b; span.len()], "t".into(), 1.0).unwrap()
    }

    #[test]
    fn iou_identity() {
        let a = bx(3.0, 4.0, 11.0, 7.0);
        assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn iou_disjoint() {
        assert_eq!(
            iou(&bx(0.0, 0.0, 10.0, 10.0), &bx(100.0, 100.0, 10.0, 10.0)),
            0.0
        );
    }

    #[test]
    fn iou_half_offset() {
        // intersection 5x10 = 50, union 200 - 50 = 150
        let v = iou(&bx(0.0, 0.0, 10.0, 10.0), &bx(5.0, 0.0, 10.0, 10.0));
        assert!((v - 50.0 / 150.0).abs() < 1e-12);
    }

    #[test]
    fn box_rejects_degenerate() {
        assert!(BBox::new(0.0, 0.0, 0.0, 5.0).is_err());
        assert!(BBox::new(0.0, 0.0, 5.0, -1.0).is_err());
        assert!(BBox::new(f64::NAN, 0.0, 5.0, 5.0).is_err());
    }

    #[test]
    fn overlap_identical() {
        let t = held(2, 11, bx(0.0, 0.0, 8.0, 8.0));
        assert_eq!(trajectory_overlap(&t, &t, 0.5), 1.0);
    }

    #[test]
    fn overlap_disjoint_spans() {
        let a = held(1, 10, bx(0.0, 0.0, 8.0, 8.0));
        let b = held(20, 30, bx(0.0, 0.0, 8.0, 8.0));
        assert_eq!(trajectory_overlap(&a, &b, 0.5), 0.0);
        assert_eq!(viou(&a, &b), 0.0);
    }

    #[test]
    fn overlap_partial_indicator_count() {
        // Spans [1,10] and [6,15]; identical boxes on frames 6-8, disjoint on 9-10.
        let same = bx(0.0, 0.0, 10.0, 10.0);
        let far = bx(500.0, 500.0, 10.0, 10.0);
        let a = held(1, 10, same);
        let mut b_boxes = vec![same; 10];
        b_boxes[3] = far; // frame 9
        b_boxes[4] = far; // frame 10
        let b = Trajectory::new(FrameSpan::new(6, 15).unwrap(), b_boxes, "t".into(), 1.0).unwrap();
        let theta = trajectory_overlap(&a, &b, 0.5);
        assert!((theta - 3.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn viou_partial() {
        // Spans [1,10] and [6,15], identical boxes on the 5 shared frames -> 5/15.
        let a = held(1, 10, bx(0.0, 0.0, 10.0, 10.0));
        let b = held(6, 15, bx(0.0, 0.0, 10.0, 10.0));
        assert!((viou(&a, &b) - 5.0 / 15.0).abs() < 1e-12);
        assert_eq!(viou(&a, &a), 1.0);
    }

    #[test]
    fn crop_restricts_boxes() {
        let t = held(5, 14, bx(1.0, 2.0, 3.0, 4.0));
        let c = t.crop(&FrameSpan::new(8, 30).unwrap()).unwrap();
        assert_eq!(c.span, FrameSpan::new(8, 14).unwrap());
        assert_eq!(c.boxes.len(), 7);
        assert!(t.crop(&FrameSpan::new(20, 30).unwrap()).is_none());
    }

    /// Brute-force restatement of the overlap ratio: explicit loop over the
    /// intersection frames, counting the indicator.
    fn overlap_oracle(tx: &Trajectory, ty: &Trajectory, beta: f64) -> f64 {
        let m = tx.span.begin;
        let n = tx.span.end;
        let p = ty.span.begin;
        let q = ty.span.end;
        if !(n >= p && m <= q) {
            return 0.0;
        }
        let lo = m.max(p);
        let hi = n.min(q);
        let mut hits = 0usize;
        for f in lo..=hi {
            if iou(tx.box_at(f).unwrap(), ty.box_at(f).unwrap()) > beta {
                hits += 1;
            }
        }
        hits as f64 / (hi - lo + 1) as f64
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (0.0..200.0f64, 0.0..200.0f64, 1.0..60.0f64, 1.0..60.0f64)
            .prop_map(|(x, y, w, h)| bx(x, y, w, h))
    }

    fn arb_trajectory() -> impl Strategy<Value = Trajectory> {
        (0usize..40, 1usize..25).prop_flat_map(|(begin, len)| {
            prop::collection::vec(arb_box(), len).prop_map(move |boxes| {
                Trajectory::new(
                    FrameSpan::new(begin, begin + boxes.len() - 1).unwrap(),
                    boxes,
                    "t".into(),
                    1.0,
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn iou_symmetric_bounded(a in arb_box(), b in arb_box()) {
            let v = iou(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!((v - iou(&b, &a)).abs() < 1e-12);
        }

        #[test]
        fn overlap_matches_oracle(a in arb_trajectory(), b in arb_trajectory(), beta in 0.05..0.95f64) {
            prop_assert_eq!(trajectory_overlap(&a, &b, beta), overlap_oracle(&a, &b, beta));
        }

        #[test]
        fn overlap_monotone_in_beta(a in arb_trajectory(), b in arb_trajectory()) {
            let mut last = f64::INFINITY;
            for beta in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let v = trajectory_overlap(&a, &b, beta);
                prop_assert!(v <= last + 1e-12);
                last = v;
            }
        }

        #[test]
        fn viou_symmetric_bounded(a in arb_trajectory(), b in arb_trajectory()) {
            let v = viou(&a, &b);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            prop_assert!((v - viou(&b, &a)).abs() < 1e-12);
        }
    }
}
