//! Candidate pair formation and fixed-duration segmentation.
//!
//! Every human trajectory is paired with every other trajectory it co-occurs
//! with (humans included, both directions, since predicates are
//! subject-directed), and each pair's shared span is cut into consecutive
//! windows that form the atomic units of interaction recognition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, FrameSpan, Trajectory};

/// A human-object trajectory pair over their co-occurrent span. Indices refer
/// to the trajectory list the pair was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidatePair {
    pub human: usize,
    pub object: usize,
    pub span: FrameSpan,
}

/// One fixed-duration window of a candidate pair, carrying the aligned
/// per-frame boxes of both trajectories.
#[derive(Debug, Clone)]
pub struct CandidateSegment {
    pub pair: CandidatePair,
    pub span: FrameSpan,
    pub human_boxes: Vec<BBox>,
    pub object_boxes: Vec<BBox>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairingConfig {
    /// Candidate segment duration in frames.
    pub segment_len: usize,
}

impl Default for PairingConfig {
    fn default() -> Self {
        PairingConfig { segment_len: 10 }
    }
}

impl PairingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_len < 2 {
            return Err(Error::invalid("pairing.segment_len", "must be >= 2"));
        }
        Ok(())
    }
}

/// Pair every human trajectory with every co-occurrent partner.
///
/// Humans are identified by `human_category`; a human may appear as the
/// object of another human's pair, so two co-occurrent humans yield both
/// orderings.
pub fn co_occurrent_pairs(trajectories: &[Trajectory], human_category: &str) -> Vec<CandidatePair> {
    let mut pairs = Vec::new();
    for (h, human) in trajectories.iter().enumerate() {
        if human.category != human_category {
            continue;
        }
        for (o, object) in trajectories.iter().enumerate() {
            if o == h {
                continue;
            }
            if let Some(span) = human.span.intersect(&object.span) {
                pairs.push(CandidatePair {
                    human: h,
                    object: o,
                    span,
                });
            }
        }
    }
    pairs
}

/// Cut a pair's span into consecutive non-overlapping windows of length `len`.
/// A trailing remainder of at least 2 frames becomes a final shorter window;
/// a single leftover frame is dropped (the motion feature needs two distinct
/// endpoint frames).
pub fn split_candidate_segments(
    pair: &CandidatePair,
    trajectories: &[Trajectory],
    len: usize,
) -> Result<Vec<CandidateSegment>> {
    if len < 2 {
        return Err(Error::invalid("segment length", "must be >= 2"));
    }
    let human = &trajectories[pair.human];
    let object = &trajectories[pair.object];
    let mut out = Vec::new();
    let mut begin = pair.span.begin;
    while begin <= pair.span.end {
        let remaining = pair.span.end - begin + 1;
        if remaining < 2 {
            break;
        }
        let end = (begin + len - 1).min(pair.span.end);
        let span = FrameSpan { begin, end };
        let human_boxes = span
            .frames()
            .map(|f| *human.box_at(f).expect("pair span inside human span"))
            .collect();
        let object_boxes = span
            .frames()
            .map(|f| *object.box_at(f).expect("pair span inside object span"))
            .collect();
        out.push(CandidateSegment {
            pair: *pair,
            span,
            human_boxes,
            object_boxes,
        });
        begin = end + 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(begin: usize, end: usize, category: &str) -> Trajectory {
        let span = FrameSpan::new(begin, end).unwrap();
        Trajectory::new(
            span,
            vec![BBox::new(0.0, 0.0, 10.0, 10.0).unwrap(); span.len()],
            category.into(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn pair_spans_intersect() {
        let trajs = vec![traj(0, 100, "human"), traj(50, 150, "cup")];
        let pairs = co_occurrent_pairs(&trajs, "human");
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].span, FrameSpan::new(50, 100).unwrap());
    }

    #[test]
    fn no_pair_without_cooccurrence() {
        let trajs = vec![traj(0, 10, "human"), traj(20, 30, "cup")];
        assert!(co_occurrent_pairs(&trajs, "human").is_empty());
    }

    #[test]
    fn humans_pair_both_ways() {
        let trajs = vec![
            traj(0, 50, "human"),
            traj(0, 50, "human"),
            traj(0, 50, "cup"),
        ];
        let pairs = co_occurrent_pairs(&trajs, "human");
        // (h0,h1), (h0,o), (h1,h0), (h1,o)
        assert_eq!(pairs.len(), 4);
        let keys: Vec<(usize, usize)> = pairs.iter().map(|p| (p.human, p.object)).collect();
        assert!(keys.contains(&(0, 1)));
        assert!(keys.contains(&(1, 0)));
        assert!(keys.contains(&(0, 2)));
        assert!(keys.contains(&(1, 2)));
    }

    #[test]
    fn split_windows_and_remainder() {
        let trajs = vec![traj(0, 100, "human"), traj(0, 100, "cup")];
        let pair = CandidatePair {
            human: 0,
            object: 1,
            span: FrameSpan::new(10, 34).unwrap(), // 25 frames
        };
        let segs = split_candidate_segments(&pair, &trajs, 10).unwrap();
        let lens: Vec<usize> = segs.iter().map(|s| s.span.len()).collect();
        assert_eq!(lens, vec![10, 10, 5]);
        assert_eq!(segs[0].human_boxes.len(), 10);
    }

    #[test]
    fn split_drops_single_frame_remainder() {
        let trajs = vec![traj(0, 100, "human"), traj(0, 100, "cup")];
        let pair = CandidatePair {
            human: 0,
            object: 1,
            span: FrameSpan::new(0, 10).unwrap(), // 11 frames
        };
        let segs = split_candidate_segments(&pair, &trajs, 10).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].span.len(), 10);
    }

    #[test]
    fn split_short_span() {
        let trajs = vec![traj(0, 100, "human"), traj(0, 100, "cup")];
        let one = CandidatePair {
            human: 0,
            object: 1,
            span: FrameSpan::new(5, 5).unwrap(),
        };
        assert!(split_candidate_segments(&one, &trajs, 10)
            .unwrap()
            .is_empty());
        let ten = CandidatePair {
            human: 0,
            object: 1,
            span: FrameSpan::new(0, 9).unwrap(),
        };
        assert_eq!(split_candidate_segments(&ten, &trajs, 10).unwrap().len(), 1);
    }

    #[test]
    fn windows_tile_without_overlap() {
        let trajs = vec![traj(0, 200, "human"), traj(0, 200, "cup")];
        for span_len in 2..60 {
            let pair = CandidatePair {
                human: 0,
                object: 1,
                span: FrameSpan::new(7, 7 + span_len - 1).unwrap(),
            };
            let segs = split_candidate_segments(&pair, &trajs, 10).unwrap();
            let covered: usize = segs.iter().map(|s| s.span.len()).sum();
            assert!(
                span_len - covered <= 1,
                "span {span_len} left {} uncovered",
                span_len - covered
            );
            for w in segs.windows(2) {
                assert_eq!(w[1].span.begin, w[0].span.end + 1);
            }
        }
    }

    #[test]
    fn pair_count_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let trajs: Vec<Trajectory> = (0..rng.random_range(1..8))
                .map(|_| {
                    let begin = rng.random_range(0..60);
                    let end = begin + rng.random_range(0..60);
                    traj(begin, end, ["human", "cup", "dog"][rng.random_range(0..3)])
                })
                .collect();
            let pairs = co_occurrent_pairs(&trajs, "human");
            let mut expected = 0usize;
            for (h, a) in trajs.iter().enumerate() {
                if a.category != "human" {
                    continue;
                }
                for (o, b) in trajs.iter().enumerate() {
                    if o != h && a.span.intersect(&b.span).is_some() {
                        expected += 1;
                    }
                }
            }
            assert_eq!(pairs.len(), expected);
        }
    }
}
