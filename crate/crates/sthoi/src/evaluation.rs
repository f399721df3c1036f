//! Detection-style scoring of predicted interaction instances.
//!
//! A prediction matches an unused ground-truth instance when the label pair
//! is equal and both trajectories clear the volumetric-IoU threshold;
//! matching is greedy in score order and one-to-one. On top of that sit
//! class mAP (per HOI category over the whole test set), video mAP (all
//! categories pooled per video), recall@K, and per-video tagging
//! precision@N.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::viou;
use crate::recognition::HoiInstance;

/// Instances grouped per video id.
pub type VideoInstances = BTreeMap<String, Vec<HoiInstance>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    /// Both trajectories must exceed this volumetric IoU against the ground
    /// truth for a prediction to match.
    pub viou_threshold: f64,
    pub k_values: Vec<usize>,
    pub n_values: Vec<usize>,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            viou_threshold: 0.5,
            k_values: vec![50, 100],
            n_values: vec![1, 5, 10],
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.viou_threshold > 0.0 && self.viou_threshold <= 1.0) {
            return Err(Error::invalid(
                "evaluation.viou_threshold",
                "must be in (0, 1]",
            ));
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(Error::invalid("evaluation.k_values", "must be positive"));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::invalid("evaluation.n_values", "must be positive"));
        }
        Ok(())
    }
}

/// Score-descending rank order with deterministic tie-breaking by label and
/// span.
fn rank_cmp(a: &HoiInstance, b: &HoiInstance) -> std::cmp::Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(a.predicate.cmp(&b.predicate))
        .then(a.object_category.cmp(&b.object_category))
        .then(a.span.begin.cmp(&b.span.begin))
        .then(a.span.end.cmp(&b.span.end))
}

/// Match one prediction against the unused ground-truth instances of its
/// video. Qualification requires equal predicate and object category and
/// both trajectory pairs above the vIoU threshold; among qualifying ground
/// truths the one maximizing the smaller of the two vIoUs wins.
pub fn match_instance(
    pred: &HoiInstance,
    gts: &[HoiInstance],
    used: &mut [bool],
    cfg: &MatchConfig,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, gt) in gts.iter().enumerate() {
        if used[i] || gt.predicate != pred.predicate || gt.object_category != pred.object_category {
            continue;
        }
        let vs = viou(&pred.subject, &gt.subject);
        if vs <= cfg.viou_threshold {
            continue;
        }
        let vo = viou(&pred.object, &gt.object);
        if vo <= cfg.viou_threshold {
            continue;
        }
        let quality = vs.min(vo);
        if best.is_none_or(|(_, b)| quality > b) {
            best = Some((i, quality));
        }
    }
    if let Some((i, _)) = best {
        used[i] = true;
        Some(i)
    } else {
        None
    }
}

/// Average precision of a ranked hit/miss sequence: mean of the precision at
/// each hit rank, normalized by the ground-truth count.
pub fn average_precision(flags: &[bool], num_gt: usize) -> f64 {
    if num_gt == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &hit) in flags.iter().enumerate() {
        if hit {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    sum / num_gt as f64
}

fn hoi_label(inst: &HoiInstance) -> (String, String) {
    (inst.predicate.clone(), inst.object_category.clone())
}

/// Greedily match one video's ranked predictions; returns the per-rank hit
/// flags.
fn match_ranked(preds: &[&HoiInstance], gts: &[HoiInstance], cfg: &MatchConfig) -> Vec<bool> {
    let mut used = vec![false; gts.len()];
    preds
        .iter()
        .map(|p| match_instance(p, gts, &mut used, cfg).is_some())
        .collect()
}

/// Per-category AP over the whole test set, averaged over the HOI categories
/// with at least one ground-truth instance.
pub fn class_map(
    preds: &VideoInstances,
    gts: &VideoInstances,
    cfg: &MatchConfig,
) -> (f64, Vec<ClassAp>) {
    let mut categories: BTreeSet<(String, String)> = BTreeSet::new();
    for insts in gts.values() {
        for g in insts {
            categories.insert(hoi_label(g));
        }
    }

    let mut rows = Vec::new();
    let mut total = 0.0;
    for cat in &categories {
        // ranked list of this category's predictions across all videos
        let mut ranked: Vec<(&String, &HoiInstance)> = preds
            .iter()
            .flat_map(|(v, insts)| {
                insts
                    .iter()
                    .filter(|p| hoi_label(p) == *cat)
                    .map(move |p| (v, p))
            })
            .collect();
        ranked.sort_by(|a, b| rank_cmp(a.1, b.1).then(a.0.cmp(b.0)));

        // per-video one-to-one matching of this category's ground truths
        let mut used: BTreeMap<&String, (Vec<HoiInstance>, Vec<bool>)> = BTreeMap::new();
        let mut num_gt = 0usize;
        for (v, insts) in gts {
            let cat_gts: Vec<HoiInstance> = insts
                .iter()
                .filter(|g| hoi_label(g) == *cat)
                .cloned()
                .collect();
            num_gt += cat_gts.len();
            let n = cat_gts.len();
            used.insert(v, (cat_gts, vec![false; n]));
        }
        let flags: Vec<bool> = ranked
            .iter()
            .map(|(v, p)| match used.get_mut(*v) {
                Some((cat_gts, used_flags)) => {
                    match_instance(p, cat_gts, used_flags, cfg).is_some()
                }
                None => false,
            })
            .collect();
        let ap = average_precision(&flags, num_gt);
        total += ap;
        rows.push(ClassAp {
            predicate: cat.0.clone(),
            object: cat.1.clone(),
            ap,
            num_gt,
        });
    }

    let map = if categories.is_empty() {
        0.0
    } else {
        total / categories.len() as f64
    };
    (map, rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassAp {
    pub predicate: String,
    pub object: String,
    pub ap: f64,
    pub num_gt: usize,
}

/// AP per video over all its instances pooled, averaged over videos with at
/// least one ground truth.
pub fn video_map(preds: &VideoInstances, gts: &VideoInstances, cfg: &MatchConfig) -> f64 {
    let mut total = 0.0;
    let mut videos = 0usize;
    for (video, gt) in gts {
        if gt.is_empty() {
            continue;
        }
        videos += 1;
        let mut ranked: Vec<&HoiInstance> = preds
            .get(video)
            .map(|v| v.iter().collect())
            .unwrap_or_default();
        ranked.sort_by(|a, b| rank_cmp(a, b));
        let flags = match_ranked(&ranked, gt, cfg);
        total += average_precision(&flags, gt.len());
    }
    if videos == 0 {
        0.0
    } else {
        total / videos as f64
    }
}

/// Fraction of ground truths matched by the top-K predictions, averaged over
/// videos with at least one ground truth.
pub fn recall_at_k(
    preds: &VideoInstances,
    gts: &VideoInstances,
    cfg: &MatchConfig,
) -> Vec<(usize, f64)> {
    cfg.k_values
        .iter()
        .map(|&k| {
            let mut total = 0.0;
            let mut videos = 0usize;
            for (video, gt) in gts {
                if gt.is_empty() {
                    continue;
                }
                videos += 1;
                let mut ranked: Vec<&HoiInstance> = preds
                    .get(video)
                    .map(|v| v.iter().collect())
                    .unwrap_or_default();
                ranked.sort_by(|a, b| rank_cmp(a, b));
                ranked.truncate(k);
                let matched = match_ranked(&ranked, gt, cfg)
                    .iter()
                    .filter(|&&f| f)
                    .count();
                total += matched as f64 / gt.len() as f64;
            }
            (
                k,
                if videos == 0 {
                    0.0
                } else {
                    total / videos as f64
                },
            )
        })
        .collect()
}

/// Ranked deduplicated HOI labels of one video's predictions: label by best
/// instance score, ranked score-descending with lexicographic tie-breaking.
pub fn ranked_video_labels(instances: &[HoiInstance]) -> Vec<((String, String), f64)> {
    let mut best: BTreeMap<(String, String), f64> = BTreeMap::new();
    for inst in instances {
        let e = best.entry(hoi_label(inst)).or_insert(f64::NEG_INFINITY);
        if inst.score > *e {
            *e = inst.score;
        }
    }
    let mut out: Vec<((String, String), f64)> = best.into_iter().collect();
    out.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    out
}

/// Tagging precision@N: per video, the fraction of the top-N predicted HOI
/// labels present in the ground-truth label set, with the denominator capped
/// by the number of predicted labels available; averaged over videos with at
/// least one ground-truth label. Videos with no predictions contribute zero.
pub fn tagging_precision(
    preds: &VideoInstances,
    gts: &VideoInstances,
    cfg: &MatchConfig,
) -> Vec<(usize, f64)> {
    cfg.n_values
        .iter()
        .map(|&n| {
            let mut total = 0.0;
            let mut videos = 0usize;
            for (video, gt) in gts {
                let gt_labels: BTreeSet<(String, String)> = gt.iter().map(hoi_label).collect();
                if gt_labels.is_empty() {
                    continue;
                }
                videos += 1;
                let ranked = preds
                    .get(video)
                    .map(|v| ranked_video_labels(v))
                    .unwrap_or_default();
                let take = n.min(ranked.len());
                if take == 0 {
                    continue; // zero predictions contribute zero
                }
                let hits = ranked[..take]
                    .iter()
                    .filter(|(label, _)| gt_labels.contains(label))
                    .count();
                total += hits as f64 / take as f64;
            }
            (
                n,
                if videos == 0 {
                    0.0
                } else {
                    total / videos as f64
                },
            )
        })
        .collect()
}

/// All metrics of one evaluation run, renderable as a fixed-order key-value
/// report.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub class_map: f64,
    pub video_map: f64,
    pub recall: Vec<(usize, f64)>,
    pub precision: Vec<(usize, f64)>,
    pub per_class: Vec<ClassAp>,
}

impl MetricsReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "class_map\t{:.6}", self.class_map);
        let _ = writeln!(s, "video_map\t{:.6}", self.video_map);
        for (k, v) in &self.recall {
            let _ = writeln!(s, "recall@{k}\t{v:.6}");
        }
        for (n, v) in &self.precision {
            let _ = writeln!(s, "precision@{n}\t{v:.6}");
        }
        s
    }

    pub fn per_class_csv(&self) -> String {
        let mut s = String::from("predicate,object,ap,num_gt\n");
        for row in &self.per_class {
            let _ = writeln!(
                s,
                "{},{},{:.6},{}",
                row.predicate, row.object, row.ap, row.num_gt
            );
        }
        s
    }
}

/// Run the full protocol.
pub fn evaluate(
    preds: &VideoInstances,
    gts: &VideoInstances,
    cfg: &MatchConfig,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let (cmap, per_class) = class_map(preds, gts, cfg);
    Ok(MetricsReport {
        class_map: cmap,
        video_map: video_map(preds, gts, cfg),
        recall: recall_at_k(preds, gts, cfg),
        precision: tagging_precision(preds, gts, cfg),
        per_class,
    })
}
