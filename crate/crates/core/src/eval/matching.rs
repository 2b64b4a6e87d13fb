use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::instance::{InstanceAnnotation, InstanceSet};
use crate::mask::BBox;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub prediction: u32,
    pub ground_truth: u32,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_predictions: Vec<u32>,
    pub unmatched_ground_truths: Vec<u32>,
    pub iou_threshold: f64,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.pairs.len()
    }
}

/// Processing order: confidence descending, then area descending, then id.
pub(crate) fn prediction_order(a: &InstanceAnnotation, b: &InstanceAnnotation) -> Ordering {
    let ca = a.confidence.unwrap_or(0.0);
    let cb = b.confidence.unwrap_or(0.0);
    cb.total_cmp(&ca)
        .then_with(|| b.area().cmp(&a.area()))
        .then_with(|| a.id.cmp(&b.id))
}

fn overlaps(a: &Option<BBox>, b: &Option<BBox>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a.x0 <= b.x1 && b.x0 <= a.x1 && a.y0 <= b.y1 && b.y0 <= a.y1,
        _ => false,
    }
}

/// Per-image IoU table between predictions (in processing order) and
/// ground truths of the same class; pairs with zero overlap are omitted.
#[derive(Debug, Clone)]
pub(crate) struct ImageScores {
    /// Prediction indices into the set, in processing order.
    pub order: Vec<usize>,
    /// For each entry of `order`: `(gt index, iou)` with iou > 0.
    pub candidates: Vec<Vec<(usize, f64)>>,
}

pub(crate) fn check_predictions(preds: &InstanceSet) -> Result<()> {
    for p in &preds.instances {
        match p.confidence {
            None => {
                return Err(Error::InvalidInput(format!(
                    "prediction {} of {} has no confidence",
                    p.id, preds.image_id
                )))
            }
            Some(c) if !(0.0..=1.0).contains(&c) => {
                return Err(Error::InvalidInput(format!(
                    "prediction {} of {} has confidence {c} outside [0,1]",
                    p.id, preds.image_id
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

pub(crate) fn score_image(preds: &InstanceSet, gts: &InstanceSet) -> Result<ImageScores> {
    if (preds.width, preds.height) != (gts.width, gts.height) {
        return Err(Error::ShapeMismatch(format!(
            "predictions for {} are {}x{}, ground truth is {}x{}",
            gts.image_id, preds.width, preds.height, gts.width, gts.height
        )));
    }
    check_predictions(preds)?;
    let mut order: Vec<usize> = (0..preds.instances.len()).collect();
    order.sort_by(|&a, &b| prediction_order(&preds.instances[a], &preds.instances[b]));
    let gt_boxes: Vec<Option<BBox>> = gts.instances.iter().map(|g| g.mask.bbox()).collect();
    let gt_areas: Vec<u64> = gts.instances.iter().map(|g| g.area()).collect();
    let mut candidates = Vec::with_capacity(order.len());
    for &pi in &order {
        let p = &preds.instances[pi];
        let pb = p.mask.bbox();
        let pa = p.area();
        let mut row = Vec::new();
        for (gi, g) in gts.instances.iter().enumerate() {
            if g.class_id != p.class_id || !overlaps(&pb, &gt_boxes[gi]) {
                continue;
            }
            let inter = p.mask.intersection_count(&g.mask)?;
            if inter > 0 {
                row.push((gi, inter as f64 / (pa + gt_areas[gi] - inter) as f64));
            }
        }
        candidates.push(row);
    }
    Ok(ImageScores { order, candidates })
}

/// Greedy assignment at `threshold`: entry `k` of the result is the ground
/// truth taken by the `k`-th prediction in processing order.
pub(crate) fn greedy(scores: &ImageScores, n_gt: usize, threshold: f64) -> Vec<Option<(usize, f64)>> {
    let mut taken = vec![false; n_gt];
    scores
        .candidates
        .iter()
        .map(|row| {
            let mut best: Option<(usize, f64)> = None;
            for &(gi, iou) in row {
                if taken[gi] || iou < threshold {
                    continue;
                }
                // strict comparison keeps the lowest gt index on ties
                if best.is_none_or(|(_, b)| iou > b) {
                    best = Some((gi, iou));
                }
            }
            if let Some((gi, _)) = best {
                taken[gi] = true;
            }
            best
        })
        .collect()
}

/// Matches predictions to ground truths of the same class. Predictions are
/// visited by descending confidence (ties: larger area, then lower id) and
/// each takes the still-unmatched ground truth with the highest IoU at or
/// above `iou_threshold` (ties: earlier ground truth).
pub fn match_instances(preds: &InstanceSet, gts: &InstanceSet, iou_threshold: f64) -> Result<MatchResult> {
    let scores = score_image(preds, gts)?;
    let assignment = greedy(&scores, gts.instances.len(), iou_threshold);
    let mut pairs = Vec::new();
    let mut unmatched_predictions = Vec::new();
    let mut gt_used = vec![false; gts.instances.len()];
    for (k, a) in assignment.iter().enumerate() {
        let pred = &preds.instances[scores.order[k]];
        match a {
            Some((gi, iou)) => {
                gt_used[*gi] = true;
                pairs.push(MatchedPair {
                    prediction: pred.id,
                    ground_truth: gts.instances[*gi].id,
                    iou: *iou,
                });
            }
            None => unmatched_predictions.push(pred.id),
        }
    }
    let unmatched_ground_truths = gts
        .instances
        .iter()
        .zip(&gt_used)
        .filter(|(_, u)| !**u)
        .map(|(g, _)| g.id)
        .collect();
    Ok(MatchResult {
        pairs,
        unmatched_predictions,
        unmatched_ground_truths,
        iou_threshold,
    })
}

/// Pooled precision and recall. With no predictions P is 0; with no ground
/// truths R is 1.
pub fn precision_recall(results: &[MatchResult]) -> (f64, f64) {
    let tp: usize = results.iter().map(|r| r.pairs.len()).sum();
    let fp: usize = results.iter().map(|r| r.unmatched_predictions.len()).sum();
    let fnn: usize = results.iter().map(|r| r.unmatched_ground_truths.len()).sum();
    ratio_pr(tp as u64, fp as u64, fnn as u64)
}

pub(crate) fn ratio_pr(tp: u64, fp: u64, fnn: u64) -> (f64, f64) {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fnn == 0 { 1.0 } else { tp as f64 / (tp + fnn) as f64 };
    (p, r)
}
