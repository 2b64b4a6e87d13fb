//! Mask-IoU instance-segmentation scoring.
//!
//! Matching is greedy per image and per class; AP uses a dataset-wide sweep
//! with 101-point interpolation, and mAP averages AP over the classes that
//! occur. The confidence threshold drops predictions before anything else,
//! so it affects P, R and AP alike.

mod ap;
mod matching;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::InstanceSet;

pub use ap::{average_precision, sweep_order, ScoredDetection, RECALL_POINTS};
pub use matching::{match_instances, precision_recall, MatchResult, MatchedPair};

/// The ten AP thresholds 0.50, 0.55, ..., 0.95.
pub fn iou_thresholds() -> [f64; 10] {
    std::array::from_fn(|k| (50 + 5 * k) as f64 / 100.0)
}

fn threshold_key(t: f64) -> String {
    format!("{t:.2}")
}

/// Tag given to images that have no domain in a non-empty domain map.
pub const UNTAGGED_DOMAIN: &str = "untagged";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalOptions {
    /// Predictions below this confidence are discarded.
    pub conf_threshold: f64,
    /// IoU at which P and R are counted.
    pub match_iou: f64,
    /// Score ground-truth images that have no prediction file as empty
    /// predictions instead of failing.
    pub missing_predictions_as_empty: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            conf_threshold: 0.25,
            match_iou: 0.7,
            missing_predictions_as_empty: false,
        }
    }
}

impl EvalOptions {
    /// Defaults: confidence 0.25, match IoU 0.7.
    pub fn wheat() -> Self {
        Self::default()
    }

    /// Confidence 0.25, match IoU 0.6.
    pub fn coco() -> Self {
        Self {
            match_iou: 0.6,
            ..Self::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "wheat" => Ok(Self::wheat()),
            "coco" => Ok(Self::coco()),
            other => Err(Error::Config(format!("unknown preset {other:?} (expected wheat or coco)"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.conf_threshold) {
            return Err(Error::Config(format!("conf_threshold {} outside [0,1]", self.conf_threshold)));
        }
        if !(self.match_iou > 0.0 && self.match_iou <= 1.0) {
            return Err(Error::Config(format!("match_iou {} outside (0,1]", self.match_iou)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub images: usize,
    pub ground_truths: u64,
    pub predictions: u64,
    pub precision: f64,
    pub recall: f64,
    pub map50: f64,
    pub map50_95: f64,
    /// Keyed by threshold with two decimals, e.g. "0.50".
    pub ap_per_threshold: BTreeMap<String, f64>,
    pub counts: BTreeMap<String, Counts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub options: EvalOptions,
    #[serde(flatten)]
    pub overall: MetricSet,
    pub per_domain: BTreeMap<String, MetricSet>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::parse(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Fixed-width summary, one row for the whole set and one per domain.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<20} {:>7} {:>7} {:>7} {:>7} {:>7} {:>9}",
            "scope", "images", "inst", "P", "R", "mAP50", "mAP50-95"
        );
        let mut row = |name: &str, m: &MetricSet| {
            let _ = writeln!(
                out,
                "{:<20} {:>7} {:>7} {:>7.4} {:>7.4} {:>7.4} {:>9.4}",
                name, m.images, m.ground_truths, m.precision, m.recall, m.map50, m.map50_95
            );
        };
        row("all", &self.overall);
        for (name, m) in &self.per_domain {
            row(name, m);
        }
        out
    }
}

/// Copy of `set` with every instance given `confidence`.
pub fn as_predictions(set: &InstanceSet, confidence: f64) -> InstanceSet {
    let mut out = set.clone();
    for inst in &mut out.instances {
        inst.confidence = Some(confidence);
    }
    out
}

/// Matching outcome of one image at every threshold.
struct ImageEval {
    gt_classes: Vec<u32>,
    /// `(class, confidence, area, id)` in processing order.
    preds: Vec<(u32, f64, u64, u32)>,
    /// `tp[t][k]`: prediction `k` is a true positive at threshold `t`.
    tp: Vec<Vec<bool>>,
}

fn evaluate_image(preds: &InstanceSet, gts: &InstanceSet, thresholds: &[f64]) -> Result<ImageEval> {
    let scores = matching::score_image(preds, gts)?;
    let tp = thresholds
        .iter()
        .map(|&t| {
            matching::greedy(&scores, gts.instances.len(), t)
                .iter()
                .map(Option::is_some)
                .collect()
        })
        .collect();
    let preds = scores
        .order
        .iter()
        .map(|&i| {
            let p = &preds.instances[i];
            (p.class_id, p.confidence.unwrap_or(0.0), p.area(), p.id)
        })
        .collect();
    Ok(ImageEval {
        gt_classes: gts.instances.iter().map(|g| g.class_id).collect(),
        preds,
        tp,
    })
}

/// Scores `predictions` against `ground_truths`, pairing sets by image id.
///
/// `domains` maps image ids to domain tags; when non-empty, a metric set is
/// also produced per tag (untagged images fall under [`UNTAGGED_DOMAIN`]).
pub fn evaluate(
    predictions: &[InstanceSet],
    ground_truths: &[InstanceSet],
    domains: &BTreeMap<String, String>,
    options: &EvalOptions,
) -> Result<EvalReport> {
    options.validate()?;
    let mut gt_ids = BTreeSet::new();
    for g in ground_truths {
        if !gt_ids.insert(g.image_id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate ground-truth image id {}", g.image_id)));
        }
    }
    let mut by_id: BTreeMap<&str, &InstanceSet> = BTreeMap::new();
    for p in predictions {
        matching::check_predictions(p)?;
        if by_id.insert(p.image_id.as_str(), p).is_some() {
            return Err(Error::InvalidInput(format!("duplicate prediction image id {}", p.image_id)));
        }
    }
    let extra: Vec<&str> = by_id.keys().copied().filter(|id| !gt_ids.contains(id)).collect();
    if !extra.is_empty() {
        return Err(Error::InvalidInput(format!(
            "predictions without ground truth: {}",
            extra.join(", ")
        )));
    }
    let missing: Vec<&str> = gt_ids.iter().copied().filter(|id| !by_id.contains_key(id)).collect();
    if !missing.is_empty() && !options.missing_predictions_as_empty {
        return Err(Error::InvalidInput(format!(
            "ground truth without predictions: {}",
            missing.join(", ")
        )));
    }
    let unknown: Vec<&str> = domains
        .keys()
        .map(String::as_str)
        .filter(|id| !gt_ids.contains(id))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::InvalidInput(format!("domain tags for unknown images: {}", unknown.join(", "))));
    }

    let mut thresholds: Vec<f64> = iou_thresholds().to_vec();
    let match_index = match thresholds.iter().position(|&t| t == options.match_iou) {
        Some(i) => i,
        None => {
            thresholds.push(options.match_iou);
            thresholds.len() - 1
        }
    };
    let images: Vec<ImageEval> = ground_truths
        .par_iter()
        .map(|gts| {
            let mut preds = match by_id.get(gts.image_id.as_str()) {
                Some(p) => (*p).clone(),
                None => InstanceSet::new(gts.image_id.clone(), gts.width, gts.height),
            };
            preds
                .instances
                .retain(|p| p.confidence.unwrap_or(0.0) >= options.conf_threshold);
            evaluate_image(&preds, gts, &thresholds)
        })
        .collect::<Result<_>>()?;

    let all: Vec<usize> = (0..images.len()).collect();
    let overall = metric_set(&images, &all, &thresholds, match_index);
    let mut per_domain = BTreeMap::new();
    if !domains.is_empty() {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, g) in ground_truths.iter().enumerate() {
            let tag = domains.get(&g.image_id).map_or(UNTAGGED_DOMAIN, String::as_str);
            groups.entry(tag).or_default().push(i);
        }
        for (tag, idx) in groups {
            per_domain.insert(tag.to_string(), metric_set(&images, &idx, &thresholds, match_index));
        }
    }
    Ok(EvalReport {
        options: *options,
        overall,
        per_domain,
    })
}

/// Arithmetic mean kept within `[min, max]` of the inputs, where the exact
/// mean lies; plain summation can overshoot by an ulp.
fn mean(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    (values.iter().sum::<f64>() / values.len() as f64).clamp(lo, hi)
}

fn metric_set(images: &[ImageEval], subset: &[usize], thresholds: &[f64], match_index: usize) -> MetricSet {
    let n_gt: u64 = subset.iter().map(|&i| images[i].gt_classes.len() as u64).sum();
    let n_pred: u64 = subset.iter().map(|&i| images[i].preds.len() as u64).sum();
    let classes: BTreeSet<u32> = subset
        .iter()
        .flat_map(|&i| {
            let im = &images[i];
            im.gt_classes.iter().copied().chain(im.preds.iter().map(|p| p.0))
        })
        .collect();
    let mut gt_per_class: BTreeMap<u32, u64> = BTreeMap::new();
    for &i in subset {
        for &c in &images[i].gt_classes {
            *gt_per_class.entry(c).or_default() += 1;
        }
    }

    let mut counts = BTreeMap::new();
    let mut ap = BTreeMap::new();
    let mut match_counts = Counts::default();
    for (t, &thr) in thresholds.iter().enumerate() {
        let tp: u64 = subset
            .iter()
            .map(|&i| images[i].tp[t].iter().filter(|&&b| b).count() as u64)
            .sum();
        let c = Counts {
            tp,
            fp: n_pred - tp,
            fn_: n_gt - tp,
        };
        if t == match_index {
            match_counts = c;
        }
        if t >= 10 {
            continue;
        }
        counts.insert(threshold_key(thr), c);
        let mut class_aps = Vec::new();
        for &class in &classes {
            let dets: Vec<ScoredDetection> = subset
                .iter()
                .flat_map(|&i| {
                    let im = &images[i];
                    im.preds
                        .iter()
                        .zip(&im.tp[t])
                        .filter(|(p, _)| p.0 == class)
                        .map(move |(p, &tp)| ScoredDetection {
                            confidence: p.1,
                            area: p.2,
                            image_index: i,
                            id: p.3,
                            true_positive: tp,
                        })
                })
                .collect();
            let n = gt_per_class.get(&class).copied().unwrap_or(0);
            class_aps.extend(average_precision(&dets, n));
        }
        // with no class present there is nothing to miss
        let value = if class_aps.is_empty() {
            1.0
        } else {
            mean(&class_aps)
        };
        ap.insert(threshold_key(thr), value);
    }
    let (precision, recall) = matching::ratio_pr(match_counts.tp, match_counts.fp, match_counts.fn_);
    let map50 = ap[&threshold_key(0.5)];
    let map50_95 = mean(&ap.values().copied().collect::<Vec<_>>());
    MetricSet {
        images: subset.len(),
        ground_truths: n_gt,
        predictions: n_pred,
        precision,
        recall,
        map50,
        map50_95,
        ap_per_threshold: ap,
        counts,
    }
}
