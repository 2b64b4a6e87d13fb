use std::cmp::Ordering;

/// A prediction after matching, as seen by the dataset-wide sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredDetection {
    pub confidence: f64,
    pub area: u64,
    /// Position of the image in the evaluated dataset; breaks ties.
    pub image_index: usize,
    pub id: u32,
    pub true_positive: bool,
}

/// Sweep order: confidence descending, then area descending, then image
/// position and id ascending.
pub fn sweep_order(a: &ScoredDetection, b: &ScoredDetection) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then_with(|| b.area.cmp(&a.area))
        .then_with(|| a.image_index.cmp(&b.image_index))
        .then_with(|| a.id.cmp(&b.id))
}

/// Number of recall sample points: 0.00, 0.01, ..., 1.00.
pub const RECALL_POINTS: usize = 101;

/// 101-point interpolated average precision of `detections` against
/// `n_ground_truths` objects. The precision at recall level r is the best
/// precision among sweep points whose recall is at least r.
///
/// Returns `None` when there are neither detections nor ground truths (the
/// class is absent and left out of averages) and 0 when only detections exist.
pub fn average_precision(detections: &[ScoredDetection], n_ground_truths: u64) -> Option<f64> {
    if n_ground_truths == 0 {
        return if detections.is_empty() { None } else { Some(0.0) };
    }
    let mut sorted = detections.to_vec();
    sorted.sort_by(sweep_order);
    // precision at each sweep point; recall is tp / n
    let mut tps = Vec::with_capacity(sorted.len());
    let mut prec = Vec::with_capacity(sorted.len());
    let mut tp = 0u64;
    for (i, d) in sorted.iter().enumerate() {
        tp += d.true_positive as u64;
        tps.push(tp);
        prec.push(tp as f64 / (i + 1) as f64);
    }
    // suffix maximum makes the envelope monotone
    for i in (0..prec.len().saturating_sub(1)).rev() {
        prec[i] = prec[i].max(prec[i + 1]);
    }
    let n = n_ground_truths;
    let mut total = 0.0;
    let mut j = 0;
    for k in 0..RECALL_POINTS as u64 {
        // first sweep point with recall >= k/100, compared in integers
        while j < tps.len() && tps[j] * 100 < k * n {
            j += 1;
        }
        if j == tps.len() {
            break;
        }
        total += prec[j];
    }
    Some(total / RECALL_POINTS as f64)
}
