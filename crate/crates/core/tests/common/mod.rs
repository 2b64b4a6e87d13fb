//! Test support: independent evaluation oracles and random input generators.
//! Nothing here calls into the evaluator or the synthesis internals it
//! checks; masks are compared pixel by pixel.
#![allow(dead_code)]

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segsynth_core::synthesis::{Cutout, CutoutKind, Pools};
use segsynth_core::{BinaryMask, InstanceAnnotation, InstanceSet, Raster};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pixel_iou(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let (mut inter, mut union) = (0u64, 0u64);
    for y in 0..a.height() {
        for x in 0..a.width() {
            let (p, q) = (a.get(x, y), b.get(x, y));
            inter += (p && q) as u64;
            union += (p || q) as u64;
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn pixel_area(m: &BinaryMask) -> u64 {
    let mut n = 0;
    for y in 0..m.height() {
        for x in 0..m.width() {
            n += m.get(x, y) as u64;
        }
    }
    n
}

/// `a` may come directly before `b` under the processing rule.
fn may_precede(a: &InstanceAnnotation, b: &InstanceAnnotation) -> bool {
    let (ca, cb) = (a.confidence.unwrap(), b.confidence.unwrap());
    if ca != cb {
        return ca > cb;
    }
    let (aa, ab) = (pixel_area(&a.mask), pixel_area(&b.mask));
    if aa != ab {
        return aa > ab;
    }
    a.id < b.id
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..=p.len() {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}

/// Brute-force matcher: among all visiting orders of the predictions,
/// exactly one respects the confidence/area/id rule; walking it, each
/// prediction takes the free same-class ground truth of highest IoU at or
/// above `threshold` (earliest on ties). Returns `(pred id, gt id)` in
/// visiting order.
pub fn brute_match(preds: &InstanceSet, gts: &InstanceSet, threshold: f64) -> Vec<(u32, Option<u32>)> {
    let p = &preds.instances;
    let valid: Vec<Vec<usize>> = permutations(p.len())
        .into_iter()
        .filter(|o| o.windows(2).all(|w| may_precede(&p[w[0]], &p[w[1]])))
        .collect();
    assert_eq!(valid.len(), 1, "processing order must be unique");
    let mut free = vec![true; gts.instances.len()];
    valid[0]
        .iter()
        .map(|&i| {
            let mut best: Option<(usize, f64)> = None;
            for (g, gt) in gts.instances.iter().enumerate() {
                if !free[g] || gt.class_id != p[i].class_id {
                    continue;
                }
                let iou = pixel_iou(&p[i].mask, &gt.mask);
                if iou > 0.0 && iou >= threshold && best.map_or(true, |(_, b)| iou > b) {
                    best = Some((g, iou));
                }
            }
            if let Some((g, _)) = best {
                free[g] = false;
            }
            (p[i].id, best.map(|(g, _)| gts.instances[g].id))
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct OracleDet {
    pub confidence: f64,
    pub area: u64,
    pub image: usize,
    pub id: u32,
    pub tp: bool,
}

/// Exhaustive sweep: every prefix of the ranked detections is a
/// precision/recall point; the interpolated precision at level r/100 is
/// the best precision over all points whose recall reaches it.
pub fn oracle_ap(dets: &[OracleDet], n_gt: u64) -> Option<f64> {
    if n_gt == 0 {
        return if dets.is_empty() { None } else { Some(0.0) };
    }
    let before = |a: &OracleDet, b: &OracleDet| match b.confidence.partial_cmp(&a.confidence).unwrap() {
        Ordering::Equal => (b.area, a.image, a.id) < (a.area, b.image, b.id),
        o => o == Ordering::Less,
    };
    let mut ranked: Vec<(usize, &OracleDet)> = dets
        .iter()
        .map(|d| (dets.iter().filter(|e| before(e, d)).count(), d))
        .collect();
    ranked.sort_by_key(|(r, _)| *r);
    let mut points = Vec::new();
    let mut tp = 0u64;
    for (k, (_, d)) in ranked.iter().enumerate() {
        tp += d.tp as u64;
        points.push((tp, k as u64 + 1));
    }
    let mut sum = 0.0;
    for r in 0..=100u64 {
        let mut best = 0.0f64;
        for &(tp, k) in &points {
            if tp * 100 >= r * n_gt {
                best = best.max(tp as f64 / k as f64);
            }
        }
        sum += best;
    }
    Some(sum / 101.0)
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub precision: f64,
    pub recall: f64,
    pub ap: [f64; 10],
}

/// Reference evaluation of paired image sets (same order, same ids).
pub fn oracle_evaluate(preds: &[InstanceSet], gts: &[InstanceSet], conf: f64, match_iou: f64) -> OracleReport {
    let kept: Vec<InstanceSet> = preds
        .iter()
        .map(|p| {
            let mut p = p.clone();
            p.instances.retain(|i| i.confidence.unwrap() >= conf);
            p
        })
        .collect();
    let (mut tp, mut n_pred, mut n_gt) = (0u64, 0u64, 0u64);
    for (p, g) in kept.iter().zip(gts) {
        tp += brute_match(p, g, match_iou).iter().filter(|m| m.1.is_some()).count() as u64;
        n_pred += p.instances.len() as u64;
        n_gt += g.instances.len() as u64;
    }
    let precision = if n_pred == 0 { 0.0 } else { tp as f64 / n_pred as f64 };
    let recall = if n_gt == 0 { 1.0 } else { tp as f64 / n_gt as f64 };
    let mut classes: Vec<u32> = kept
        .iter()
        .chain(gts)
        .flat_map(|s| s.instances.iter().map(|i| i.class_id))
        .collect();
    classes.sort_unstable();
    classes.dedup();
    let mut ap = [0.0; 10];
    for (k, slot) in ap.iter_mut().enumerate() {
        let t = (50 + 5 * k) as f64 / 100.0;
        let matches: Vec<Vec<(u32, Option<u32>)>> = kept.iter().zip(gts).map(|(p, g)| brute_match(p, g, t)).collect();
        let mut per_class = Vec::new();
        for &c in &classes {
            let mut dets = Vec::new();
            for (img, (p, m)) in kept.iter().zip(&matches).enumerate() {
                for inst in p.instances.iter().filter(|i| i.class_id == c) {
                    let hit = m.iter().find(|(id, _)| *id == inst.id).unwrap().1.is_some();
                    dets.push(OracleDet {
                        confidence: inst.confidence.unwrap(),
                        area: pixel_area(&inst.mask),
                        image: img,
                        id: inst.id,
                        tp: hit,
                    });
                }
            }
            let n = gts
                .iter()
                .flat_map(|g| &g.instances)
                .filter(|i| i.class_id == c)
                .count() as u64;
            per_class.extend(oracle_ap(&dets, n));
        }
        *slot = if per_class.is_empty() {
            1.0
        } else {
            per_class.iter().sum::<f64>() / per_class.len() as f64
        };
    }
    OracleReport { precision, recall, ap }
}

fn random_mask(rng: &mut ChaCha8Rng, w: u32, h: u32) -> BinaryMask {
    loop {
        let (x0, y0) = (rng.random_range(0..w - 2), rng.random_range(0..h - 2));
        let (x1, y1) = (rng.random_range(x0 + 1..=w), rng.random_range(y0 + 1..=h));
        let density = if rng.random_bool(0.5) { 1.0 } else { 0.75 };
        let m = BinaryMask::from_fn(w, h, |x, y| {
            (x0..x1).contains(&x) && (y0..y1).contains(&y) && rng.random_bool(density)
        });
        if !m.is_empty() {
            return m;
        }
    }
}

fn perturb(rng: &mut ChaCha8Rng, m: &BinaryMask) -> BinaryMask {
    let flips = rng.random_range(0..6);
    let mut out = m.clone();
    for _ in 0..flips {
        let (x, y) = (rng.random_range(0..m.width()), rng.random_range(0..m.height()));
        out.set(x, y, !out.get(x, y));
    }
    if out.is_empty() {
        m.clone()
    } else {
        out
    }
}

/// A random 16x16 scene of 1 to 3 images with up to 5 ground truths and 5
/// predictions each; predictions are often noisy copies of ground truths
/// and confidences sit on a coarse grid so ties occur.
pub fn random_scene(rng: &mut ChaCha8Rng) -> (Vec<InstanceSet>, Vec<InstanceSet>) {
    let n_images = rng.random_range(1..=3);
    let classes = rng.random_range(1..=2);
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    for i in 0..n_images {
        let id = format!("img{i}");
        let mut g = InstanceSet::new(id.clone(), 16, 16);
        for _ in 0..rng.random_range(0..=5) {
            let m = random_mask(rng, 16, 16);
            g.push_mask(rng.random_range(0..classes), m);
        }
        let mut p = InstanceSet::new(id, 16, 16);
        for k in 0..rng.random_range(0..=5u32) {
            let (class, mask) = if !g.instances.is_empty() && rng.random_bool(0.6) {
                let src = &g.instances[rng.random_range(0..g.instances.len())];
                (src.class_id, perturb(rng, &src.mask))
            } else {
                (rng.random_range(0..classes), random_mask(rng, 16, 16))
            };
            let conf = if rng.random_bool(0.8) {
                rng.random_range(1..=10) as f64 / 10.0
            } else {
                rng.random_range(0.0..1.0)
            };
            p.instances.push(InstanceAnnotation::new(k + 1, class, mask).with_confidence(conf));
        }
        preds.push(p);
        gts.push(g);
    }
    (preds, gts)
}

/// Filled ellipse, annulus or crescent inside a `dim`-sized box.
pub fn blob(rng: &mut ChaCha8Rng, dim: u32) -> BinaryMask {
    let c = (dim as f64 - 1.0) / 2.0;
    let r = c.max(1.0);
    let (ax, ay) = (rng.random_range(0.6..1.0) * r, rng.random_range(0.6..1.0) * r);
    let shape = rng.random_range(0..3);
    let inner = rng.random_range(0.35..0.6);
    let shift = rng.random_range(0.3..0.6) * r;
    let m = BinaryMask::from_fn(dim, dim, |x, y| {
        let (dx, dy) = ((x as f64 - c) / ax, (y as f64 - c) / ay);
        let d = dx * dx + dy * dy;
        match shape {
            0 => d <= 1.0,
            1 => d <= 1.0 && d > inner * inner,
            _ => {
                let ex = (x as f64 - c - shift) / ax;
                d <= 1.0 && ex * ex + dy * dy > 0.5
            }
        }
    });
    if m.is_empty() {
        BinaryMask::full(dim, dim)
    } else {
        m
    }
}

pub fn cutout(rng: &mut ChaCha8Rng, dim: u32, kind: CutoutKind, id: String) -> Cutout {
    let base: [u8; 3] = [rng.random(), rng.random(), rng.random()];
    let patch = Raster::from_fn(dim, dim, |x, y| {
        [
            base[0].wrapping_add((x * 3) as u8),
            base[1].wrapping_add((y * 5) as u8),
            base[2],
        ]
    })
    .unwrap();
    Cutout::new(patch, blob(rng, dim), kind, id).unwrap()
}

/// Pools of blob cutouts with sizes spread over `min_dim..=max_dim`.
pub fn toy_pools(seed: u64, n_fake: usize, n_real: usize, min_dim: u32, max_dim: u32) -> Pools {
    let mut rng = rng(seed);
    let fake = (0..n_fake)
        .map(|i| {
            let d = rng.random_range(min_dim..=max_dim);
            cutout(&mut rng, d, CutoutKind::Fake, format!("fake{i}"))
        })
        .collect();
    let real = (0..n_real)
        .map(|i| {
            let d = rng.random_range(min_dim..=max_dim);
            cutout(&mut rng, d, CutoutKind::Real, format!("real{i}"))
        })
        .collect();
    Pools::new(fake, real).unwrap()
}

/// Smooth gradient background with a little texture.
pub fn background(seed: u64, w: u32, h: u32) -> Raster {
    let mut rng = rng(seed);
    let (a, b): (u8, u8) = (rng.random(), rng.random());
    Raster::from_fn(w, h, |x, y| {
        [
            a.wrapping_add((x / 4) as u8),
            b.wrapping_add((y / 4) as u8),
            ((x ^ y) & 0x1f) as u8 + 60,
        ]
    })
    .unwrap()
}
