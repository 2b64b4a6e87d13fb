mod common;

use std::collections::BTreeMap;

use common::{brute_match, oracle_ap, oracle_evaluate, random_scene, rng, OracleDet};
use rand::Rng;
use segsynth_core::eval::{
    average_precision, evaluate, iou_thresholds, match_instances, EvalOptions, ScoredDetection,
};
use segsynth_core::{BinaryMask, InstanceAnnotation, InstanceSet};

fn random_8x8(r: &mut rand_chacha::ChaCha8Rng, id: &str, n: u32, conf: bool) -> InstanceSet {
    let mut set = InstanceSet::new(id, 8, 8);
    for k in 0..n {
        let (x0, y0) = (r.random_range(0..6), r.random_range(0..6));
        let (x1, y1) = (r.random_range(x0 + 1..=8), r.random_range(y0 + 1..=8));
        let m = BinaryMask::from_fn(8, 8, |x, y| (x0..x1).contains(&x) && (y0..y1).contains(&y));
        let mut inst = InstanceAnnotation::new(k + 1, 0, m);
        if conf {
            inst.confidence = Some(r.random_range(1..=4) as f64 / 4.0);
        }
        set.instances.push(inst);
    }
    set
}

#[test]
fn matcher_agrees_with_brute_force_on_3x3_scenes() {
    let mut r = rng(41);
    for _ in 0..300 {
        let gts = random_8x8(&mut r, "s", 3, false);
        let preds = random_8x8(&mut r, "s", 3, true);
        for t in [0.1, 0.5, 0.7] {
            let got = match_instances(&preds, &gts, t).unwrap();
            let want = brute_match(&preds, &gts, t);
            let pairs: Vec<(u32, u32)> = want.iter().filter_map(|(p, g)| g.map(|g| (*p, g))).collect();
            let got_pairs: Vec<(u32, u32)> = got.pairs.iter().map(|p| (p.prediction, p.ground_truth)).collect();
            assert_eq!(got_pairs, pairs);
            let unmatched: Vec<u32> = want.iter().filter(|m| m.1.is_none()).map(|m| m.0).collect();
            assert_eq!(got.unmatched_predictions, unmatched);
            assert!(got.pairs.iter().all(|p| p.iou >= t));
            assert_eq!(got.pairs.len() + got.unmatched_ground_truths.len(), gts.len());
        }
    }
}

#[test]
fn ap_agrees_with_exhaustive_sweep() {
    // 4 predictions against 3 objects, every TP/FP pattern and several tie layouts
    for pattern in 0u32..16 {
        for confs in [[0.9, 0.8, 0.7, 0.6], [0.5, 0.5, 0.4, 0.4], [0.3, 0.3, 0.3, 0.3]] {
            let tps: Vec<bool> = (0..4).map(|b| pattern >> b & 1 == 1).collect();
            if tps.iter().filter(|&&t| t).count() > 3 {
                continue;
            }
            let dets: Vec<ScoredDetection> = (0..4)
                .map(|i| ScoredDetection {
                    confidence: confs[i],
                    area: 10 + (i as u64 % 2),
                    image_index: 0,
                    id: i as u32 + 1,
                    true_positive: tps[i],
                })
                .collect();
            let odets: Vec<OracleDet> = dets
                .iter()
                .map(|d| OracleDet {
                    confidence: d.confidence,
                    area: d.area,
                    image: d.image_index,
                    id: d.id,
                    tp: d.true_positive,
                })
                .collect();
            let a = average_precision(&dets, 3).unwrap();
            let b = oracle_ap(&odets, 3).unwrap();
            assert!((a - b).abs() < 1e-12, "pattern {pattern:04b}: {a} vs {b}");
        }
    }
}

#[test]
fn evaluate_agrees_with_oracle_on_ten_image_sets() {
    let mut r = rng(97);
    for round in 0..20 {
        let mut preds = Vec::new();
        let mut gts = Vec::new();
        while gts.len() < 10 {
            let (p, g) = random_scene(&mut r);
            for (mut p, mut g) in p.into_iter().zip(g) {
                let id = format!("r{round}_{}", gts.len());
                p.image_id = id.clone();
                g.image_id = id;
                preds.push(p);
                gts.push(g);
            }
        }
        let opts = EvalOptions {
            conf_threshold: [0.0, 0.25, 0.5][round % 3],
            ..Default::default()
        };
        let rep = evaluate(&preds, &gts, &BTreeMap::new(), &opts).unwrap();
        let want = oracle_evaluate(&preds, &gts, opts.conf_threshold, opts.match_iou);
        assert!((rep.overall.precision - want.precision).abs() < 1e-9);
        assert!((rep.overall.recall - want.recall).abs() < 1e-9);
        for (k, t) in iou_thresholds().iter().enumerate() {
            let got = rep.overall.ap_per_threshold[&format!("{t:.2}")];
            assert!((got - want.ap[k]).abs() < 1e-9, "round {round} t {t}: {got} vs {}", want.ap[k]);
        }
    }
}

#[test]
fn tp_is_non_increasing_in_confidence_and_map_ordering_holds() {
    let mut r = rng(5);
    for _ in 0..40 {
        let (preds, gts) = random_scene(&mut r);
        let mut last = u64::MAX;
        for k in 0..10 {
            let opts = EvalOptions {
                conf_threshold: k as f64 / 10.0,
                ..Default::default()
            };
            let rep = evaluate(&preds, &gts, &BTreeMap::new(), &opts).unwrap();
            let tp = rep.overall.counts["0.70"].tp;
            assert!(tp <= last);
            last = tp;
            assert!(rep.overall.map50_95 <= rep.overall.map50 + 1e-12);
        }
    }
}

#[test]
fn evaluation_is_independent_of_worker_count() {
    let mut r = rng(8);
    let (preds, gts) = (0..12).fold((Vec::new(), Vec::new()), |(mut ps, mut gs), i| {
        let (p, g) = random_scene(&mut r);
        for (mut p, mut g) in p.into_iter().zip(g) {
            p.image_id = format!("{i}_{}", gs.len());
            g.image_id = p.image_id.clone();
            ps.push(p);
            gs.push(g);
        }
        (ps, gs)
    });
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| evaluate(&preds, &gts, &BTreeMap::new(), &EvalOptions::default()).unwrap())
    };
    assert_eq!(run(1).to_json().unwrap(), run(4).to_json().unwrap());
}
