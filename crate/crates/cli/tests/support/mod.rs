//! Fixtures for driving the `segsynth` binary: labelled input directories,
//! a process runner and directory snapshots.
#![allow(dead_code)]

#[path = "../../../core/tests/common/mod.rs"]
pub mod oracle;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::Rng;
use segsynth_core::labels_io::{write_raster, write_yolo_seg};
use segsynth_core::{BinaryMask, InstanceAnnotation, InstanceSet};

pub fn segsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segsynth"))
        .args(args)
        .env_remove("SEGSYNTH_CONFIG")
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn segsynth")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Runs and panics with the captured output unless the exit code is 0.
pub fn ok(args: &[&str]) -> Output {
    let o = segsynth(args);
    assert_eq!(code(&o), 0, "segsynth {args:?}\nstdout: {}\nstderr: {}", stdout(&o), stderr(&o));
    o
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

/// `count` images of `w`x`h` under `dir/images` with contour labels under
/// `dir/labels`. Each image holds `per_image` blob objects of
/// `min_dim..=max_dim` pixels; later objects occlude earlier ones.
pub fn write_labeled_dir(
    dir: &Path,
    seed: u64,
    count: usize,
    (w, h): (u32, u32),
    per_image: std::ops::RangeInclusive<usize>,
    (min_dim, max_dim): (u32, u32),
) -> Vec<InstanceSet> {
    let mut rng = oracle::rng(seed);
    (0..count)
        .map(|i| {
            let id = format!("src{i:03}");
            let mut image = oracle::background(seed.wrapping_add(i as u64), w, h);
            let mut set = InstanceSet::new(id.clone(), w, h);
            for k in 0..rng.random_range(per_image.clone()) {
                let dim = rng.random_range(min_dim..=max_dim.min(w).min(h));
                let shape = oracle::blob(&mut rng, dim);
                let (x0, y0) = (rng.random_range(0..=w - dim), rng.random_range(0..=h - dim));
                let color: [u8; 3] = [rng.random_range(150..=255), rng.random_range(120..=230), rng.random_range(0..90)];
                let mask = BinaryMask::from_fn(w, h, |x, y| {
                    x >= x0 && y >= y0 && x < x0 + dim && y < y0 + dim && shape.get(x - x0, y - y0)
                });
                for (x, y) in mask.iter_ones() {
                    let shade = ((x + 2 * y + k as u32) % 24) as u8;
                    image.pixel_mut(x, y).copy_from_slice(&[
                        color[0].saturating_sub(shade),
                        color[1].saturating_sub(shade),
                        color[2].saturating_add(shade),
                    ]);
                }
                for earlier in &mut set.instances {
                    earlier.mask.subtract(&mask).unwrap();
                }
                set.instances.push(InstanceAnnotation::new(0, 0, mask));
            }
            set.instances.retain(|inst| !inst.mask.is_empty());
            for (n, inst) in set.instances.iter_mut().enumerate() {
                inst.id = n as u32 + 1;
            }
            write_raster(&image, dir.join("images").join(format!("{id}.png"))).unwrap();
            write_yolo_seg(&set, dir.join("labels").join(format!("{id}.txt"))).unwrap();
            set
        })
        .collect()
}

/// Fakes, reals and backgrounds for a desk-scale synthesis run.
pub struct SynthInputs {
    pub backgrounds: PathBuf,
    pub fakes: PathBuf,
    pub reals: PathBuf,
}

pub fn synth_inputs(root: &Path, seed: u64) -> SynthInputs {
    let backgrounds = root.join("backgrounds");
    for i in 0..3u64 {
        write_raster(&oracle::background(seed + i, 200, 160), backgrounds.join(format!("bg{i}.png"))).unwrap();
    }
    let fakes = root.join("fakes");
    write_labeled_dir(&fakes, seed ^ 0xf, 4, (160, 160), 3..=5, (8, 30));
    let reals = root.join("reals");
    write_labeled_dir(&reals, seed ^ 0xa, 8, (200, 200), 6..=10, (6, 48));
    SynthInputs {
        backgrounds,
        fakes,
        reals,
    }
}

/// Argument list of a desk-scale synthesis run into `out`.
pub fn synth_args<'a>(inputs: &'a SynthInputs, out: &'a Path, n: &'a str, seed: &'a str) -> Vec<&'a str> {
    vec![
        "synth",
        "--backgrounds",
        p(&inputs.backgrounds),
        "--fakes",
        p(&inputs.fakes),
        "--reals",
        p(&inputs.reals),
        "--out",
        p(out),
        "--n",
        n,
        "--seed",
        seed,
        "--width",
        "160",
        "--height",
        "128",
    ]
}

/// Every file under `dir` keyed by its relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Copy of `set` with small random damage and confidences, plus a few
/// spurious detections; used as stand-in model output.
pub fn noisy_predictions(rng: &mut rand_chacha::ChaCha8Rng, set: &InstanceSet) -> InstanceSet {
    let mut out = InstanceSet::new(set.image_id.clone(), set.width, set.height);
    for inst in &set.instances {
        if rng.random_bool(0.1) {
            continue;
        }
        let mut m = inst.mask.clone();
        let bb = m.bbox().unwrap();
        // chip away a random share of the bounding box
        let cut = rng.random_range(0.0..0.5);
        let cw = (bb.width() as f64 * cut) as u32;
        for y in bb.y0..=bb.y1 {
            for x in bb.x0..bb.x0 + cw {
                m.set(x, y, false);
            }
        }
        if m.count() < 2 {
            m = inst.mask.clone();
        }
        let conf = rng.random_range(1..=20) as f64 / 20.0;
        out.instances
            .push(InstanceAnnotation::new(out.len() as u32 + 1, inst.class_id, m).with_confidence(conf));
    }
    for _ in 0..rng.random_range(0..3) {
        let (x0, y0) = (rng.random_range(0..set.width - 4), rng.random_range(0..set.height - 4));
        let m = BinaryMask::from_fn(set.width, set.height, |x, y| (x0..x0 + 4).contains(&x) && (y0..y0 + 4).contains(&y));
        let conf = rng.random_range(1..=20) as f64 / 20.0;
        out.instances
            .push(InstanceAnnotation::new(out.len() as u32 + 1, 0, m).with_confidence(conf));
    }
    out
}
