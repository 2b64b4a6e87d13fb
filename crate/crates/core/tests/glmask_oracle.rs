mod common;

use rand::Rng;
use segsynth_core::colorspace::{assemble_glmask, lightness_value, GLMaskImage};
use segsynth_core::{BinaryMask, Raster};

/// Reference L* values produced by an independent colour library.
fn grid() -> Vec<([u8; 3], f64)> {
    include_str!("data/lab_l_grid.csv")
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            ([f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap()], f[3].parse().unwrap())
        })
        .collect()
}

#[test]
fn lightness_matches_reference_grid_within_one_level() {
    let g = grid();
    assert_eq!(g.len(), 1000);
    let worst = g
        .iter()
        .map(|([r, gg, b], l)| {
            let want = (l * 2.55).round();
            (lightness_value(*r, *gg, *b) as f64 - want).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1.0, "worst deviation {worst}");
}

#[test]
fn random_pairs_satisfy_the_channel_contract() {
    let mut r = common::rng(77);
    for _ in 0..100 {
        let (w, h) = (r.random_range(1..40), r.random_range(1..40));
        let rgb = Raster::from_fn(w, h, |_, _| [r.random(), r.random(), r.random()]).unwrap();
        let mask = BinaryMask::from_fn(w, h, |_, _| r.random_bool(0.4));
        let out = assemble_glmask(&rgb, &mask).unwrap();
        for y in 0..h {
            for x in 0..w {
                let p = rgb.pixel(x, y);
                let (rr, gg, bb) = (p[0] as f64, p[1] as f64, p[2] as f64);
                let gray = (0.2125 * rr + 0.7154 * gg + 0.0721 * bb + 0.5 + 1e-9).floor();
                assert_eq!(out.raster().get(x, y, GLMaskImage::GRAY) as f64, gray);
                let m = out.raster().get(x, y, GLMaskImage::MASK);
                assert_eq!(m, if mask.get(x, y) { 255 } else { 0 });
            }
        }
    }
}
