use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{BlurKind, PixelSpec};
use crate::error::Result;
use crate::raster::Raster;

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Scales brightness, contrast (around the mean gray level) and saturation
/// (around each pixel's gray level) by the given factors.
pub fn color_jitter(img: &Raster, brightness: f64, contrast: f64, saturation: f64) -> Result<Raster> {
    img.require_channels(3)?;
    let n = (img.width() * img.height()) as f64;
    let gray = |p: [f64; 3]| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    let bright: Vec<[f64; 3]> = img
        .data()
        .chunks_exact(3)
        .map(|p| [0, 1, 2].map(|c| (p[c] as f64 * brightness).clamp(0.0, 255.0)))
        .collect();
    let mean = bright.iter().map(|&p| gray(p)).sum::<f64>() / n;
    let mut out = Vec::with_capacity(img.data().len());
    for p in bright {
        let p = p.map(|v| ((v - mean) * contrast + mean).clamp(0.0, 255.0));
        let g = gray(p);
        out.extend(p.map(|v| to_u8(g + (v - g) * saturation)));
    }
    Raster::from_vec(img.width(), img.height(), 3, out)
}

/// Output channel `c` takes input channel `perm[c]`.
pub fn permute_channels(img: &Raster, perm: [usize; 3]) -> Result<Raster> {
    img.require_channels(3)?;
    let data = img
        .data()
        .chunks_exact(3)
        .flat_map(|p| [p[perm[0]], p[perm[1]], p[perm[2]]])
        .collect();
    Raster::from_vec(img.width(), img.height(), 3, data)
}

pub fn drop_channel(img: &Raster, channel: usize, fill: u8) -> Result<Raster> {
    img.require_channels(3)?;
    let mut out = img.clone();
    for p in out.data_mut().chunks_exact_mut(3) {
        p[channel] = fill;
    }
    Ok(out)
}

/// Inverts every sample at or above `threshold`.
pub fn solarize(img: &Raster, threshold: u8) -> Raster {
    let mut out = img.clone();
    for v in out.data_mut() {
        if *v >= threshold {
            *v = 255 - *v;
        }
    }
    out
}

fn kernel(kind: BlurKind, size: u32) -> Vec<f32> {
    let size = size.max(1) | 1;
    let weights: Vec<f64> = match kind {
        BlurKind::Box => vec![1.0; size as usize],
        BlurKind::Gaussian => {
            let sigma = 0.3 * ((size as f64 - 1.0) * 0.5 - 1.0) + 0.8;
            let r = (size / 2) as f64;
            (0..size)
                .map(|i| {
                    let d = i as f64 - r;
                    (-(d * d) / (2.0 * sigma * sigma)).exp()
                })
                .collect()
        }
    };
    let sum: f64 = weights.iter().sum();
    weights.iter().map(|w| (w / sum) as f32).collect()
}

/// Separable normalised blur with an odd kernel; borders replicate edge pixels.
pub fn blur(img: &Raster, kind: BlurKind, size: u32) -> Raster {
    let k = kernel(kind, size);
    let r = (k.len() / 2) as i64;
    let (w, h, c) = (img.width() as i64, img.height() as i64, img.channels() as usize);
    let src = img.data();
    let mut tmp = vec![0f32; src.len()];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0f32;
                for (i, wt) in k.iter().enumerate() {
                    let sx = (x + i as i64 - r).clamp(0, w - 1);
                    acc += wt * src[((y * w + sx) as usize) * c + ch] as f32;
                }
                tmp[((y * w + x) as usize) * c + ch] = acc;
            }
        }
    }
    let mut out = img.clone();
    let dst = out.data_mut();
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0f32;
                for (i, wt) in k.iter().enumerate() {
                    let sy = (y + i as i64 - r).clamp(0, h - 1);
                    acc += wt * tmp[((sy * w + x) as usize) * c + ch];
                }
                dst[((y * w + x) as usize) * c + ch] = acc.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    out
}

pub fn add_gaussian_noise<R: Rng + ?Sized>(img: &Raster, std: f64, rng: &mut R) -> Raster {
    let mut out = img.clone();
    if std <= 0.0 {
        return out;
    }
    let normal = Normal::new(0.0, std).expect("finite std");
    for v in out.data_mut() {
        *v = to_u8(*v as f64 + normal.sample(rng));
    }
    out
}

/// Runs the enabled pixel transforms in fixed order: jitter, shuffle,
/// dropout, solarize, blur, noise. Each fires with its own probability.
pub fn pixel_augment<R: Rng + ?Sized>(image: &Raster, spec: &PixelSpec, rng: &mut R) -> Result<Raster> {
    image.require_channels(3)?;
    let mut img = image.clone();
    if let Some(j) = &spec.color_jitter {
        if rng.random_bool(j.p) {
            let mut factor = |a: f64| if a > 0.0 { rng.random_range(1.0 - a..=1.0 + a) } else { 1.0 };
            let (b, c, s) = (factor(j.brightness), factor(j.contrast), factor(j.saturation));
            img = color_jitter(&img, b, c, s)?;
        }
    }
    if let Some(s) = &spec.channel_shuffle {
        if rng.random_bool(s.p) {
            let mut perm = [0, 1, 2];
            perm.shuffle(rng);
            img = permute_channels(&img, perm)?;
        }
    }
    if let Some(d) = &spec.channel_dropout {
        if rng.random_bool(d.p) {
            let ch = rng.random_range(0..3);
            img = drop_channel(&img, ch, d.fill)?;
        }
    }
    if let Some(s) = &spec.solarize {
        if rng.random_bool(s.p) {
            img = solarize(&img, s.threshold);
        }
    }
    if let Some(b) = &spec.blur {
        if rng.random_bool(b.p) {
            let lo = b.min_size | 1;
            let hi = if b.max_size % 2 == 1 { b.max_size } else { b.max_size - 1 }.max(lo);
            let size = lo + 2 * rng.random_range(0..=(hi - lo) / 2);
            img = blur(&img, b.kind, size);
        }
    }
    if let Some(n) = &spec.noise {
        if rng.random_bool(n.p) {
            let std = if n.std_max > n.std_min {
                rng.random_range(n.std_min..=n.std_max)
            } else {
                n.std_min
            };
            img = add_gaussian_noise(&img, std, rng);
        }
    }
    Ok(img)
}
