use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::SynthesisConfig;
use super::cutout::{partition_by_size, Cutout, CutoutKind};
use crate::augmentation::{object_spatial_augment, pixel_augment};
use crate::error::{Error, Result};
use crate::instance::{InstanceAnnotation, InstanceSet};
use crate::mask::BinaryMask;
use crate::raster::Raster;
use crate::rng::{stream, SampleRng};

const PLACEMENT_TRIES: usize = 64;

/// Cutout pools: fakes, and the size-partitioned reals.
#[derive(Debug, Clone, Default)]
pub struct Pools {
    pub fake: Vec<Cutout>,
    pub large: Vec<Cutout>,
    pub small: Vec<Cutout>,
}

impl Pools {
    pub fn new(fake: Vec<Cutout>, real: Vec<Cutout>) -> Result<Self> {
        if fake.is_empty() {
            return Err(Error::InsufficientPool("fake pool is empty".into()));
        }
        let (large, small) = partition_by_size(real)?;
        Ok(Self { fake, large, small })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RealPool {
    Large,
    Small,
}

/// Where one cutout went and how much of it stayed visible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub source_id: String,
    pub kind: CutoutKind,
    /// Top-left corner of the (possibly transformed) patch on the canvas.
    pub x: i32,
    pub y: i32,
    pub width: u32,
    pub height: u32,
    /// Alpha pixels that landed on the canvas.
    pub pasted: u64,
    /// Pixels still owned by this paste after later pastes.
    pub visible: u64,
    pub instance_id: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    /// Real cutouts pasted before occlusion, N.
    pub overlay_count: u32,
    pub real_pool: RealPool,
    pub crop_origin: (u32, u32),
    pub placements: Vec<Placement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedSample {
    pub image: Raster,
    pub instances: InstanceSet,
    /// Union of all instance masks.
    pub semantic_mask: BinaryMask,
    pub provenance: Provenance,
}

/// A cutout with its top-left canvas position.
#[derive(Debug, Clone)]
pub struct Paste {
    pub cutout: Cutout,
    pub x: i32,
    pub y: i32,
}

/// Result of pasting a list of cutouts in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Composite {
    pub image: Raster,
    pub instances: InstanceSet,
    pub semantic_mask: BinaryMask,
    pub placements: Vec<Placement>,
}

fn on_canvas_count(alpha: &BinaryMask, x: i32, y: i32, width: u32, height: u32) -> u64 {
    let (aw, ah) = alpha.dims();
    let x0 = (-x).max(0) as u32;
    let y0 = (-y).max(0) as u32;
    let x1 = (width as i64 - x as i64).clamp(0, aw as i64) as u32;
    let y1 = (height as i64 - y as i64).clamp(0, ah as i64) as u32;
    if x0 >= x1 || y0 >= y1 {
        return 0;
    }
    if (x0, y0, x1, y1) == (0, 0, aw, ah) {
        return alpha.count();
    }
    alpha
        .crop(x0, y0, x1 - x0, y1 - y0)
        .map(|m| m.count())
        .unwrap_or(0)
}

fn on_edge(alpha: &BinaryMask, x: u32, y: u32) -> bool {
    let (w, h) = alpha.dims();
    x == 0
        || y == 0
        || x + 1 == w
        || y + 1 == h
        || !alpha.get(x - 1, y)
        || !alpha.get(x + 1, y)
        || !alpha.get(x, y - 1)
        || !alpha.get(x, y + 1)
}

/// Pastes cutouts in order with hard alpha; later pastes occlude earlier
/// ones. Pastes for which `annotate(kind)` holds become instances (ids 1..
/// in paste order) unless less than `visibility_threshold` of their pasted
/// area stays visible.
pub fn paste_cutouts(
    background: &Raster,
    pastes: &[Paste],
    annotate: impl Fn(CutoutKind) -> bool,
    visibility_threshold: f64,
    class_id: u32,
    feather: bool,
    image_id: &str,
) -> Result<Composite> {
    background.require_channels(3)?;
    if pastes.len() > u16::MAX as usize {
        return Err(Error::InvalidInput(format!("{} pastes exceed the 16-bit owner map", pastes.len())));
    }
    let (w, h) = background.dims();
    let mut image = background.clone();
    let mut owner = vec![0u16; w as usize * h as usize];
    let mut placements = Vec::with_capacity(pastes.len());
    for (k, p) in pastes.iter().enumerate() {
        let c = &p.cutout;
        c.patch.require_channels(3)?;
        let tag = if annotate(c.kind) { k as u16 + 1 } else { 0 };
        let mut pasted = 0;
        for (ax, ay) in c.alpha.iter_ones() {
            let (cx, cy) = (p.x as i64 + ax as i64, p.y as i64 + ay as i64);
            if cx < 0 || cy < 0 || cx >= w as i64 || cy >= h as i64 {
                continue;
            }
            let (cx, cy) = (cx as u32, cy as u32);
            pasted += 1;
            owner[cy as usize * w as usize + cx as usize] = tag;
            let src = c.patch.pixel(ax, ay);
            let dst = image.pixel_mut(cx, cy);
            if feather && on_edge(&c.alpha, ax, ay) {
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = ((*d as u16 + *s as u16 + 1) / 2) as u8;
                }
            } else {
                dst.copy_from_slice(src);
            }
        }
        placements.push(Placement {
            source_id: c.source_id.clone(),
            kind: c.kind,
            x: p.x,
            y: p.y,
            width: c.alpha.width(),
            height: c.alpha.height(),
            pasted,
            visible: 0,
            instance_id: None,
        });
    }
    for &o in &owner {
        if o > 0 {
            placements[o as usize - 1].visible += 1;
        }
    }
    let mut slot = vec![usize::MAX; pastes.len()];
    let mut masks = Vec::new();
    for (k, pl) in placements.iter_mut().enumerate() {
        if !annotate(pl.kind) || pl.visible == 0 || (pl.visible as f64) < visibility_threshold * pl.pasted as f64 {
            continue;
        }
        slot[k] = masks.len();
        masks.push(BinaryMask::new(w, h));
        pl.instance_id = Some(masks.len() as u32);
    }
    let mut semantic = BinaryMask::new(w, h);
    for (i, &o) in owner.iter().enumerate() {
        if o > 0 && slot[o as usize - 1] != usize::MAX {
            let (x, y) = ((i % w as usize) as u32, (i / w as usize) as u32);
            masks[slot[o as usize - 1]].set(x, y, true);
            semantic.set(x, y, true);
        }
    }
    let mut instances = InstanceSet::new(image_id, w, h);
    for (i, mask) in masks.into_iter().enumerate() {
        instances.instances.push(InstanceAnnotation::new(i as u32 + 1, class_id, mask));
    }
    Ok(Composite {
        image,
        instances,
        semantic_mask: semantic,
        placements,
    })
}

/// Nearest-alpha, bilinear-patch resize by factor `s`.
fn scale_cutout(c: &Cutout, s: f64) -> Cutout {
    let (w, h) = c.alpha.dims();
    let nw = ((w as f64 * s).round() as u32).max(1);
    let nh = ((h as f64 * s).round() as u32).max(1);
    if (nw, nh) == (w, h) {
        return c.clone();
    }
    let (fx, fy) = (w as f64 / nw as f64, h as f64 / nh as f64);
    let src = |x: u32, y: u32| ((x as f64 + 0.5) * fx - 0.5, (y as f64 + 0.5) * fy - 0.5);
    let mut patch = Raster::new(nw, nh, 3).expect("positive dims");
    let mut alpha = BinaryMask::new(nw, nh);
    for y in 0..nh {
        for x in 0..nw {
            let (sx, sy) = src(x, y);
            let (cx, cy) = (sx.clamp(0.0, (w - 1) as f64), sy.clamp(0.0, (h - 1) as f64));
            let (x0, y0) = (cx.floor() as u32, cy.floor() as u32);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (tx, ty) = (cx - x0 as f64, cy - y0 as f64);
            let out = patch.pixel_mut(x, y);
            for ch in 0..3 {
                let g = |px: u32, py: u32| c.patch.get(px, py, ch as u8) as f64;
                let top = g(x0, y0) * (1.0 - tx) + g(x1, y0) * tx;
                let bot = g(x0, y1) * (1.0 - tx) + g(x1, y1) * tx;
                out[ch] = (top * (1.0 - ty) + bot * ty).round() as u8;
            }
            let (nx, ny) = (sx.round().clamp(0.0, (w - 1) as f64), sy.round().clamp(0.0, (h - 1) as f64));
            alpha.set(x, y, c.alpha.get(nx as u32, ny as u32));
        }
    }
    if alpha.is_empty() {
        return c.clone();
    }
    Cutout { patch, alpha, ..c.clone() }
}

fn prepare(c: &Cutout, config: &SynthesisConfig, rng: &mut SampleRng) -> Cutout {
    let mut out = object_spatial_augment(c, &config.augmentation.spatial, rng);
    if config.scale_jitter > 0.0 {
        let j = config.scale_jitter;
        let s = rng.random_range(1.0 - j..=1.0 + j);
        out = scale_cutout(&out, s);
    }
    out
}

/// Uniform top-left position such that at least `min_share` of the alpha
/// lands on the canvas; rejection-sampled, falling back to the centre.
fn place(c: &Cutout, width: u32, height: u32, min_share: f64, rng: &mut SampleRng) -> (i32, i32) {
    let (pw, ph) = c.alpha.dims();
    let total = c.alpha.count() as f64;
    for _ in 0..PLACEMENT_TRIES {
        let x = rng.random_range(-(pw as i64 - 1)..width as i64) as i32;
        let y = rng.random_range(-(ph as i64 - 1)..height as i64) as i32;
        if on_canvas_count(&c.alpha, x, y, width, height) as f64 >= min_share * total {
            return (x, y);
        }
    }
    (
        ((width as i64 - pw as i64) / 2) as i32,
        ((height as i64 - ph as i64) / 2) as i32,
    )
}

/// Composes one sample with a fixed overlay count `n`: `n` fakes, then `n`
/// reals from the pool chosen by `n` against `pool_switch`, all drawn with
/// replacement. A background larger than the output is cropped at a random
/// offset.
pub fn compose_sample(
    background: &Raster,
    pools: &Pools,
    config: &SynthesisConfig,
    sample_seed: u64,
    n: u32,
    image_id: &str,
) -> Result<SynthesizedSample> {
    let (w, h) = (config.width, config.height);
    if background.width() < w || background.height() < h {
        return Err(Error::ShapeMismatch(format!(
            "background {}x{} is smaller than the {w}x{h} output",
            background.width(),
            background.height()
        )));
    }
    let real_pool = if n <= config.pool_switch {
        RealPool::Large
    } else {
        RealPool::Small
    };
    let reals = match real_pool {
        RealPool::Large => &pools.large,
        RealPool::Small => &pools.small,
    };
    if pools.fake.is_empty() || reals.is_empty() {
        return Err(Error::InsufficientPool(format!(
            "need non-empty fake and {real_pool:?} pools (have {} and {})",
            pools.fake.len(),
            reals.len()
        )));
    }
    let mut rng = stream(sample_seed);
    let ox = rng.random_range(0..=background.width() - w);
    let oy = rng.random_range(0..=background.height() - h);
    let canvas = if (ox, oy, background.width(), background.height()) == (0, 0, w, h) {
        background.clone()
    } else {
        background.crop(ox, oy, w, h)?
    };
    let mut pastes = Vec::with_capacity(2 * n as usize);
    for pool in [&pools.fake, reals] {
        for _ in 0..n {
            let c = prepare(&pool[rng.random_range(0..pool.len())], config, &mut rng);
            let (x, y) = place(&c, w, h, config.min_on_canvas, &mut rng);
            pastes.push(Paste { cutout: c, x, y });
        }
    }
    let annotate_fakes = config.annotate_fakes;
    let comp = paste_cutouts(
        &canvas,
        &pastes,
        |k| k == CutoutKind::Real || annotate_fakes,
        config.visibility_threshold,
        config.class_id,
        config.feather,
        image_id,
    )?;
    let image = pixel_augment(&comp.image, &config.augmentation.pixel, &mut rng)?;
    Ok(SynthesizedSample {
        image,
        instances: comp.instances,
        semantic_mask: comp.semantic_mask,
        provenance: Provenance {
            seed: sample_seed,
            overlay_count: n,
            real_pool,
            crop_origin: (ox, oy),
            placements: comp.placements,
        },
    })
}

/// Draws the overlay count from the sample's own stream, then composes.
pub fn synthesize_sample(
    background: &Raster,
    pools: &Pools,
    config: &SynthesisConfig,
    sample_seed: u64,
    image_id: &str,
) -> Result<SynthesizedSample> {
    let n = stream(sample_seed ^ 0x4f56_4552_4c41_5953).random_range(config.overlay_min..=config.overlay_max);
    compose_sample(background, pools, config, sample_seed, n, image_id)
}
