use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::resample::{bilinear, nearest, trig};
use super::SpatialSpec;
use crate::mask::BinaryMask;
use crate::raster::Raster;
use crate::synthesis::Cutout;

const RETRIES: usize = 3;

/// Mirrors patch and alpha together.
pub fn flip_cutout(c: &Cutout, horizontal: bool, vertical: bool) -> Cutout {
    if !horizontal && !vertical {
        return c.clone();
    }
    let (w, h) = c.alpha.dims();
    let src = |x: u32, y: u32| {
        (
            if horizontal { w - 1 - x } else { x },
            if vertical { h - 1 - y } else { y },
        )
    };
    let mut patch = c.patch.clone();
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = src(x, y);
            patch.pixel_mut(x, y).copy_from_slice(c.patch.pixel(sx, sy));
        }
    }
    let alpha = BinaryMask::from_fn(w, h, |x, y| {
        let (sx, sy) = src(x, y);
        c.alpha.get(sx, sy)
    });
    Cutout { patch, alpha, ..c.clone() }
}

/// Rotates a cutout on an enlarged canvas and re-crops it to its alpha.
/// Returns `None` when nothing of the alpha survives.
pub fn rotate_cutout(c: &Cutout, degrees: f64) -> Option<Cutout> {
    let (w, h) = c.alpha.dims();
    let (cs, sn) = trig(degrees);
    let nw = ((w as f64 * cs.abs() + h as f64 * sn.abs()).ceil() as u32).max(1);
    let nh = ((w as f64 * sn.abs() + h as f64 * cs.abs()).ceil() as u32).max(1);
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let (ncx, ncy) = ((nw as f64 - 1.0) / 2.0, (nh as f64 - 1.0) / 2.0);
    let inv = |x: f64, y: f64| {
        let (dx, dy) = (x - ncx, y - ncy);
        (cx + cs * dx + sn * dy, cy - sn * dx + cs * dy)
    };
    let mut patch = Raster::new(nw, nh, c.patch.channels()).ok()?;
    let mut alpha = BinaryMask::new(nw, nh);
    for y in 0..nh {
        for x in 0..nw {
            let (sx, sy) = inv(x as f64, y as f64);
            if nearest(&c.alpha, sx, sy) {
                alpha.set(x, y, true);
            }
            bilinear(&c.patch, sx, sy, patch.pixel_mut(x, y));
        }
    }
    let bb = alpha.bbox()?;
    Some(Cutout {
        patch: patch.crop(bb.x0, bb.y0, bb.width(), bb.height()).ok()?,
        alpha: alpha.crop(bb.x0, bb.y0, bb.width(), bb.height()).ok()?,
        ..c.clone()
    })
}

/// Elastic deformation driven by a coarse random displacement grid
/// (node spacing `grid` px, node offsets ~ N(0, magnitude)), bilinearly
/// interpolated to a dense field and applied to patch and alpha alike.
pub fn elastic_cutout<R: Rng + ?Sized>(c: &Cutout, grid: u32, magnitude: f64, rng: &mut R) -> Cutout {
    let (w, h) = c.alpha.dims();
    let grid = grid.max(2);
    let nx = w.div_ceil(grid) as usize + 1;
    let ny = h.div_ceil(grid) as usize + 1;
    let mut field = vec![(0.0f64, 0.0f64); nx * ny];
    if magnitude > 0.0 {
        let normal = Normal::new(0.0, magnitude).expect("finite magnitude");
        for node in &mut field {
            *node = (normal.sample(rng), normal.sample(rng));
        }
    } else {
        return c.clone();
    }
    let displacement = |x: u32, y: u32| {
        let gx = x as f64 / grid as f64;
        let gy = y as f64 / grid as f64;
        let (i, j) = (gx.floor() as usize, gy.floor() as usize);
        let (fx, fy) = (gx - i as f64, gy - j as f64);
        let (i1, j1) = ((i + 1).min(nx - 1), (j + 1).min(ny - 1));
        let at = |a: usize, b: usize| field[b * nx + a];
        let lerp = |p: (f64, f64), q: (f64, f64), t: f64| (p.0 + (q.0 - p.0) * t, p.1 + (q.1 - p.1) * t);
        let top = lerp(at(i, j), at(i1, j), fx);
        let bot = lerp(at(i, j1), at(i1, j1), fx);
        lerp(top, bot, fy)
    };
    let mut patch = Raster::new(w, h, c.patch.channels()).expect("cutout dims");
    let mut alpha = BinaryMask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = displacement(x, y);
            let (sx, sy) = (x as f64 + dx, y as f64 + dy);
            bilinear(&c.patch, sx, sy, patch.pixel_mut(x, y));
            if nearest(&c.alpha, sx, sy) {
                alpha.set(x, y, true);
            }
        }
    }
    Cutout { patch, alpha, ..c.clone() }
}

fn attempt<R: Rng + ?Sized>(c: &Cutout, spec: &SpatialSpec, rng: &mut R) -> Option<Cutout> {
    let mut out = c.clone();
    if let Some(f) = &spec.flip {
        let h = rng.random_bool(f.p_horizontal);
        let v = rng.random_bool(f.p_vertical);
        out = flip_cutout(&out, h, v);
    }
    if let Some(r) = &spec.rotation {
        if rng.random_bool(r.p) && r.max_degrees > 0.0 {
            let angle = rng.random_range(-r.max_degrees..=r.max_degrees);
            out = rotate_cutout(&out, angle)?;
        }
    }
    if let Some(e) = &spec.elastic {
        if rng.random_bool(e.p) {
            out = elastic_cutout(&out, e.grid, e.magnitude, rng);
        }
    }
    (!out.alpha.is_empty()).then_some(out)
}

/// Applies the enabled flip, rotation and elastic transforms, in that order,
/// to a cutout. Patch and alpha always move together. If the alpha ends up
/// empty the draw is repeated up to three times before giving back the input.
pub fn object_spatial_augment<R: Rng + ?Sized>(cutout: &Cutout, spec: &SpatialSpec, rng: &mut R) -> Cutout {
    if spec.flip.is_none() && spec.rotation.is_none() && spec.elastic.is_none() {
        return cutout.clone();
    }
    for _ in 0..=RETRIES {
        if let Some(c) = attempt(cutout, spec, rng) {
            return c;
        }
    }
    cutout.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augmentation::{ElasticSpec, FlipSpec, RotationSpec};
    use crate::synthesis::CutoutKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn blob() -> Cutout {
        let (w, h) = (9, 6);
        let alpha = BinaryMask::from_fn(w, h, |x, y| x + y >= 2 && x < 8 && !(x == 4 && y == 3));
        let patch = Raster::from_fn(w, h, |x, y| [x as u8 * 20, y as u8 * 30, 99]).unwrap();
        Cutout::new(patch, alpha, CutoutKind::Real, "blob").unwrap()
    }

    #[test]
    fn toggles_off_is_identity() {
        let c = blob();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(object_spatial_augment(&c, &SpatialSpec::default(), &mut rng), c);
    }

    #[test]
    fn horizontal_flip_mirrors_alpha() {
        let c = blob();
        let spec = SpatialSpec {
            flip: Some(FlipSpec {
                p_horizontal: 1.0,
                p_vertical: 0.0,
            }),
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = object_spatial_augment(&c, &spec, &mut rng);
        let w = c.alpha.width();
        for y in 0..c.alpha.height() {
            for x in 0..w {
                assert_eq!(f.alpha.get(x, y), c.alpha.get(w - 1 - x, y));
                assert_eq!(f.patch.pixel(x, y), c.patch.pixel(w - 1 - x, y));
            }
        }
    }

    #[test]
    fn zero_magnitude_elastic_is_identity() {
        let c = blob();
        let spec = SpatialSpec {
            elastic: Some(ElasticSpec {
                p: 1.0,
                grid: 16,
                magnitude: 0.0,
            }),
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(object_spatial_augment(&c, &spec, &mut rng), c);
    }

    #[test]
    fn elastic_moves_alpha_with_patch() {
        let c = blob();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = elastic_cutout(&c, 4, 2.0, &mut rng);
        assert_eq!(e.alpha.dims(), c.alpha.dims());
        assert_ne!(e.alpha, c.alpha);
    }

    #[test]
    fn rotation_recrops_and_keeps_area() {
        let c = blob();
        let r = rotate_cutout(&c, 90.0).unwrap();
        assert_eq!(r.alpha.count(), c.alpha.count());
        assert_eq!(r.alpha.dims(), (6, 8));
        let spec = SpatialSpec {
            rotation: Some(RotationSpec {
                p: 1.0,
                max_degrees: 180.0,
            }),
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let a = object_spatial_augment(&c, &spec, &mut rng);
            assert!(!a.alpha.is_empty());
            assert_eq!(a.alpha.dims(), a.patch.dims());
        }
    }
}
