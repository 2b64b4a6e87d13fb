use super::resample::{trig, warp_mask_affine, warp_raster_affine};
use crate::error::{Error, Result};
use crate::instance::InstanceSet;
use crate::mask::BinaryMask;
use crate::raster::Raster;

/// Instances keeping less than this share of their area are dropped.
const MIN_KEEP_FRACTION: f64 = 0.2;
/// Instances shrunk below this many pixels are dropped.
const MIN_KEEP_PIXELS: u64 = 16;

/// Inverse map for a rotation by `degrees` (clockwise on screen) about the
/// centre of a `width`x`height` canvas, as an affine matrix from
/// destination to source coordinates.
fn inverse_matrix(width: u32, height: u32, degrees: f64) -> [f64; 6] {
    let (c, s) = trig(degrees);
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    [c, s, cx - c * cx - s * cy, -s, c, cy + s * cx - c * cy]
}

/// Rotates an image about its centre on a fixed canvas, bilinear, black fill.
pub fn rotate_raster(image: &Raster, degrees: f64) -> Raster {
    if degrees.rem_euclid(360.0) == 0.0 {
        return image.clone();
    }
    let m = inverse_matrix(image.width(), image.height(), degrees);
    warp_raster_affine(image, image.width(), image.height(), m)
}

fn rotate_mask(mask: &BinaryMask, degrees: f64) -> BinaryMask {
    let Some(bb) = mask.bbox() else {
        return mask.clone();
    };
    let (w, h) = mask.dims();
    let (c, s) = trig(degrees);
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let fwd = |x: f64, y: f64| {
        let (dx, dy) = (x - cx, y - cy);
        (cx + c * dx - s * dy, cy + s * dx + c * dy)
    };
    let corners = [
        fwd(bb.x0 as f64, bb.y0 as f64),
        fwd(bb.x1 as f64, bb.y0 as f64),
        fwd(bb.x0 as f64, bb.y1 as f64),
        fwd(bb.x1 as f64, bb.y1 as f64),
    ];
    let lo_x = corners.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).floor() - 1.0;
    let hi_x = corners.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0;
    let lo_y = corners.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor() - 1.0;
    let hi_y = corners.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0;
    if hi_x < 0.0 || hi_y < 0.0 || lo_x >= w as f64 || lo_y >= h as f64 {
        return BinaryMask::new(w, h);
    }
    let window = (
        lo_x.max(0.0) as u32,
        lo_y.max(0.0) as u32,
        hi_x.min(w as f64 - 1.0) as u32,
        hi_y.min(h as f64 - 1.0) as u32,
    );
    warp_mask_affine(mask, w, h, window, inverse_matrix(w, h, degrees))
}

/// Rotates an image and its instance masks together by an integer number of
/// degrees, clockwise on screen, keeping the canvas size.
///
/// The image is resampled bilinearly and the masks nearest-neighbour. Pixels
/// rotated in from outside the canvas are black. Instances keep their ids;
/// those left with under 20% of their area, or shrunk below 16 pixels, are
/// dropped. `degrees` is taken modulo 360.
pub fn rotate_pair(
    image: &Raster,
    instances: &InstanceSet,
    degrees: i32,
) -> Result<(Raster, InstanceSet)> {
    if image.dims() != (instances.width, instances.height) {
        return Err(Error::ShapeMismatch(format!(
            "image is {}x{}, annotations are {}x{}",
            image.width(),
            image.height(),
            instances.width,
            instances.height
        )));
    }
    let deg = degrees.rem_euclid(360);
    if deg == 0 {
        return Ok((image.clone(), instances.clone()));
    }
    let rotated = rotate_raster(image, deg as f64);
    let mut out = InstanceSet::new(instances.image_id.clone(), instances.width, instances.height);
    for inst in &instances.instances {
        let original = inst.mask.count();
        let mask = rotate_mask(&inst.mask, deg as f64);
        let kept = mask.count();
        let too_small = kept < MIN_KEEP_PIXELS && kept < original;
        if kept == 0 || (kept as f64) < MIN_KEEP_FRACTION * original as f64 || too_small {
            continue;
        }
        let mut r = inst.clone();
        r.mask = mask;
        out.instances.push(r);
    }
    Ok((rotated, out))
}
