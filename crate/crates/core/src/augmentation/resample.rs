use crate::mask::BinaryMask;
use crate::raster::Raster;

/// Bilinear sample at `(sx, sy)`; points off the source grid are black.
#[inline]
pub(crate) fn bilinear(src: &Raster, sx: f64, sy: f64, out: &mut [u8]) {
    let (w, h) = (src.width() as f64, src.height() as f64);
    if !(sx >= 0.0 && sy >= 0.0 && sx <= w - 1.0 && sy <= h - 1.0) {
        out.fill(0);
        return;
    }
    let x0 = sx.floor();
    let y0 = sy.floor();
    let (fx, fy) = (sx - x0, sy - y0);
    let (x0, y0) = (x0 as u32, y0 as u32);
    let x1 = (x0 + 1).min(src.width() - 1);
    let y1 = (y0 + 1).min(src.height() - 1);
    if fx == 0.0 && fy == 0.0 {
        out.copy_from_slice(src.pixel(x0, y0));
        return;
    }
    let (a, b, c, d) = (src.pixel(x0, y0), src.pixel(x1, y0), src.pixel(x0, y1), src.pixel(x1, y1));
    for ch in 0..out.len() {
        let top = a[ch] as f64 * (1.0 - fx) + b[ch] as f64 * fx;
        let bot = c[ch] as f64 * (1.0 - fx) + d[ch] as f64 * fx;
        out[ch] = (top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8;
    }
}

/// Nearest-neighbour sample; points off the canvas are background.
#[inline]
pub(crate) fn nearest(mask: &BinaryMask, sx: f64, sy: f64) -> bool {
    let (x, y) = (sx.round(), sy.round());
    x >= 0.0
        && y >= 0.0
        && x < mask.width() as f64
        && y < mask.height() as f64
        && mask.get(x as u32, y as u32)
}

const FRAC_BITS: u32 = 16;
const ONE: i64 = 1 << FRAC_BITS;

/// Affine warp with bilinear sampling in 16.16 fixed point. The source
/// point of destination `(x, y)` is `(m[0] x + m[1] y + m[2], m[3] x + m[4] y
/// + m[5])`; points off the source grid are black.
pub(crate) fn warp_raster_affine(src: &Raster, width: u32, height: u32, m: [f64; 6]) -> Raster {
    let c = src.channels() as usize;
    let mut out = Raster::new(width, height, c as u8).expect("positive dims");
    let stride = src.width() as usize * c;
    let max_x = (src.width() as i64 - 1) * ONE;
    let max_y = (src.height() as i64 - 1) * ONE;
    let data = src.data();
    // positions advance along a row in 32.32 fixed point, one rounding per row
    let wide = (1u64 << 32) as f64;
    let (step_x, step_y) = ((m[0] * wide).round() as i64, (m[3] * wide).round() as i64);
    for (y, row) in out.data_mut().chunks_exact_mut(width as usize * c).enumerate() {
        let yf = y as f64;
        let mut ax = ((m[1] * yf + m[2]) * wide).round() as i64;
        let mut ay = ((m[4] * yf + m[5]) * wide).round() as i64;
        for px in row.chunks_exact_mut(c) {
            let (sx, sy) = (ax >> (32 - FRAC_BITS), ay >> (32 - FRAC_BITS));
            ax += step_x;
            ay += step_y;
            if sx < 0 || sy < 0 || sx > max_x || sy > max_y {
                continue;
            }
            let (fx, fy) = ((sx & (ONE - 1)) as u64, (sy & (ONE - 1)) as u64);
            let p00 = (sy >> FRAC_BITS) as usize * stride + (sx >> FRAC_BITS) as usize * c;
            // a zero fraction never reads past the last row or column
            let p10 = if fx == 0 { p00 } else { p00 + c };
            let dy = if fy == 0 { 0 } else { stride };
            let (gx, gy) = (ONE as u64 - fx, ONE as u64 - fy);
            let (w00, w10, w01, w11) = (gx * gy, fx * gy, gx * fy, fx * fy);
            for (ch, o) in px.iter_mut().enumerate() {
                let v = w00 * data[p00 + ch] as u64
                    + w10 * data[p10 + ch] as u64
                    + w01 * data[p00 + dy + ch] as u64
                    + w11 * data[p10 + dy + ch] as u64;
                *o = ((v + (1 << (2 * FRAC_BITS - 1))) >> (2 * FRAC_BITS)) as u8;
            }
        }
    }
    out
}

/// Nearest-neighbour affine warp (matrix as in [`warp_raster_affine`])
/// limited to the inclusive destination window `[x0, x1] x [y0, y1]`;
/// everything outside stays background.
pub(crate) fn warp_mask_affine(
    src: &BinaryMask,
    width: u32,
    height: u32,
    window: (u32, u32, u32, u32),
    m: [f64; 6],
) -> BinaryMask {
    let mut out = BinaryMask::new(width, height);
    let (x0, y0, x1, y1) = window;
    let (sw, sh) = (src.width() as i64, src.height() as i64);
    let wide = (1u64 << 32) as f64;
    let half = 1i64 << 31;
    let (step_x, step_y) = ((m[0] * wide).round() as i64, (m[3] * wide).round() as i64);
    for y in y0..=y1.min(height - 1) {
        let (xf, yf) = (x0 as f64, y as f64);
        let mut ax = ((m[0] * xf + m[1] * yf + m[2]) * wide).round() as i64 + half;
        let mut ay = ((m[3] * xf + m[4] * yf + m[5]) * wide).round() as i64 + half;
        for x in x0..=x1.min(width - 1) {
            let (sx, sy) = (ax >> 32, ay >> 32);
            ax += step_x;
            ay += step_y;
            if sx >= 0 && sy >= 0 && sx < sw && sy < sh && src.get(sx as u32, sy as u32) {
                out.set(x, y, true);
            }
        }
    }
    out
}

/// Exact cosine/sine for multiples of 90 degrees.
pub(crate) fn trig(degrees: f64) -> (f64, f64) {
    let d = degrees.rem_euclid(360.0);
    if d == 0.0 {
        (1.0, 0.0)
    } else if d == 90.0 {
        (0.0, 1.0)
    } else if d == 180.0 {
        (-1.0, 0.0)
    } else if d == 270.0 {
        (0.0, -1.0)
    } else {
        let r = d.to_radians();
        (r.cos(), r.sin())
    }
}
