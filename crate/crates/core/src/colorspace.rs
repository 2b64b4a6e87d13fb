//! GLMask assembly: grayscale, CIE lightness and a binary mask stacked into
//! one three-channel image.
//!
//! Grayscale uses the luma weights 0.2125 / 0.7154 / 0.0721 on the stored
//! (gamma-encoded) values. Lightness follows sRGB (IEC 61966-2-1) to D65 XYZ
//! to CIE L*, scaled to 0..255 by 2.55. All rounding is half away from zero.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::raster::Raster;

/// Three-channel raster: grayscale, L* (0..255), mask (0 or 255).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GLMaskImage(Raster);

impl GLMaskImage {
    pub const GRAY: u8 = 0;
    pub const LIGHTNESS: u8 = 1;
    pub const MASK: u8 = 2;

    pub fn raster(&self) -> &Raster {
        &self.0
    }

    pub fn into_raster(self) -> Raster {
        self.0
    }
}

/// Grayscale value of one 8-bit RGB pixel.
#[inline]
pub fn gray_value(r: u8, g: u8, b: u8) -> u8 {
    // weights x 10^4 are exact integers, so this is exact half-up rounding
    let s = 2125 * r as u32 + 7154 * g as u32 + 721 * b as u32;
    ((s + 5000) / 10_000).min(255) as u8
}

fn srgb_linear_table() -> &'static [f64; 256] {
    static TABLE: OnceLock<[f64; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; 256];
        for (i, v) in t.iter_mut().enumerate() {
            let c = i as f64 / 255.0;
            *v = if c <= 0.04045 {
                c / 12.92
            } else {
                ((c + 0.055) / 1.055).powf(2.4)
            };
        }
        t
    })
}

/// CIE L* in [0, 100] for an 8-bit sRGB pixel.
pub fn lightness(r: u8, g: u8, b: u8) -> f64 {
    let lin = srgb_linear_table();
    // Y row of the sRGB -> XYZ (D65) matrix; Yn = 1
    let y = 0.2126 * lin[r as usize] + 0.7152 * lin[g as usize] + 0.0722 * lin[b as usize];
    const DELTA: f64 = 6.0 / 29.0;
    let f = if y > DELTA * DELTA * DELTA {
        y.cbrt()
    } else {
        y / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    };
    116.0 * f - 16.0
}

/// L* of one pixel scaled to 0..255.
#[inline]
pub fn lightness_value(r: u8, g: u8, b: u8) -> u8 {
    round_half_away(lightness(r, g, b) * 2.55).clamp(0.0, 255.0) as u8
}

pub(crate) fn round_half_away(v: f64) -> f64 {
    v.round()
}

fn map_rgb(rgb: &Raster, f: impl Fn(u8, u8, u8) -> u8) -> Result<Raster> {
    rgb.require_channels(3)?;
    let data = rgb
        .data()
        .chunks_exact(3)
        .map(|p| f(p[0], p[1], p[2]))
        .collect();
    Raster::from_vec(rgb.width(), rgb.height(), 1, data)
}

pub fn to_grayscale(rgb: &Raster) -> Result<Raster> {
    map_rgb(rgb, gray_value)
}

pub fn to_lab_l(rgb: &Raster) -> Result<Raster> {
    map_rgb(rgb, lightness_value)
}

pub fn assemble_glmask(rgb: &Raster, semantic_mask: &BinaryMask) -> Result<GLMaskImage> {
    rgb.require_channels(3)?;
    if rgb.dims() != semantic_mask.dims() {
        return Err(Error::ShapeMismatch(format!(
            "image is {}x{}, mask is {}x{}",
            rgb.width(),
            rgb.height(),
            semantic_mask.width(),
            semantic_mask.height()
        )));
    }
    let g = to_grayscale(rgb)?;
    let l = to_lab_l(rgb)?;
    let m = Raster::from_vec(rgb.width(), rgb.height(), 1, semantic_mask.to_bytes())?;
    Ok(GLMaskImage(Raster::stack3([&g, &l, &m])?))
}
