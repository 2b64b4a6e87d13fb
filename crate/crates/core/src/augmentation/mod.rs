//! Offline augmentations: object-level spatial transforms applied to cutouts
//! before pasting, pixel-level transforms applied to finished images, and
//! the exhaustive per-degree rotation expansion of annotated pairs.

mod expand;
mod pixel;
mod resample;
mod rotation;
mod spatial;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use expand::{expand_rotation_dataset, rotation_sample_id, ExpandOptions, RotationPair};
pub use pixel::{
    add_gaussian_noise, blur, color_jitter, drop_channel, permute_channels, pixel_augment, solarize,
};
pub use rotation::{rotate_pair, rotate_raster};
pub use spatial::{elastic_cutout, flip_cutout, object_spatial_augment, rotate_cutout};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationSpec {
    pub spatial: SpatialSpec,
    pub pixel: PixelSpec,
    /// Extra key mixed into derived RNG streams.
    pub stream: u64,
}

/// Object-level transforms; `None` disables a transform.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialSpec {
    pub flip: Option<FlipSpec>,
    pub rotation: Option<RotationSpec>,
    pub elastic: Option<ElasticSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlipSpec {
    pub p_horizontal: f64,
    pub p_vertical: f64,
}

impl Default for FlipSpec {
    fn default() -> Self {
        Self {
            p_horizontal: 0.5,
            p_vertical: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationSpec {
    pub p: f64,
    /// Angles are drawn uniformly from `[-max_degrees, max_degrees]`.
    pub max_degrees: f64,
}

impl Default for RotationSpec {
    fn default() -> Self {
        Self {
            p: 0.5,
            max_degrees: 180.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElasticSpec {
    pub p: f64,
    /// Spacing of the coarse displacement grid in pixels.
    pub grid: u32,
    /// Standard deviation of node displacements in pixels.
    pub magnitude: f64,
}

impl Default for ElasticSpec {
    fn default() -> Self {
        Self {
            p: 0.5,
            grid: 16,
            magnitude: 8.0,
        }
    }
}

/// Image-level transforms, applied in field order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PixelSpec {
    pub color_jitter: Option<ColorJitterSpec>,
    pub channel_shuffle: Option<ChannelShuffleSpec>,
    pub channel_dropout: Option<ChannelDropoutSpec>,
    pub solarize: Option<SolarizeSpec>,
    pub blur: Option<BlurSpec>,
    pub noise: Option<NoiseSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColorJitterSpec {
    pub p: f64,
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
}

impl Default for ColorJitterSpec {
    fn default() -> Self {
        Self {
            p: 0.5,
            brightness: 0.2,
            contrast: 0.2,
            saturation: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelShuffleSpec {
    pub p: f64,
}

impl Default for ChannelShuffleSpec {
    fn default() -> Self {
        Self { p: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelDropoutSpec {
    pub p: f64,
    pub fill: u8,
}

impl Default for ChannelDropoutSpec {
    fn default() -> Self {
        Self { p: 0.5, fill: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolarizeSpec {
    pub p: f64,
    pub threshold: u8,
}

impl Default for SolarizeSpec {
    fn default() -> Self {
        Self {
            p: 0.5,
            threshold: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlurKind {
    Box,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlurSpec {
    pub p: f64,
    pub kind: BlurKind,
    /// Odd kernel sizes drawn from `[min_size, max_size]`.
    pub min_size: u32,
    pub max_size: u32,
}

impl Default for BlurSpec {
    fn default() -> Self {
        Self {
            p: 0.5,
            kind: BlurKind::Gaussian,
            min_size: 3,
            max_size: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub p: f64,
    pub std_min: f64,
    pub std_max: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            p: 0.5,
            std_min: 5.0,
            std_max: 20.0,
        }
    }
}

fn check_p(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("{name}: probability {p} outside [0,1]")));
    }
    Ok(())
}

fn check_range(name: &str, lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
        return Err(Error::Config(format!("{name}: invalid range [{lo}, {hi}]")));
    }
    Ok(())
}

impl AugmentationSpec {
    /// Every transform disabled.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.spatial;
        if let Some(f) = &s.flip {
            check_p("flip.p_horizontal", f.p_horizontal)?;
            check_p("flip.p_vertical", f.p_vertical)?;
        }
        if let Some(r) = &s.rotation {
            check_p("rotation.p", r.p)?;
            check_range("rotation.max_degrees", 0.0, r.max_degrees)?;
            if r.max_degrees > 180.0 {
                return Err(Error::Config("rotation.max_degrees above 180".into()));
            }
        }
        if let Some(e) = &s.elastic {
            check_p("elastic.p", e.p)?;
            check_range("elastic.magnitude", 0.0, e.magnitude)?;
            if e.grid < 2 {
                return Err(Error::Config("elastic.grid must be at least 2".into()));
            }
        }
        let px = &self.pixel;
        if let Some(j) = &px.color_jitter {
            check_p("color_jitter.p", j.p)?;
            for (n, v) in [
                ("color_jitter.brightness", j.brightness),
                ("color_jitter.contrast", j.contrast),
                ("color_jitter.saturation", j.saturation),
            ] {
                check_range(n, 0.0, v)?;
                if v > 1.0 {
                    return Err(Error::Config(format!("{n}: {v} above 1")));
                }
            }
        }
        if let Some(c) = &px.channel_shuffle {
            check_p("channel_shuffle.p", c.p)?;
        }
        if let Some(c) = &px.channel_dropout {
            check_p("channel_dropout.p", c.p)?;
        }
        if let Some(c) = &px.solarize {
            check_p("solarize.p", c.p)?;
        }
        if let Some(b) = &px.blur {
            check_p("blur.p", b.p)?;
            if b.min_size == 0 || b.min_size > b.max_size || (b.min_size % 2 == 0 && b.min_size == b.max_size) {
                return Err(Error::Config(format!(
                    "blur: invalid kernel size range [{}, {}]",
                    b.min_size, b.max_size
                )));
            }
        }
        if let Some(n) = &px.noise {
            check_p("noise.p", n.p)?;
            check_range("noise.std", n.std_min, n.std_max)?;
        }
        Ok(())
    }

    pub fn any_spatial(&self) -> bool {
        let s = &self.spatial;
        s.flip.is_some() || s.rotation.is_some() || s.elastic.is_some()
    }
}
