use serde::{Deserialize, Serialize};

use crate::augmentation::AugmentationSpec;
use crate::error::{Error, Result};
use crate::labels_io::{Role, SampleOutputs};

/// Parameters of a synthesis run. Together with the inputs and
/// `master_seed` they determine the output bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub name: String,
    pub role: Role,
    pub n_samples: usize,
    /// Overlay count N is drawn uniformly from `[overlay_min, overlay_max]`.
    pub overlay_min: u32,
    pub overlay_max: u32,
    /// N at or below this draws real cutouts from the large pool, above it
    /// from the small pool.
    pub pool_switch: u32,
    /// Instances keeping less than this share of their pasted area are dropped.
    pub visibility_threshold: f64,
    pub master_seed: u64,
    pub width: u32,
    pub height: u32,
    /// Least share of a cutout's alpha that must land on the canvas.
    pub min_on_canvas: f64,
    /// Annotate fake cutouts as instances too.
    pub annotate_fakes: bool,
    /// Blend the outermost alpha ring half-and-half with the canvas.
    pub feather: bool,
    /// Uniform scale factor drawn from `[1 - j, 1 + j]`; 0 disables.
    pub scale_jitter: f64,
    pub class_id: u32,
    pub augmentation: AugmentationSpec,
    pub outputs: SampleOutputs,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            role: Role::Train,
            n_samples: 50,
            overlay_min: 10,
            overlay_max: 100,
            pool_switch: 50,
            visibility_threshold: 0.25,
            master_seed: 0,
            width: 1024,
            height: 1024,
            min_on_canvas: 0.5,
            annotate_fakes: false,
            feather: false,
            scale_jitter: 0.0,
            class_id: 0,
            augmentation: AugmentationSpec::none(),
            outputs: SampleOutputs::default(),
        }
    }
}

/// Owner ids are 16-bit, one per paste.
const MAX_PASTES: u32 = u16::MAX as u32;

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.overlay_min <= self.pool_switch && self.pool_switch <= self.overlay_max) {
            return fail(format!(
                "need overlay_min <= pool_switch <= overlay_max, got {} / {} / {}",
                self.overlay_min, self.pool_switch, self.overlay_max
            ));
        }
        if self.overlay_max == 0 || 2 * self.overlay_max > MAX_PASTES {
            return fail(format!("overlay_max {} outside 1..={}", self.overlay_max, MAX_PASTES / 2));
        }
        if !(self.visibility_threshold > 0.0 && self.visibility_threshold <= 1.0) {
            return fail(format!("visibility_threshold {} outside (0,1]", self.visibility_threshold));
        }
        if !(self.min_on_canvas > 0.0 && self.min_on_canvas <= 1.0) {
            return fail(format!("min_on_canvas {} outside (0,1]", self.min_on_canvas));
        }
        if !(0.0..1.0).contains(&self.scale_jitter) {
            return fail(format!("scale_jitter {} outside [0,1)", self.scale_jitter));
        }
        if self.width == 0 || self.height == 0 {
            return fail(format!("output size {}x{}", self.width, self.height));
        }
        if self.name.is_empty() {
            return fail("empty dataset name".into());
        }
        self.augmentation.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = SynthesisConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!((c.overlay_min, c.overlay_max, c.pool_switch), (10, 100, 50));
        assert_eq!(c.visibility_threshold, 0.25);
        assert_eq!((c.width, c.height), (1024, 1024));
    }

    #[test]
    fn ordering_is_enforced() {
        let c = SynthesisConfig {
            overlay_min: 60,
            pool_switch: 50,
            overlay_max: 40,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = SynthesisConfig {
            visibility_threshold: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: SynthesisConfig = serde_json::from_str(r#"{"n_samples": 3, "width": 64}"#).unwrap();
        assert_eq!((c.n_samples, c.width, c.height), (3, 64, 1024));
        assert!(serde_json::from_str::<SynthesisConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
