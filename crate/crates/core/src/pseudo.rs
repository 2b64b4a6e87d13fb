//! Turning model predictions on unannotated images into training labels.
//!
//! Predictions are kept when their confidence reaches the threshold and
//! their mask covers at least `min_instance_area` pixels. Images with no
//! survivors stay in the dataset as negatives with empty label files.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::instance::InstanceSet;
use crate::labels_io::{
    image_sizes, list_images, read_prediction_dir, subdir_or_self, write_manifest, write_yolo_seg, DatasetManifest, Role,
    SampleEntry, IMAGES_DIR, LABELS_DIR, MANIFEST_FILE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PseudoLabelConfig {
    pub name: String,
    pub role: Role,
    pub confidence_threshold: f64,
    pub min_instance_area: u64,
    /// Copy images into the output instead of referencing them.
    pub copy_images: bool,
}

impl Default for PseudoLabelConfig {
    fn default() -> Self {
        Self {
            name: "pseudo".into(),
            role: Role::Train,
            confidence_threshold: 0.25,
            min_instance_area: 16,
            copy_images: false,
        }
    }
}

impl PseudoLabelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(Error::Config(format!(
                "confidence_threshold {} outside [0,1]",
                self.confidence_threshold
            )));
        }
        if self.name.is_empty() {
            return Err(Error::Config("name must not be empty".into()));
        }
        Ok(())
    }
}

/// Predictions with confidence at least `confidence_threshold` and area at
/// least `min_instance_area`, with ids and confidences unchanged so the
/// result can be filtered again. A threshold above 1 keeps nothing.
pub fn filter_predictions(preds: &InstanceSet, config: &PseudoLabelConfig) -> Result<InstanceSet> {
    let mut out = InstanceSet::new(preds.image_id.clone(), preds.width, preds.height);
    for inst in &preds.instances {
        let c = inst.confidence.ok_or_else(|| {
            Error::InvalidInput(format!("prediction {} of {} has no confidence", inst.id, preds.image_id))
        })?;
        if c >= config.confidence_threshold && inst.area() >= config.min_instance_area {
            out.instances.push(inst.clone());
        }
    }
    Ok(out)
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| Error::io(p, e))
}

/// Builds a labelled dataset in `out_dir` from the prediction files in
/// `pred_dir` (YOLO-seg with confidences, optionally under `labels/`) and the
/// images in `image_dir` (optionally under `images/`).
///
/// Every image becomes a sample; images without a prediction file or without
/// surviving predictions are negatives. Image paths in the manifest are
/// relative to `out_dir`.
pub fn build_pseudo_dataset(
    pred_dir: impl AsRef<Path>,
    image_dir: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
    config: &PseudoLabelConfig,
) -> Result<DatasetManifest> {
    config.validate()?;
    let (pred_dir, image_dir, out) = (pred_dir.as_ref(), image_dir.as_ref(), out_dir.as_ref());
    if !pred_dir.is_dir() {
        return Err(Error::io(
            pred_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "prediction directory not found"),
        ));
    }
    let images = list_images(subdir_or_self(image_dir, IMAGES_DIR))?;
    let dims = image_sizes(&images)?;
    let preds = read_prediction_dir(pred_dir, &dims)?;

    std::fs::create_dir_all(out.join(LABELS_DIR)).map_err(|e| Error::io(out, e))?;
    if config.copy_images {
        std::fs::create_dir_all(out.join(IMAGES_DIR)).map_err(|e| Error::io(out, e))?;
    }
    let out_abs = absolute(out)?;
    let samples = images
        .par_iter()
        .map(|(id, path)| {
            let (w, h) = dims[id];
            let raw = preds.get(id).cloned().unwrap_or_else(|| InstanceSet::new(id.clone(), w, h));
            let kept = filter_predictions(&raw, config)?;
            let label = format!("{LABELS_DIR}/{id}.txt");
            write_yolo_seg(&kept.without_confidences(), out.join(&label))?;
            let image = if config.copy_images {
                let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                let rel = format!("{IMAGES_DIR}/{name}");
                std::fs::copy(path, out.join(&rel)).map_err(|e| Error::io(path, e))?;
                rel
            } else {
                let abs = absolute(path)?;
                let rel = pathdiff::diff_paths(&abs, &out_abs).unwrap_or(abs);
                rel.to_string_lossy().replace('\\', "/")
            };
            let mut entry = SampleEntry {
                id: id.clone(),
                image,
                label: Some(label),
                instances: kept.len(),
                negative: kept.is_empty(),
                ..Default::default()
            };
            entry.extra.insert("predictions".into(), Value::from(raw.len()));
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = DatasetManifest::new(config.name.clone(), config.role, "pseudo");
    manifest.parameters = json!({
        "config": config,
        "predictions": pred_dir.to_string_lossy(),
        "images": image_dir.to_string_lossy(),
    });
    manifest.samples = samples;
    write_manifest(&manifest, out.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceAnnotation;
    use crate::mask::BinaryMask;

    fn preds(confs: &[f64]) -> InstanceSet {
        let mut s = InstanceSet::new("p", 10, 10);
        for (k, &c) in confs.iter().enumerate() {
            let m = BinaryMask::from_fn(10, 10, |x, y| x >= k as u32 && x < k as u32 + 5 && y < 5);
            s.instances.push(InstanceAnnotation::new(k as u32 + 1, 0, m).with_confidence(c));
        }
        s
    }

    fn cfg(t: f64) -> PseudoLabelConfig {
        PseudoLabelConfig {
            confidence_threshold: t,
            ..Default::default()
        }
    }

    #[test]
    fn threshold_examples() {
        let p = preds(&[0.2, 0.3, 0.9]);
        assert_eq!(filter_predictions(&p, &cfg(0.25)).unwrap().len(), 2);
        assert_eq!(filter_predictions(&p, &cfg(0.0)).unwrap().len(), 3);
        assert_eq!(filter_predictions(&p, &cfg(1.01)).unwrap().len(), 0);
        assert!(cfg(1.01).validate().is_err());
    }

    #[test]
    fn area_floor_applies() {
        let p = preds(&[0.9]);
        let c = PseudoLabelConfig {
            min_instance_area: 26,
            ..cfg(0.0)
        };
        assert!(filter_predictions(&p, &c).unwrap().is_empty());
    }

    #[test]
    fn missing_confidence_is_rejected() {
        let mut p = preds(&[0.5]);
        p.instances[0].confidence = None;
        assert!(matches!(filter_predictions(&p, &cfg(0.1)), Err(Error::InvalidInput(_))));
    }
}
