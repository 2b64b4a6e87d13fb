use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::SampleEntry;
use super::png::{write_instance_map, write_mask_png, write_raster};
use super::yolo::write_yolo_seg;
use crate::error::{Error, Result};
use crate::instance::InstanceSet;
use crate::mask::BinaryMask;
use crate::raster::Raster;

pub const IMAGES_DIR: &str = "images";
pub const LABELS_DIR: &str = "labels";
pub const MASKS_DIR: &str = "masks";
pub const INSTANCES_DIR: &str = "instances";

/// Which per-sample files to emit besides the image and contour label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleOutputs {
    pub semantic_masks: bool,
    pub instance_maps: bool,
}

impl Default for SampleOutputs {
    fn default() -> Self {
        Self {
            semantic_masks: true,
            instance_maps: true,
        }
    }
}

/// Creates the output directory tree.
pub fn prepare_layout(out_dir: impl AsRef<Path>, outputs: SampleOutputs) -> Result<()> {
    let out = out_dir.as_ref();
    let mut dirs = vec![IMAGES_DIR, LABELS_DIR];
    if outputs.semantic_masks {
        dirs.push(MASKS_DIR);
    }
    if outputs.instance_maps {
        dirs.push(INSTANCES_DIR);
    }
    for d in dirs {
        let p = out.join(d);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

/// Writes `images/{id}.png`, `labels/{id}.txt` and, if enabled,
/// `masks/{id}.png` (semantic, defaults to the union of instances) and
/// `instances/{id}.png`. Returns the manifest entry.
pub fn write_sample(
    out_dir: impl AsRef<Path>,
    id: &str,
    image: &Raster,
    instances: &InstanceSet,
    semantic: Option<&BinaryMask>,
    outputs: SampleOutputs,
) -> Result<SampleEntry> {
    if image.dims() != (instances.width, instances.height) {
        return Err(Error::ShapeMismatch(format!(
            "sample {id}: image {}x{} vs annotations {}x{}",
            image.width(),
            image.height(),
            instances.width,
            instances.height
        )));
    }
    let out = out_dir.as_ref();
    let mut entry = SampleEntry {
        id: id.to_string(),
        image: format!("{IMAGES_DIR}/{id}.png"),
        label: Some(format!("{LABELS_DIR}/{id}.txt")),
        instances: instances.len(),
        ..Default::default()
    };
    write_raster(image, out.join(&entry.image))?;
    write_yolo_seg(instances, out.join(entry.label.as_ref().unwrap()))?;
    if outputs.semantic_masks {
        let rel = format!("{MASKS_DIR}/{id}.png");
        match semantic {
            Some(m) => write_mask_png(m, out.join(&rel))?,
            None => write_mask_png(&instances.union_mask(), out.join(&rel))?,
        }
        entry.semantic_mask = Some(rel);
    }
    if outputs.instance_maps {
        let rel = format!("{INSTANCES_DIR}/{id}.png");
        write_instance_map(instances, out.join(&rel))?;
        entry.instance_map = Some(rel);
    }
    Ok(entry)
}
