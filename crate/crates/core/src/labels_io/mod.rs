//! Reading and writing dataset artifacts: YOLO-style contour labels, COCO
//! instance JSON, PNG rasters and masks, and JSON dataset manifests.
//!
//! Every writer/reader pair round-trips pixel-exact at the mask level. The
//! on-disk layouts are described in `FORMATS.md` at the repository root.

mod coco;
mod dataset;
mod manifest;
mod png;
mod sample;
mod yolo;

pub use coco::{read_coco_json, write_coco_json, Category, CocoData};
pub use dataset::{
    image_sizes, list_images, read_annotations, read_labeled_dir, read_prediction_dir, subdir_or_self, LabeledImage,
    IMAGE_EXTENSIONS,
};
pub use manifest::{read_manifest, write_manifest, DatasetManifest, Role, SampleEntry, FORMAT_VERSION, MANIFEST_FILE};
pub use png::{
    instance_id_map, read_instance_map, read_mask_png, read_raster, read_rgb, write_instance_map,
    write_mask_png, write_raster,
};
pub use sample::{prepare_layout, write_sample, SampleOutputs, IMAGES_DIR, INSTANCES_DIR, LABELS_DIR, MASKS_DIR};
pub use yolo::{
    format_yolo_seg, parse_yolo_seg, read_yolo_seg, write_yolo_seg, YoloSegRecord,
};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// File stem as an image id.
pub(crate) fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
