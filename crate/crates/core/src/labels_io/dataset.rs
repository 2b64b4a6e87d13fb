use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::png::read_rgb;
use super::stem_of;
use super::yolo::read_yolo_seg;
use crate::error::{Error, Result};
use crate::instance::InstanceSet;
use crate::raster::Raster;

pub const IMAGE_EXTENSIONS: [&str; 6] = ["png", "jpg", "jpeg", "bmp", "tif", "tiff"];

/// An image with its annotations, as read from a dataset directory.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub id: String,
    pub image: Raster,
    pub instances: InstanceSet,
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    paths.retain(|p| p.is_file());
    paths.sort();
    Ok(paths)
}

fn has_extension(p: &Path, exts: &[&str]) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// Image files of a directory as `(id, path)` sorted by id. Two files
/// sharing an id is a validation error.
pub fn list_images(dir: impl AsRef<Path>) -> Result<Vec<(String, PathBuf)>> {
    let mut out: Vec<(String, PathBuf)> = read_dir_sorted(dir.as_ref())?
        .into_iter()
        .filter(|p| has_extension(p, &IMAGE_EXTENSIONS))
        .map(|p| (stem_of(&p), p))
        .collect();
    out.sort();
    let dups: Vec<String> = out
        .windows(2)
        .filter(|w| w[0].0 == w[1].0)
        .map(|w| format!("image id {} appears more than once", w[0].0))
        .collect();
    if !dups.is_empty() {
        return Err(Error::Validation(dups));
    }
    Ok(out)
}

/// `root/name` when that directory exists, else `root`.
pub fn subdir_or_self(root: &Path, name: &str) -> PathBuf {
    let sub = root.join(name);
    if sub.is_dir() {
        sub
    } else {
        root.to_path_buf()
    }
}

/// Reads `root/images/*` with labels from `root/labels/{id}.txt` (either
/// subdirectory may be omitted, in which case `root` itself is used).
/// Images without a label file are an error when `require_labels` is set,
/// otherwise they get an empty annotation set.
pub fn read_labeled_dir(root: impl AsRef<Path>, require_labels: bool) -> Result<Vec<LabeledImage>> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "directory not found"),
        ));
    }
    let images = list_images(subdir_or_self(root, "images"))?;
    let labels = subdir_or_self(root, "labels");
    if require_labels {
        let missing: Vec<String> = images
            .iter()
            .filter(|(id, _)| !labels.join(format!("{id}.txt")).is_file())
            .map(|(id, _)| format!("no label file for image {id}"))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Validation(missing));
        }
    }
    images
        .par_iter()
        .map(|(id, path)| {
            let image = read_rgb(path)?;
            let label = labels.join(format!("{id}.txt"));
            let instances = if label.is_file() {
                read_yolo_seg(&label, image.width(), image.height())?
            } else {
                InstanceSet::new(id.clone(), image.width(), image.height())
            };
            Ok(LabeledImage {
                id: id.clone(),
                image,
                instances,
            })
        })
        .collect()
}

/// Reads every `*.txt` prediction file of `dir/labels` (or of `dir` when it
/// has no `labels` subdirectory), denormalising against the image sizes in
/// `dims`. A file whose id has no size entry is an error.
pub fn read_prediction_dir(
    dir: impl AsRef<Path>,
    dims: &BTreeMap<String, (u32, u32)>,
) -> Result<BTreeMap<String, InstanceSet>> {
    let files: Vec<PathBuf> = read_dir_sorted(&subdir_or_self(dir.as_ref(), "labels"))?
        .into_iter()
        .filter(|p| has_extension(p, &["txt"]))
        .collect();
    let unknown: Vec<String> = files
        .iter()
        .map(|p| stem_of(p))
        .filter(|id| !dims.contains_key(id))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::InvalidInput(format!(
            "prediction files without a matching image: {}",
            unknown.join(", ")
        )));
    }
    files
        .par_iter()
        .map(|p| {
            let id = stem_of(p);
            let (w, h) = dims[&id];
            Ok((id, read_yolo_seg(p, w, h)?))
        })
        .collect()
}

/// Image sizes from file headers, keyed by id.
pub fn image_sizes(images: &[(String, PathBuf)]) -> Result<BTreeMap<String, (u32, u32)>> {
    images
        .par_iter()
        .map(|(id, path)| {
            let d = image::image_dimensions(path).map_err(|source| Error::Image {
                path: path.clone(),
                source,
            })?;
            Ok((id.clone(), d))
        })
        .collect()
}

/// Annotations of a dataset directory laid out as for
/// [`read_labeled_dir`], without decoding pixel data. Images without a
/// label file get an empty set unless `require_labels` is set.
pub fn read_annotations(root: impl AsRef<Path>, require_labels: bool) -> Result<Vec<InstanceSet>> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "directory not found"),
        ));
    }
    let images = list_images(subdir_or_self(root, "images"))?;
    let labels = subdir_or_self(root, "labels");
    let sizes = image_sizes(&images)?;
    let missing: Vec<String> = images
        .iter()
        .filter(|(id, _)| require_labels && !labels.join(format!("{id}.txt")).is_file())
        .map(|(id, _)| format!("no label file for image {id}"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Validation(missing));
    }
    images
        .par_iter()
        .map(|(id, _)| {
            let (w, h) = sizes[id];
            let label = labels.join(format!("{id}.txt"));
            if label.is_file() {
                read_yolo_seg(&label, w, h)
            } else {
                Ok(InstanceSet::new(id.clone(), w, h))
            }
        })
        .collect()
}
