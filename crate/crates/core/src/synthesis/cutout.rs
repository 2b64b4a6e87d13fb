use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::InstanceSet;
use crate::mask::BinaryMask;
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoutKind {
    /// Distractor object, pasted first and unannotated by default.
    Fake,
    Real,
}

/// An object lifted out of a source image: RGB patch plus binary alpha of
/// the same size.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutout {
    pub patch: Raster,
    pub alpha: BinaryMask,
    pub kind: CutoutKind,
    pub source_id: String,
}

impl Cutout {
    pub fn new(patch: Raster, alpha: BinaryMask, kind: CutoutKind, source_id: impl Into<String>) -> Result<Self> {
        patch.require_channels(3)?;
        if patch.dims() != alpha.dims() {
            return Err(Error::ShapeMismatch(format!(
                "cutout patch {}x{} vs alpha {}x{}",
                patch.width(),
                patch.height(),
                alpha.width(),
                alpha.height()
            )));
        }
        if alpha.is_empty() {
            return Err(Error::EmptyMask);
        }
        Ok(Self {
            patch,
            alpha,
            kind,
            source_id: source_id.into(),
        })
    }

    /// Larger side of the patch in pixels.
    pub fn max_dim(&self) -> u32 {
        self.patch.width().max(self.patch.height())
    }
}

/// One cutout per annotation: the mask's tight bounding box cropped from
/// the image, with the mask cropped to the same box as alpha. Source ids
/// are `{image_id}#{instance_id}`.
pub fn extract_cutouts(image: &Raster, annotations: &InstanceSet, kind: CutoutKind) -> Result<Vec<Cutout>> {
    image.require_channels(3)?;
    if image.dims() != (annotations.width, annotations.height) {
        return Err(Error::ShapeMismatch(format!(
            "image {}x{} vs annotations {}x{} for {}",
            image.width(),
            image.height(),
            annotations.width,
            annotations.height,
            annotations.image_id
        )));
    }
    annotations
        .instances
        .iter()
        .map(|inst| {
            if inst.mask.dims() != image.dims() {
                return Err(Error::ShapeMismatch(format!(
                    "instance {} of {}",
                    inst.id, annotations.image_id
                )));
            }
            let bb = inst.mask.bbox().ok_or(Error::EmptyMask)?;
            let (w, h) = (bb.width(), bb.height());
            Cutout::new(
                image.crop(bb.x0, bb.y0, w, h)?,
                inst.mask.crop(bb.x0, bb.y0, w, h)?,
                kind,
                format!("{}#{}", annotations.image_id, inst.id),
            )
        })
        .collect()
}

/// Splits cutouts by their larger side: sorted descending (stable, so ties
/// keep input order), the first `ceil(n/2)` form the large pool.
pub fn partition_by_size(cutouts: Vec<Cutout>) -> Result<(Vec<Cutout>, Vec<Cutout>)> {
    if cutouts.len() < 2 {
        return Err(Error::InsufficientPool(format!(
            "size partition needs at least 2 cutouts, got {}",
            cutouts.len()
        )));
    }
    let mut sorted = cutouts;
    sorted.sort_by_key(|c| std::cmp::Reverse(c.max_dim()));
    let small = sorted.split_off(sorted.len().div_ceil(2));
    Ok((sorted, small))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sized(dim: u32, tag: &str) -> Cutout {
        Cutout::new(
            Raster::new(dim, 1, 3).unwrap(),
            BinaryMask::full(dim, 1),
            CutoutKind::Real,
            tag,
        )
        .unwrap()
    }

    fn dims(v: &[Cutout]) -> Vec<u32> {
        v.iter().map(Cutout::max_dim).collect()
    }

    #[test]
    fn partition_examples() {
        let (l, s) = partition_by_size([10, 20, 30, 40].map(|d| sized(d, "")).to_vec()).unwrap();
        assert_eq!((dims(&l), dims(&s)), (vec![40, 30], vec![20, 10]));
        let (l, s) = partition_by_size([10, 20, 30].map(|d| sized(d, "")).to_vec()).unwrap();
        assert_eq!((dims(&l), dims(&s)), (vec![30, 20], vec![10]));
        let eq: Vec<Cutout> = ["a", "b", "c", "d", "e"].iter().map(|t| sized(5, t)).collect();
        let (l, s) = partition_by_size(eq).unwrap();
        let ids = |v: &[Cutout]| v.iter().map(|c| c.source_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&l), ["a", "b", "c"]);
        assert_eq!(ids(&s), ["d", "e"]);
        assert!(matches!(partition_by_size(vec![sized(3, "")]), Err(Error::InsufficientPool(_))));
    }

    #[test]
    fn extraction_crops_tight_boxes() {
        let img = Raster::from_fn(10, 8, |x, y| [x as u8, y as u8, 7]).unwrap();
        let mut set = InstanceSet::new("src", 10, 8);
        set.push_mask(0, BinaryMask::from_fn(10, 8, |x, y| (2..5).contains(&x) && (3..5).contains(&y)));
        set.push_mask(0, BinaryMask::from_fn(10, 8, |x, y| x == 9 && y == 7));
        set.push_mask(0, BinaryMask::full(10, 8));
        let cuts = extract_cutouts(&img, &set, CutoutKind::Real).unwrap();
        assert_eq!(cuts.len(), 3);
        assert_eq!(cuts[0].patch.dims(), (3, 2));
        assert_eq!(cuts[0].patch.pixel(0, 0), &[2, 3, 7]);
        assert_eq!(cuts[1].source_id, "src#2");
        assert_eq!(cuts[2].patch.dims(), img.dims());
        set.instances[0].mask = BinaryMask::new(10, 8);
        assert!(matches!(extract_cutouts(&img, &set, CutoutKind::Fake), Err(Error::EmptyMask)));
    }
}
