use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::yolo::canonical_rings;
use super::{read_text, write_bytes};
use crate::contour::{contours_to_mask, mask_to_contours, Point, Polygon};
use crate::error::{Error, Result};
use crate::instance::{InstanceAnnotation, InstanceSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: u32,
    pub name: String,
    #[serde(default)]
    pub supercategory: String,
}

/// Images with their instances plus the category table. Class `k` is
/// stored as COCO category `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CocoData {
    pub sets: Vec<InstanceSet>,
    pub categories: Vec<Category>,
}

impl CocoData {
    /// Builds the category table from the class ids in use; class 0 is
    /// `wheat_head`.
    pub fn new(sets: Vec<InstanceSet>) -> Self {
        let mut classes: BTreeSet<u32> = sets
            .iter()
            .flat_map(|s| s.instances.iter().map(|i| i.class_id))
            .collect();
        classes.insert(0);
        let categories = classes
            .into_iter()
            .map(|c| Category {
                id: c + 1,
                name: if c == 0 { "wheat_head".into() } else { format!("class_{c}") },
                supercategory: if c == 0 { "wheat".into() } else { String::new() },
            })
            .collect();
        Self { sets, categories }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CocoFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    info: Option<serde_json::Value>,
    images: Vec<CocoImage>,
    annotations: Vec<CocoAnnotation>,
    categories: Vec<Category>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CocoImage {
    id: u64,
    file_name: String,
    width: u32,
    height: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct CocoAnnotation {
    id: u64,
    image_id: u64,
    category_id: u32,
    /// Polygons in pixel-centre coordinates, `[x1, y1, x2, y2, ...]`.
    segmentation: Vec<Vec<f64>>,
    area: f64,
    bbox: [f64; 4],
    #[serde(default)]
    iscrowd: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    /// Per-image instance id, kept so ids survive a round trip.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance_id: Option<u32>,
}

fn polygon_coords(ring: &[Point]) -> Vec<f64> {
    let padded: Vec<Point> = match ring {
        [a] => vec![*a; 3],
        [a, b] => vec![*a, *b, *a],
        _ => ring.to_vec(),
    };
    padded.iter().flat_map(|p| [p.x as f64, p.y as f64]).collect()
}

fn to_file(data: &CocoData) -> Result<CocoFile> {
    let mut images = Vec::with_capacity(data.sets.len());
    let mut annotations = Vec::new();
    for (i, set) in data.sets.iter().enumerate() {
        let image_id = i as u64 + 1;
        images.push(CocoImage {
            id: image_id,
            file_name: format!("{}.png", set.image_id),
            width: set.width,
            height: set.height,
        });
        for inst in &set.instances {
            if inst.mask.dims() != (set.width, set.height) {
                return Err(Error::ShapeMismatch(format!("instance {} of {}", inst.id, set.image_id)));
            }
            let bb = inst.mask.bbox().ok_or(Error::EmptyMask)?;
            let rings = canonical_rings(mask_to_contours(&inst.mask)?);
            annotations.push(CocoAnnotation {
                id: annotations.len() as u64 + 1,
                image_id,
                category_id: inst.class_id + 1,
                segmentation: rings.iter().map(|r| polygon_coords(r)).collect(),
                area: inst.area() as f64,
                bbox: [bb.x0 as f64, bb.y0 as f64, bb.width() as f64, bb.height() as f64],
                iscrowd: 0,
                score: inst.confidence,
                instance_id: Some(inst.id),
            });
        }
    }
    Ok(CocoFile {
        info: None,
        images,
        annotations,
        categories: data.categories.clone(),
    })
}

fn from_file(file: CocoFile) -> Result<CocoData> {
    let mut index = HashMap::new();
    let mut sets = Vec::with_capacity(file.images.len());
    for (i, img) in file.images.iter().enumerate() {
        if img.width == 0 || img.height == 0 {
            return Err(Error::parse(format!("images[{i}]: zero image size")));
        }
        if index.insert(img.id, i).is_some() {
            return Err(Error::parse(format!("images[{i}].id: duplicate id {}", img.id)));
        }
        let stem = Path::new(&img.file_name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| img.id.to_string());
        sets.push(InstanceSet::new(stem, img.width, img.height));
    }
    for (k, ann) in file.annotations.iter().enumerate() {
        let field = |f: &str, m: String| Error::parse(format!("annotations[{k}].{f}: {m}"));
        let &slot = index
            .get(&ann.image_id)
            .ok_or_else(|| field("image_id", format!("unknown image {}", ann.image_id)))?;
        if ann.category_id == 0 {
            return Err(field("category_id", "categories start at 1".into()));
        }
        if let Some(s) = ann.score.filter(|s| !(0.0..=1.0).contains(s)) {
            return Err(field("score", format!("{s} outside [0,1]")));
        }
        let set = &mut sets[slot];
        let mut rings = Vec::with_capacity(ann.segmentation.len());
        for (r, coords) in ann.segmentation.iter().enumerate() {
            if coords.len() < 6 || coords.len() % 2 == 1 {
                return Err(field(&format!("segmentation[{r}]"), "expected at least 3 x,y pairs".into()));
            }
            if coords.iter().any(|v| !v.is_finite()) {
                return Err(field(&format!("segmentation[{r}]"), "non-finite coordinate".into()));
            }
            rings.push(Polygon::new(
                coords
                    .chunks_exact(2)
                    .map(|c| Point::new(c[0].round() as i32, c[1].round() as i32))
                    .collect(),
            ));
        }
        if rings.is_empty() {
            return Err(field("segmentation", "no polygons".into()));
        }
        let mask = contours_to_mask(&rings, set.width, set.height)
            .map_err(|e| field("segmentation", e.to_string()))?;
        let id = ann
            .instance_id
            .unwrap_or_else(|| set.instances.iter().map(|i| i.id).max().unwrap_or(0) + 1);
        let mut inst = InstanceAnnotation::new(id, ann.category_id - 1, mask);
        inst.confidence = ann.score;
        set.instances.push(inst);
    }
    Ok(CocoData {
        sets,
        categories: file.categories,
    })
}

pub fn write_coco_json(data: &CocoData, path: impl AsRef<Path>) -> Result<()> {
    let file = to_file(data)?;
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::parse(e.to_string()))?;
    text.push('\n');
    write_bytes(path.as_ref(), text.as_bytes())
}

/// Reads COCO instance JSON with polygon segmentations. Schema errors name
/// the offending field.
pub fn read_coco_json(path: impl AsRef<Path>) -> Result<CocoData> {
    let path = path.as_ref();
    parse_coco(&read_text(path)?).map_err(|e| e.with_path(path))
}

pub(crate) fn parse_coco(text: &str) -> Result<CocoData> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: CocoFile = serde_path_to_error::deserialize(de)
        .map_err(|e| Error::parse(format!("{}: {}", e.path(), e.inner())))?;
    from_file(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{mask_iou, BinaryMask};

    fn sets() -> Vec<InstanceSet> {
        let mut a = InstanceSet::new("a", 12, 10);
        a.push_mask(0, BinaryMask::from_fn(12, 10, |x, y| x < 5 && y < 5 && !(x == 2 && y == 2)));
        a.push_mask(0, BinaryMask::from_fn(12, 10, |x, y| x == 9 && y > 3));
        a.push_mask(0, BinaryMask::from_fn(12, 10, |x, y| x == 11 && y == 0));
        let b = InstanceSet::new("b", 3, 3);
        vec![a, b]
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        let data = CocoData::new(sets());
        write_coco_json(&data, &p).unwrap();
        let back = read_coco_json(&p).unwrap();
        assert_eq!(back, data);
        for (x, y) in data.sets[0].instances.iter().zip(&back.sets[0].instances) {
            assert_eq!(mask_iou(&x.mask, &y.mask).unwrap(), 1.0);
        }
    }

    #[test]
    fn single_annotation_fields() {
        let mut s = InstanceSet::new("one", 8, 8);
        s.push_mask(0, BinaryMask::from_fn(8, 8, |x, y| (2..5).contains(&x) && (1..7).contains(&y)));
        let file = to_file(&CocoData::new(vec![s])).unwrap();
        assert_eq!(file.annotations.len(), 1);
        assert_eq!(file.annotations[0].area, 18.0);
        assert_eq!(file.annotations[0].bbox, [2.0, 1.0, 3.0, 6.0]);
        assert_eq!(
            file.categories,
            vec![Category {
                id: 1,
                name: "wheat_head".into(),
                supercategory: "wheat".into()
            }]
        );
    }

    #[test]
    fn schema_errors_name_fields() {
        let good = serde_json::to_value(to_file(&CocoData::new(sets())).unwrap()).unwrap();
        let mut v = good.clone();
        v["annotations"][1]["segmentation"] = serde_json::json!({"counts": [1], "size": [3, 3]});
        let msg = parse_coco(&v.to_string()).unwrap_err().to_string();
        assert!(msg.contains("annotations[1].segmentation"), "{msg}");
        let mut v = good.clone();
        v["annotations"][0]["image_id"] = 99.into();
        let msg = parse_coco(&v.to_string()).unwrap_err().to_string();
        assert!(msg.contains("annotations[0].image_id"), "{msg}");
        let mut v = good;
        v["images"][0].as_object_mut().unwrap().remove("width");
        let msg = parse_coco(&v.to_string()).unwrap_err().to_string();
        assert!(msg.contains("images[0]") && msg.contains("width"), "{msg}");
    }
}
