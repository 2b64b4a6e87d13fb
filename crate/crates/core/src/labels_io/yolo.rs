//! One text line per instance: `class x1 y1 x2 y2 ... [confidence]`, with
//! vertices normalised by the image size and written to 6 decimals.
//!
//! An instance made of several rings (separate components, holes) is written
//! as the rings one after another, each closed by repeating its first vertex.
//! A single ring is written unclosed. Every ring starts at a vertex it visits
//! only once, so a reader splits rings at the first repeat of the current
//! start vertex. Lines always carry at least three vertices; shorter single
//! rings are padded by repeating vertices, which leaves the raster unchanged.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{read_text, stem_of, write_bytes};
use crate::contour::{contours_to_mask, mask_to_contours, Point, Polygon};
use crate::error::{Error, Result};
use crate::instance::{InstanceAnnotation, InstanceSet};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, PartialEq)]
pub struct YoloSegRecord {
    pub class_id: u32,
    /// Normalised `(x / width, y / height)` pairs.
    pub vertices: Vec<(f64, f64)>,
    pub confidence: Option<f64>,
}

impl YoloSegRecord {
    /// Encodes one instance mask; fails on an empty mask.
    pub fn from_mask(class_id: u32, mask: &BinaryMask, confidence: Option<f64>) -> Result<Self> {
        let (w, h) = (mask.width() as f64, mask.height() as f64);
        let points = encode_rings(&canonical_rings(mask_to_contours(mask)?));
        Ok(Self {
            class_id,
            vertices: points.iter().map(|p| (p.x as f64 / w, p.y as f64 / h)).collect(),
            confidence,
        })
    }

    pub fn to_line(&self) -> String {
        let mut s = self.class_id.to_string();
        for (x, y) in &self.vertices {
            let _ = write!(s, " {x:.6} {y:.6}");
        }
        if let Some(c) = self.confidence {
            let _ = write!(s, " {c}");
        }
        s
    }

    pub fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let mut tokens = line.split_whitespace();
        let class = tokens.next().ok_or("empty line")?;
        let class_id = class
            .parse::<u32>()
            .map_err(|_| format!("class id {class:?} is not a non-negative integer"))?;
        let mut values = tokens
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("{t:?} is not a finite number"))
            })
            .collect::<std::result::Result<Vec<f64>, String>>()?;
        let confidence = if values.len() % 2 == 1 { values.pop() } else { None };
        if let Some(c) = confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(format!("confidence {c} outside [0,1]"));
            }
        }
        if values.len() < 6 {
            return Err(format!("polygon needs at least 3 vertices, found {}", values.len() / 2));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(format!("coordinate {v} outside [0,1]"));
        }
        let vertices = values.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        Ok(Self {
            class_id,
            vertices,
            confidence,
        })
    }

    /// Denormalises against the given image size and rasterises.
    pub fn to_mask(&self, width: u32, height: u32) -> Result<BinaryMask> {
        let denorm = |v: f64, n: u32| ((v * n as f64).round() as i64).clamp(0, n as i64 - 1) as i32;
        let points: Vec<Point> = self
            .vertices
            .iter()
            .map(|&(x, y)| Point::new(denorm(x, width), denorm(y, height)))
            .collect();
        contours_to_mask(&decode_rings(&points), width, height)
    }
}

/// Rotates each ring to start at a vertex it visits once. A ring without
/// such a vertex is split at a repeated vertex into closed sub-walks, which
/// keeps the multiset of edges (and so the raster) unchanged.
pub(crate) fn canonical_rings(rings: Vec<Polygon>) -> Vec<Vec<Point>> {
    let mut out = Vec::with_capacity(rings.len());
    let mut stack: Vec<Vec<Point>> = rings.into_iter().rev().map(|p| p.vertices).collect();
    while let Some(mut walk) = stack.pop() {
        let mut counts: HashMap<Point, usize> = HashMap::with_capacity(walk.len());
        for p in &walk {
            *counts.entry(*p).or_default() += 1;
        }
        if let Some(i) = walk.iter().position(|p| counts[p] == 1) {
            walk.rotate_left(i);
            out.push(walk);
            continue;
        }
        let s = walk[0];
        let j = 1 + walk[1..].iter().position(|p| *p == s).expect("every vertex repeats");
        let tail = walk.split_off(j);
        stack.push(tail);
        stack.push(walk);
    }
    out
}

fn encode_rings(rings: &[Vec<Point>]) -> Vec<Point> {
    if let [ring] = rings {
        return match ring.as_slice() {
            [a] => vec![*a; 3],
            [a, b] => vec![*a, *b, *a],
            _ => ring.clone(),
        };
    }
    let mut out = Vec::with_capacity(rings.iter().map(|r| r.len() + 1).sum());
    for ring in rings {
        out.extend_from_slice(ring);
        out.push(ring[0]);
    }
    out
}

fn decode_rings(points: &[Point]) -> Vec<Polygon> {
    let mut rings = Vec::new();
    let mut i = 0;
    while i < points.len() {
        let s = points[i];
        match points[i + 1..].iter().position(|p| *p == s) {
            Some(k) => {
                rings.push(Polygon::new(points[i..i + 1 + k].to_vec()));
                i += k + 2;
            }
            None => {
                rings.push(Polygon::new(points[i..].to_vec()));
                break;
            }
        }
    }
    rings
}

/// Serialises every instance, in order; confidences are appended when present.
pub fn format_yolo_seg(set: &InstanceSet) -> Result<String> {
    let mut out = String::new();
    for inst in &set.instances {
        if inst.mask.dims() != (set.width, set.height) {
            return Err(Error::ShapeMismatch(format!(
                "instance {} of {} does not match the image size",
                inst.id, set.image_id
            )));
        }
        let rec = YoloSegRecord::from_mask(inst.class_id, &inst.mask, inst.confidence)?;
        out.push_str(&rec.to_line());
        out.push('\n');
    }
    Ok(out)
}

/// Parses label text; instance ids are assigned 1.. in line order.
pub fn parse_yolo_seg(text: &str, image_id: &str, width: u32, height: u32) -> Result<InstanceSet> {
    if width == 0 || height == 0 {
        return Err(Error::ShapeMismatch(format!("image size {width}x{height}")));
    }
    let mut set = InstanceSet::new(image_id, width, height);
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = YoloSegRecord::parse_line(line).map_err(|m| Error::parse_at_line(n + 1, m))?;
        let mask = rec.to_mask(width, height)?;
        let mut inst = InstanceAnnotation::new(set.len() as u32 + 1, rec.class_id, mask);
        inst.confidence = rec.confidence;
        set.instances.push(inst);
    }
    Ok(set)
}

pub fn write_yolo_seg(set: &InstanceSet, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), format_yolo_seg(set)?.as_bytes())
}

/// Reads a label file; the image id is the file stem.
pub fn read_yolo_seg(path: impl AsRef<Path>, width: u32, height: u32) -> Result<InstanceSet> {
    let path = path.as_ref();
    parse_yolo_seg(&read_text(path)?, &stem_of(path), width, height).map_err(|e| e.with_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_square_line() {
        let mut set = InstanceSet::new("a", 4, 4);
        set.push_mask(0, BinaryMask::full(4, 4));
        assert_eq!(
            format_yolo_seg(&set).unwrap(),
            "0 0.000000 0.000000 0.750000 0.000000 0.750000 0.750000 0.000000 0.750000\n"
        );
    }

    #[test]
    fn empty_set_is_empty_file() {
        assert_eq!(format_yolo_seg(&InstanceSet::new("e", 8, 8)).unwrap(), "");
        assert!(parse_yolo_seg("", "e", 8, 8).unwrap().is_empty());
    }

    #[test]
    fn confidence_round_trips() {
        let mut set = InstanceSet::new("p", 6, 6);
        set.instances.push(InstanceAnnotation::new(1, 2, BinaryMask::from_fn(6, 6, |x, y| x < 3 && y < 2)).with_confidence(0.8125));
        let text = format_yolo_seg(&set).unwrap();
        assert!(text.trim_end().ends_with(" 0.8125"));
        let back = parse_yolo_seg(&text, "p", 6, 6).unwrap();
        assert_eq!(back.instances[0].confidence, Some(0.8125));
        assert_eq!(back.instances[0].class_id, 2);
        assert_eq!(back.instances[0].mask, set.instances[0].mask);
    }

    #[test]
    fn tiny_shapes_are_padded() {
        for mask in [
            BinaryMask::from_fn(5, 5, |x, y| x == 1 && y == 1),
            BinaryMask::from_fn(5, 5, |x, y| y == 2 && x > 0),
        ] {
            let rec = YoloSegRecord::from_mask(0, &mask, None).unwrap();
            assert_eq!(rec.vertices.len(), 3);
            assert_eq!(rec.to_mask(5, 5).unwrap(), mask);
        }
    }

    #[test]
    fn holes_and_components_round_trip() {
        let m = BinaryMask::from_fn(12, 9, |x, y| {
            let frame = x < 6 && y < 6 && !(x > 1 && x < 4 && y > 1 && y < 4);
            frame || (x > 7 && y > 5)
        });
        let rec = YoloSegRecord::from_mask(0, &m, None).unwrap();
        assert_eq!(rec.to_mask(12, 9).unwrap(), m);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let cases = [
            ("0 0.1 0.1 0.2 0.2\n", "at least 3"),
            ("x 0 0 1 0 1 1\n", "class id"),
            ("0 0 0 1 0 1 nan\n", "finite"),
            ("0 0 0 1.5 0 1 1\n", "outside"),
            ("0 0 0 1 0 1 1 1.2\n", "confidence"),
        ];
        for (text, needle) in cases {
            let err = parse_yolo_seg(&format!("\n{text}"), "m", 10, 10).unwrap_err();
            let msg = err.to_string();
            assert!(matches!(err, Error::Parse { line: Some(2), .. }), "{msg}");
            assert!(msg.contains(needle), "{msg}");
        }
    }

    #[test]
    fn split_walks_keep_the_raster() {
        // a closed walk in which every vertex repeats
        let walk = vec![
            Point::new(0, 0),
            Point::new(3, 0),
            Point::new(0, 0),
            Point::new(3, 0),
        ];
        let rings = canonical_rings(vec![Polygon::new(walk.clone())]);
        let direct = contours_to_mask(&[Polygon::new(walk)], 4, 4).unwrap();
        let decoded = decode_rings(&encode_rings(&rings));
        assert_eq!(contours_to_mask(&decoded, 4, 4).unwrap(), direct);
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        (1u32..20, 1u32..20, 1u32..9).prop_flat_map(|(w, h, d)| {
            proptest::collection::vec(0u32..10, (w * h) as usize)
                .prop_map(move |v| BinaryMask::from_fn(w, h, |x, y| v[(y * w + x) as usize] < d))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn write_read_is_pixel_exact(m in arb_mask()) {
            prop_assume!(!m.is_empty());
            let mut set = InstanceSet::new("r", m.width(), m.height());
            set.push_mask(0, m.clone());
            let text = format_yolo_seg(&set).unwrap();
            let back = parse_yolo_seg(&text, "r", m.width(), m.height()).unwrap();
            prop_assert_eq!(&back.instances[0].mask, &m);
            for line in text.lines() {
                let rec = YoloSegRecord::parse_line(line).unwrap();
                prop_assert!(rec.vertices.len() >= 3);
            }
        }

        #[test]
        fn parser_never_panics(text in "[0-9 .\\-e\\n]{0,80}") {
            let _ = parse_yolo_seg(&text, "f", 7, 5);
        }
    }
}
