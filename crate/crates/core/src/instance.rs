use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

/// One annotated (or predicted) object. Predictions carry a confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceAnnotation {
    pub id: u32,
    pub class_id: u32,
    pub mask: BinaryMask,
    pub confidence: Option<f64>,
}

impl InstanceAnnotation {
    pub fn new(id: u32, class_id: u32, mask: BinaryMask) -> Self {
        Self {
            id,
            class_id,
            mask,
            confidence: None,
        }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = Some(confidence);
        self
    }

    pub fn area(&self) -> u64 {
        self.mask.count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSet {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub instances: Vec<InstanceAnnotation>,
}

impl InstanceSet {
    pub fn new(image_id: impl Into<String>, width: u32, height: u32) -> Self {
        Self {
            image_id: image_id.into(),
            width,
            height,
            instances: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Appends an instance with the next free id.
    pub fn push_mask(&mut self, class_id: u32, mask: BinaryMask) -> u32 {
        let id = self.instances.iter().map(|i| i.id).max().unwrap_or(0) + 1;
        self.instances.push(InstanceAnnotation::new(id, class_id, mask));
        id
    }

    /// Checks shared dimensions, id uniqueness, non-empty masks and confidence range.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for inst in &self.instances {
            if inst.mask.dims() != (self.width, self.height) {
                return Err(Error::ShapeMismatch(format!(
                    "instance {} of {} is {}x{}, image is {}x{}",
                    inst.id,
                    self.image_id,
                    inst.mask.width(),
                    inst.mask.height(),
                    self.width,
                    self.height
                )));
            }
            if !seen.insert(inst.id) {
                return Err(Error::InvalidInput(format!(
                    "duplicate instance id {} in {}",
                    inst.id, self.image_id
                )));
            }
            if inst.mask.is_empty() {
                return Err(Error::EmptyMask);
            }
            if let Some(c) = inst.confidence {
                if !(0.0..=1.0).contains(&c) {
                    return Err(Error::InvalidInput(format!(
                        "confidence {c} of instance {} in {} outside [0,1]",
                        inst.id, self.image_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Pixelwise union of all instance masks.
    pub fn union_mask(&self) -> BinaryMask {
        let mut m = BinaryMask::new(self.width, self.height);
        for inst in &self.instances {
            // dims are checked by validate(); mismatched masks are skipped here
            let _ = m.union_with(&inst.mask);
        }
        m
    }

    /// Returns a copy with confidences removed, turning predictions into labels.
    pub fn without_confidences(&self) -> InstanceSet {
        let mut out = self.clone();
        for i in &mut out.instances {
            i.confidence = None;
        }
        out
    }
}
