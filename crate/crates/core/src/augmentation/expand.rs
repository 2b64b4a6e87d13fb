use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::rotation::rotate_pair;
use crate::error::{Error, Result};
use crate::instance::InstanceSet;
use crate::labels_io::{prepare_layout, write_manifest, write_sample, DatasetManifest, Role, SampleOutputs, MANIFEST_FILE};
use crate::raster::Raster;

/// An annotated image to be expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationPair {
    pub id: String,
    pub image: Raster,
    pub instances: InstanceSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpandOptions {
    pub name: String,
    pub role: Role,
    /// Integer degrees `start..end`, end exclusive.
    pub start_degree: u32,
    pub end_degree: u32,
    pub outputs: SampleOutputs,
}

impl Default for ExpandOptions {
    fn default() -> Self {
        Self {
            name: "rotated".into(),
            role: Role::Train,
            start_degree: 0,
            end_degree: 360,
            outputs: SampleOutputs::default(),
        }
    }
}

impl ExpandOptions {
    pub fn validate(&self) -> Result<()> {
        if self.start_degree >= self.end_degree || self.end_degree > 360 {
            return Err(Error::Config(format!(
                "degree range {}..{} must be non-empty within 0..360",
                self.start_degree, self.end_degree
            )));
        }
        Ok(())
    }

    pub fn degrees(&self) -> std::ops::Range<u32> {
        self.start_degree..self.end_degree
    }
}

/// Sample id of `pair` rotated by `degrees`.
pub fn rotation_sample_id(pair: &str, degrees: u32) -> String {
    format!("{pair}_r{degrees:03}")
}

/// Writes one rotated sample per pair and integer degree in the range,
/// plus `manifest.json`. With the full 0..360 sweep that is 360 samples
/// per pair.
pub fn expand_rotation_dataset(
    pairs: &[RotationPair],
    out_dir: impl AsRef<Path>,
    opts: &ExpandOptions,
) -> Result<DatasetManifest> {
    opts.validate()?;
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no image/annotation pairs to rotate".into()));
    }
    let out = out_dir.as_ref();
    prepare_layout(out, opts.outputs)?;
    let jobs: Vec<(usize, u32)> = (0..pairs.len())
        .flat_map(|p| opts.degrees().map(move |d| (p, d)))
        .collect();
    let samples = jobs
        .par_iter()
        .map(|&(p, d)| {
            let pair = &pairs[p];
            let id = rotation_sample_id(&pair.id, d);
            let (image, mut instances) = rotate_pair(&pair.image, &pair.instances, d as i32)?;
            instances.image_id = id.clone();
            let mut entry = write_sample(out, &id, &image, &instances, None, opts.outputs)?;
            entry.extra.insert("source".into(), json!(pair.id));
            entry.extra.insert("degrees".into(), json!(d));
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = DatasetManifest::new(opts.name.clone(), opts.role, "rotaug");
    manifest.parameters = json!({
        "options": opts,
        "pairs": pairs.iter().map(|p| p.id.as_str()).collect::<Vec<_>>(),
    });
    manifest.samples = samples;
    write_manifest(&manifest, out.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::BinaryMask;

    fn pair(id: &str) -> RotationPair {
        let mut instances = InstanceSet::new(id, 16, 12);
        instances.push_mask(0, BinaryMask::from_fn(16, 12, |x, y| (5..11).contains(&x) && (3..9).contains(&y)));
        RotationPair {
            id: id.into(),
            image: Raster::from_fn(16, 12, |x, y| [x as u8 * 9, y as u8 * 9, 50]).unwrap(),
            instances,
        }
    }

    #[test]
    fn counts_and_ids() {
        let dir = tempfile::tempdir().unwrap();
        let opts = ExpandOptions {
            start_degree: 0,
            end_degree: 12,
            ..Default::default()
        };
        let m = expand_rotation_dataset(&[pair("a"), pair("b")], dir.path(), &opts).unwrap();
        assert_eq!(m.samples.len(), 24);
        assert_eq!(m.samples[13].id, "b_r001");
        m.validate(dir.path()).unwrap();
        let empty = expand_rotation_dataset(&[], dir.path(), &opts);
        assert!(matches!(empty, Err(Error::InvalidInput(_))));
        let bad = ExpandOptions {
            start_degree: 10,
            end_degree: 10,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        assert_eq!(ExpandOptions::default().degrees().len(), 360);
    }
}
