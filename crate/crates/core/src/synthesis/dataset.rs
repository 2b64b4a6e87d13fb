use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::compose::{synthesize_sample, Pools};
use super::config::SynthesisConfig;
use super::cutout::{extract_cutouts, Cutout, CutoutKind};
use crate::error::{Error, Result};
use crate::labels_io::{prepare_layout, write_manifest, write_sample, DatasetManifest, LabeledImage, MANIFEST_FILE};
use crate::raster::Raster;
use crate::rng::{derive_seed, DOMAIN_SYNTH};

/// Cutouts of every annotated instance in `sources`.
pub fn cutouts_from(sources: &[LabeledImage], kind: CutoutKind) -> Result<Vec<Cutout>> {
    let mut out = Vec::new();
    for s in sources {
        out.extend(extract_cutouts(&s.image, &s.instances, kind)?);
    }
    Ok(out)
}

/// Seed of sample `index` under `master_seed`.
pub fn sample_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, DOMAIN_SYNTH, index as u64)
}

/// Generates `config.n_samples` samples into `out_dir` (see
/// [`write_sample`] for the layout) plus `manifest.json`. Sample `i` uses
/// background `i mod len` and its own seed, so the output does not depend
/// on worker scheduling.
pub fn synthesize_dataset(
    backgrounds: &[(String, Raster)],
    pools: &Pools,
    config: &SynthesisConfig,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    config.validate()?;
    if backgrounds.is_empty() {
        return Err(Error::InvalidInput("no background images".into()));
    }
    let out = out_dir.as_ref();
    prepare_layout(out, config.outputs)?;
    let digits = config.n_samples.saturating_sub(1).to_string().len().max(5);
    let entries = (0..config.n_samples)
        .into_par_iter()
        .map(|i| {
            let id = format!("{}_{i:0digits$}", config.name);
            let (bg_id, bg) = &backgrounds[i % backgrounds.len()];
            let seed = sample_seed(config.master_seed, i);
            let s = synthesize_sample(bg, pools, config, seed, &id)?;
            let mut entry = write_sample(out, &id, &s.image, &s.instances, Some(&s.semantic_mask), config.outputs)?;
            entry.seed = Some(seed);
            entry.extra.insert("background".into(), Value::from(bg_id.as_str()));
            entry.extra.insert("overlay_count".into(), Value::from(s.provenance.overlay_count));
            entry.extra.insert("real_pool".into(), serde_json::to_value(s.provenance.real_pool).unwrap_or_default());
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = DatasetManifest::new(config.name.clone(), config.role, "synth");
    manifest.master_seed = Some(config.master_seed);
    manifest.parameters = json!({
        "config": config,
        "backgrounds": backgrounds.iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>(),
        "pools": {
            "fake": pools.fake.len(),
            "large": pools.large.len(),
            "small": pools.small.len(),
        },
    });
    manifest.samples = entries;
    write_manifest(&manifest, out.join(MANIFEST_FILE))?;
    Ok(manifest)
}
