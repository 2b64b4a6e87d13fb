use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use rayon::prelude::*;
use segsynth_core::augmentation::{expand_rotation_dataset, ExpandOptions, RotationPair};
use segsynth_core::colorspace::assemble_glmask;
use segsynth_core::eval::{as_predictions, evaluate, EvalOptions};
use segsynth_core::labels_io::{
    image_sizes, list_images, read_annotations, read_coco_json, read_instance_map, read_labeled_dir,
    read_manifest, read_mask_png, read_prediction_dir, read_rgb, subdir_or_self, write_coco_json,
    write_instance_map, write_manifest, write_raster, write_yolo_seg, CocoData, DatasetManifest, Role,
    SampleEntry, IMAGES_DIR, MANIFEST_FILE, MASKS_DIR,
};
use segsynth_core::pseudo::{build_pseudo_dataset, PseudoLabelConfig};
use segsynth_core::synthesis::{cutouts_from, synthesize_dataset, CutoutKind, Pools, SynthesisConfig};
use segsynth_core::{Error, InstanceSet, Raster, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{absolute, require_dir, require_exists, Block};
use crate::{ConvertArgs, EvalArgs, GlmaskArgs, PseudoArgs, RotaugArgs, Summary, SynthArgs};

/// Stores the command, its resolved options and absolute input paths in
/// the manifest so that `--config manifest.json` replays the run.
fn record_run<T: Serialize>(
    manifest: &mut DatasetManifest,
    command: &str,
    options: &T,
    inputs: &[(&str, &Path)],
    out: &Path,
) -> Result<()> {
    let mut block = serde_json::to_value(options).expect("options serialize");
    let map = block.as_object_mut().expect("options serialize to objects");
    for (key, path) in inputs {
        map.insert(key.to_string(), Value::from(path.to_string_lossy().into_owned()));
    }
    manifest.extra.insert("run".into(), json!({ command: block }));
    write_manifest(manifest, out.join(MANIFEST_FILE))
}

/// Per-sample instance counts in buckets of ten, lowest bucket first.
fn histogram(samples: &[SampleEntry]) -> Vec<(String, usize)> {
    let mut buckets: BTreeMap<usize, usize> = BTreeMap::new();
    for s in samples {
        *buckets.entry(s.instances / 10).or_default() += 1;
    }
    buckets
        .into_iter()
        .map(|(b, n)| (format!("{}-{}", b * 10, b * 10 + 9), n))
        .collect()
}

fn dataset_summary(command: &str, manifest: &DatasetManifest, out: &Path, extra: Value) -> Summary {
    let hist = histogram(&manifest.samples);
    let mut json = json!({
        "command": command,
        "out": out.to_string_lossy(),
        "samples": manifest.samples.len(),
        "instances": manifest.instance_total(),
        "negatives": manifest.samples.iter().filter(|s| s.negative).count(),
        "histogram": hist.iter().map(|(k, n)| json!({"instances": k, "samples": n})).collect::<Vec<_>>(),
    });
    if let (Value::Object(j), Value::Object(e)) = (&mut json, extra) {
        j.extend(e);
    }
    let mut text = format!(
        "{command}: {} samples, {} instances -> {}\n",
        manifest.samples.len(),
        manifest.instance_total(),
        out.display()
    );
    for (k, n) in &hist {
        let _ = writeln!(text, "  {k:>9} instances: {n} samples");
    }
    Summary { json, text }
}

fn read_backgrounds(dir: &Path) -> Result<Vec<(String, Raster)>> {
    list_images(subdir_or_self(dir, IMAGES_DIR))?
        .par_iter()
        .map(|(id, p)| Ok((id.clone(), read_rgb(p)?)))
        .collect()
}

pub(crate) fn synth(a: SynthArgs, mut b: Block) -> Result<Summary> {
    let backgrounds = b.required_path("backgrounds", a.backgrounds)?;
    let fakes = b.required_path("fakes", a.fakes)?;
    let reals = b.required_path("reals", a.reals)?;
    let out = b.required_path("out", a.out)?;
    b.set("n_samples", a.n);
    b.set("master_seed", a.seed);
    b.set("overlay_min", a.overlay_min);
    b.set("overlay_max", a.overlay_max);
    b.set("pool_switch", a.pool_switch);
    b.set("visibility_threshold", a.visibility);
    b.set("width", a.width);
    b.set("height", a.height);
    b.set("name", a.name);
    b.set("role", a.role);
    b.set("annotate_fakes", a.annotate_fakes.then_some(true));
    b.set("outputs.semantic_masks", a.no_masks.then_some(false));
    b.set("outputs.instance_maps", a.no_instance_maps.then_some(false));
    let config = b.build(&SynthesisConfig::default())?;
    config.validate()?;
    for p in [&backgrounds, &fakes, &reals] {
        require_dir(p)?;
    }
    let (backgrounds, fakes, reals) = (absolute(&backgrounds)?, absolute(&fakes)?, absolute(&reals)?);

    let bgs = read_backgrounds(&backgrounds)?;
    let fake = cutouts_from(&read_labeled_dir(&fakes, true)?, CutoutKind::Fake)?;
    let real = cutouts_from(&read_labeled_dir(&reals, true)?, CutoutKind::Real)?;
    let pools = Pools::new(fake, real)?;
    info!(
        "{} backgrounds, {} fake, {} large and {} small real cutouts",
        bgs.len(),
        pools.fake.len(),
        pools.large.len(),
        pools.small.len()
    );
    let mut manifest = synthesize_dataset(&bgs, &pools, &config, &out)?;
    let inputs = [("backgrounds", &*backgrounds), ("fakes", &*fakes), ("reals", &*reals)];
    record_run(&mut manifest, "synth", &config, &inputs, &out)?;
    Ok(dataset_summary("synth", &manifest, &out, json!({"master_seed": config.master_seed})))
}

pub(crate) fn rotaug(a: RotaugArgs, mut b: Block) -> Result<Summary> {
    let pairs_dir = b.required_path("pairs", a.pairs)?;
    let out = b.required_path("out", a.out)?;
    b.set("name", a.name);
    b.set("role", a.role);
    b.set("start_degree", a.start);
    b.set("end_degree", a.end);
    b.set("outputs.semantic_masks", a.no_masks.then_some(false));
    b.set("outputs.instance_maps", a.no_instance_maps.then_some(false));
    let opts = b.build(&ExpandOptions::default())?;
    opts.validate()?;
    require_dir(&pairs_dir)?;
    let pairs_dir = absolute(&pairs_dir)?;

    let pairs: Vec<RotationPair> = read_labeled_dir(&pairs_dir, true)?
        .into_iter()
        .map(|l| RotationPair {
            id: l.id,
            image: l.image,
            instances: l.instances,
        })
        .collect();
    let degrees = opts.degrees().len();
    info!("{} pairs x {degrees} degrees", pairs.len());
    let mut manifest = expand_rotation_dataset(&pairs, &out, &opts)?;
    record_run(&mut manifest, "rotaug", &opts, &[("pairs", &*pairs_dir)], &out)?;
    let mut s = dataset_summary(
        "rotaug",
        &manifest,
        &out,
        json!({"pairs": pairs.len(), "degrees": degrees}),
    );
    s.text = format!(
        "rotaug: {} pairs x {degrees} degrees = {} samples\n{}",
        pairs.len(),
        manifest.samples.len(),
        s.text
    );
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GlmaskOptions {
    name: String,
    role: Role,
}

impl Default for GlmaskOptions {
    fn default() -> Self {
        Self {
            name: "glmask".into(),
            role: Role::Train,
        }
    }
}

pub(crate) fn glmask(a: GlmaskArgs, mut b: Block) -> Result<Summary> {
    let images_dir = b.required_path("images", a.images)?;
    let masks_dir = b.required_path("masks", a.masks)?;
    let out = b.required_path("out", a.out)?;
    b.set("name", a.name);
    b.set("role", a.role);
    let opts = b.build(&GlmaskOptions::default())?;
    require_dir(&images_dir)?;
    require_dir(&masks_dir)?;
    let (images_dir, masks_dir) = (absolute(&images_dir)?, absolute(&masks_dir)?);

    let images = list_images(subdir_or_self(&images_dir, IMAGES_DIR))?;
    let masks: BTreeMap<String, PathBuf> = list_images(subdir_or_self(&masks_dir, MASKS_DIR))?.into_iter().collect();
    let mut unpaired: Vec<String> = images
        .iter()
        .filter(|(id, _)| !masks.contains_key(id))
        .map(|(id, _)| format!("image {id} has no mask"))
        .collect();
    let image_ids: BTreeMap<&str, ()> = images.iter().map(|(id, _)| (id.as_str(), ())).collect();
    unpaired.extend(
        masks
            .keys()
            .filter(|id| !image_ids.contains_key(id.as_str()))
            .map(|id| format!("mask {id} has no image")),
    );
    if !unpaired.is_empty() {
        return Err(Error::Validation(unpaired));
    }
    let dir = out.join(IMAGES_DIR);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let samples = images
        .par_iter()
        .map(|(id, path)| {
            let rgb = read_rgb(path)?;
            let mask = read_mask_png(&masks[id])?;
            let g = assemble_glmask(&rgb, &mask).map_err(|e| match e {
                Error::ShapeMismatch(m) => Error::ShapeMismatch(format!("{id}: {m}")),
                other => other,
            })?;
            let image = format!("{IMAGES_DIR}/{id}.png");
            write_raster(g.raster(), out.join(&image))?;
            Ok(SampleEntry {
                id: id.clone(),
                image,
                ..Default::default()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = DatasetManifest::new(opts.name.clone(), opts.role, "glmask");
    manifest.parameters = json!({
        "options": opts,
        "images": images_dir.to_string_lossy(),
        "masks": masks_dir.to_string_lossy(),
    });
    manifest.samples = samples;
    let inputs = [("images", &*images_dir), ("masks", &*masks_dir)];
    record_run(&mut manifest, "glmask", &opts, &inputs, &out)?;
    Ok(dataset_summary("glmask", &manifest, &out, json!({})))
}

/// Sets whose instances all lack a confidence are ground-truth style
/// labels and score as confidence 1.
fn default_confidence(set: InstanceSet) -> InstanceSet {
    if !set.is_empty() && set.instances.iter().all(|i| i.confidence.is_none()) {
        as_predictions(&set, 1.0)
    } else {
        set
    }
}

fn read_domains(explicit: Option<&Path>, gt: &Path) -> Result<BTreeMap<String, String>> {
    if let Some(p) = explicit {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        return serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("{}: expected an object of image id to domain: {e}", p.display())));
    }
    let m = gt.join(MANIFEST_FILE);
    if !m.is_file() {
        return Ok(BTreeMap::new());
    }
    Ok(read_manifest(&m)?
        .samples
        .into_iter()
        .filter_map(|s| s.domain.map(|d| (s.id, d)))
        .collect())
}

pub(crate) fn eval(a: EvalArgs, mut b: Block) -> Result<Summary> {
    let pred = b.required_path("pred", a.pred)?;
    let gt = b.required_path("gt", a.gt)?;
    let domains = b.path("domains", a.domains)?;
    let report = b.path("report", a.report)?;
    let preset = b.string("preset", a.preset)?.unwrap_or_else(|| "wheat".into());
    b.set("conf_threshold", a.conf);
    b.set("match_iou", a.iou);
    b.set("missing_predictions_as_empty", a.missing_as_empty.then_some(true));
    let opts = b.build(&EvalOptions::preset(&preset)?)?;
    opts.validate()?;
    require_exists(&pred)?;
    require_dir(&gt)?;
    if let Some(d) = &domains {
        require_exists(d)?;
    }

    let gts = read_annotations(&gt, false)?;
    let preds: Vec<InstanceSet> = if pred.is_file() {
        read_coco_json(&pred)?.sets
    } else {
        let dims = gts.iter().map(|s| (s.image_id.clone(), (s.width, s.height))).collect();
        read_prediction_dir(&pred, &dims)?.into_values().collect()
    };
    let preds: Vec<InstanceSet> = preds.into_iter().map(default_confidence).collect();
    let domain_map = read_domains(domains.as_deref(), &gt)?;
    info!("{} prediction sets against {} images", preds.len(), gts.len());
    let rep = evaluate(&preds, &gts, &domain_map, &opts)?;
    let text = rep.to_json()?;
    if let Some(r) = &report {
        if let Some(parent) = r.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(r, &text).map_err(|e| Error::io(r, e))?;
    }
    let json = serde_json::from_str(&text).map_err(|e| Error::parse(e.to_string()))?;
    Ok(Summary {
        json,
        text: rep.to_table(),
    })
}

pub(crate) fn pseudo(a: PseudoArgs, mut b: Block) -> Result<Summary> {
    let pred = b.required_path("pred", a.pred)?;
    let images = b.required_path("images", a.images)?;
    let out = b.required_path("out", a.out)?;
    b.set("confidence_threshold", a.conf);
    b.set("min_instance_area", a.min_area);
    b.set("role", a.role);
    b.set("name", a.name);
    b.set("copy_images", a.copy_images.then_some(true));
    let cfg = b.build(&PseudoLabelConfig::default())?;
    cfg.validate()?;
    require_dir(&pred)?;
    require_dir(&images)?;
    let (pred, images) = (absolute(&pred)?, absolute(&images)?);
    let mut manifest = build_pseudo_dataset(&pred, &images, &out, &cfg)?;
    record_run(&mut manifest, "pseudo", &cfg, &[("pred", &*pred), ("images", &*images)], &out)?;
    let predictions: u64 = manifest
        .samples
        .iter()
        .filter_map(|s| s.extra.get("predictions").and_then(Value::as_u64))
        .sum();
    let mut s = dataset_summary("pseudo", &manifest, &out, json!({"predictions": predictions}));
    let _ = writeln!(s.text, "  kept {} of {predictions} predictions", manifest.instance_total());
    Ok(s)
}

/// Annotation formats `convert` reads and writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    /// Directory of `{id}.txt` contour labels.
    Yolo,
    /// One COCO instance JSON file.
    Coco,
    /// Directory of 16-bit instance-id PNGs.
    Masks,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "yolo" => Ok(Format::Yolo),
            "coco" => Ok(Format::Coco),
            "masks" => Ok(Format::Masks),
            _ => Err(Error::Config(format!("unknown format {s:?} (expected yolo, coco or masks)"))),
        }
    }
}

fn read_format(format: Format, input: &Path, images: Option<&Path>) -> Result<Vec<InstanceSet>> {
    match format {
        Format::Coco => Ok(read_coco_json(input)?.sets),
        Format::Masks => list_images(input)?
            .par_iter()
            .map(|(id, p)| read_instance_map(p, id))
            .collect(),
        Format::Yolo => {
            let images = images.ok_or_else(|| Error::Config("yolo input needs --images for canvas sizes".into()))?;
            require_dir(images)?;
            let dims = image_sizes(&list_images(subdir_or_self(images, IMAGES_DIR))?)?;
            let mut labels = read_prediction_dir(input, &dims)?;
            Ok(dims
                .iter()
                .map(|(id, &(w, h))| labels.remove(id).unwrap_or_else(|| InstanceSet::new(id.clone(), w, h)))
                .collect())
        }
    }
}

fn write_format(format: Format, sets: Vec<InstanceSet>, output: &Path) -> Result<()> {
    let dir = match format {
        Format::Coco => output.parent().filter(|p| !p.as_os_str().is_empty()),
        _ => Some(output),
    };
    if let Some(d) = dir {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    match format {
        Format::Coco => write_coco_json(&CocoData::new(sets), output),
        Format::Masks => sets
            .par_iter()
            .try_for_each(|s| write_instance_map(s, output.join(format!("{}.png", s.image_id)))),
        Format::Yolo => sets
            .par_iter()
            .try_for_each(|s| write_yolo_seg(s, output.join(format!("{}.txt", s.image_id)))),
    }
}

pub(crate) fn convert(a: ConvertArgs, mut b: Block) -> Result<Summary> {
    let from = b.string("from", a.from)?.ok_or_else(|| Error::Config("convert needs --from".into()))?;
    let to = b.string("to", a.to)?.ok_or_else(|| Error::Config("convert needs --to".into()))?;
    let (from, to) = (Format::from_str(&from)?, Format::from_str(&to)?);
    let input = b.required_path("input", a.input)?;
    let output = b.required_path("output", a.output)?;
    let images = b.path("images", a.images)?;
    b.build(&serde_json::Map::new())
        .and_then(|rest: serde_json::Map<String, Value>| match rest.keys().next() {
            Some(k) => Err(Error::Config(format!("convert: unknown key {k:?}"))),
            None => Ok(()),
        })?;
    require_exists(&input)?;

    let sets = read_format(from, &input, images.as_deref())?;
    let (n_images, n_instances) = (sets.len(), sets.iter().map(InstanceSet::len).sum::<usize>());
    write_format(to, sets, &output)?;
    Ok(Summary {
        json: json!({
            "command": "convert",
            "images": n_images,
            "instances": n_instances,
            "output": output.to_string_lossy(),
        }),
        text: format!("convert: {n_images} images, {n_instances} instances -> {}\n", output.display()),
    })
}
