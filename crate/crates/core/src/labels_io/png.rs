use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageReader};

use crate::error::{Error, Result};
use crate::instance::{InstanceAnnotation, InstanceSet};
use crate::mask::BinaryMask;
use crate::raster::Raster;

fn encode_png(path: &Path, bytes: &[u8], width: u32, height: u32, color: ExtendedColorType) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let encoder = PngEncoder::new_with_quality(BufWriter::new(file), CompressionType::Fast, FilterType::Sub);
    encoder
        .write_image(bytes, width, height, color)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let image_err = |source| Error::Image {
        path: path.to_path_buf(),
        source,
    };
    ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(image_err)
}

fn bad_file(path: &Path, message: impl Into<String>) -> Error {
    Error::parse(message).with_path(path)
}

/// Writes a 1- or 3-channel raster as an 8-bit PNG.
pub fn write_raster(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let color = if raster.channels() == 1 {
        ExtendedColorType::L8
    } else {
        ExtendedColorType::Rgb8
    };
    encode_png(path.as_ref(), raster.data(), raster.width(), raster.height(), color)
}

/// Reads any supported image; grayscale files stay single-channel, all
/// others are converted to 8-bit RGB.
pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let img = decode(path)?;
    let (w, h) = (img.width(), img.height());
    match img {
        DynamicImage::ImageLuma8(g) => Raster::from_vec(w, h, 1, g.into_raw()),
        other => Raster::from_vec(w, h, 3, other.into_rgb8().into_raw()),
    }
}

/// Reads any supported image as 8-bit RGB.
pub fn read_rgb(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let img = decode(path)?;
    Raster::from_vec(img.width(), img.height(), 3, img.into_rgb8().into_raw())
}

/// Writes a semantic mask as 8-bit grayscale with samples 0 and 255.
pub fn write_mask_png(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    encode_png(path.as_ref(), &mask.to_bytes(), mask.width(), mask.height(), ExtendedColorType::L8)
}

/// Reads an 8-bit single-channel mask whose samples are all in {0, 255}
/// (or all in {0, 1}).
pub fn read_mask_png(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let DynamicImage::ImageLuma8(g) = decode(path)? else {
        return Err(bad_file(path, "mask must be an 8-bit single-channel image"));
    };
    let (w, h) = g.dimensions();
    let raw = g.into_raw();
    let high = raw.iter().copied().max().unwrap_or(0);
    if raw.iter().any(|&v| v != 0 && v != high) || !(high == 0 || high == 1 || high == 255) {
        return Err(bad_file(path, "mask samples must be 0 or 255"));
    }
    let bits: Vec<bool> = raw.iter().map(|&v| v != 0).collect();
    BinaryMask::from_bools(w, h, &bits)
}

/// Id map of an instance set: 0 is background, otherwise the instance id.
/// Where masks overlap the later instance wins.
pub fn instance_id_map(set: &InstanceSet) -> Result<Vec<u16>> {
    let mut map = vec![0u16; set.width as usize * set.height as usize];
    for inst in &set.instances {
        let id = u16::try_from(inst.id)
            .ok()
            .filter(|&id| id > 0)
            .ok_or_else(|| Error::InvalidInput(format!("instance id {} does not fit a 16-bit map", inst.id)))?;
        if inst.mask.dims() != (set.width, set.height) {
            return Err(Error::ShapeMismatch(format!("instance {} of {}", inst.id, set.image_id)));
        }
        for (x, y) in inst.mask.iter_ones() {
            map[y as usize * set.width as usize + x as usize] = id;
        }
    }
    Ok(map)
}

/// Writes the instance id map as a 16-bit grayscale PNG.
pub fn write_instance_map(set: &InstanceSet, path: impl AsRef<Path>) -> Result<()> {
    let map = instance_id_map(set)?;
    let bytes: Vec<u8> = map.iter().flat_map(|v| v.to_ne_bytes()).collect();
    encode_png(path.as_ref(), &bytes, set.width, set.height, ExtendedColorType::L16)
}

/// Reads a 16-bit (or 8-bit) id map back into instances of class 0, in
/// ascending id order.
pub fn read_instance_map(path: impl AsRef<Path>, image_id: &str) -> Result<InstanceSet> {
    let path = path.as_ref();
    let (w, h, ids): (u32, u32, Vec<u16>) = match decode(path)? {
        DynamicImage::ImageLuma16(g) => (g.width(), g.height(), g.into_raw()),
        DynamicImage::ImageLuma8(g) => (g.width(), g.height(), g.into_raw().into_iter().map(u16::from).collect()),
        _ => return Err(bad_file(path, "instance map must be a single-channel image")),
    };
    let mut present: Vec<u16> = ids.iter().copied().filter(|&v| v != 0).collect();
    present.sort_unstable();
    present.dedup();
    let mut set = InstanceSet::new(image_id, w, h);
    let slot: std::collections::HashMap<u16, usize> = present.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut masks = vec![BinaryMask::new(w, h); present.len()];
    for (i, &v) in ids.iter().enumerate() {
        if v != 0 {
            masks[slot[&v]].set(i as u32 % w, i as u32 / w, true);
        }
    }
    for (id, mask) in present.into_iter().zip(masks) {
        set.instances.push(InstanceAnnotation::new(id as u32, 0, mask));
    }
    Ok(set)
}
