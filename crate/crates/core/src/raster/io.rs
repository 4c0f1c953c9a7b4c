use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EnergyMap, LabelMap};
use crate::error::{Error, Result};

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::Png(e.to_string())
}

/// Reads a 16-bit single-channel PNG; pixel value `v` becomes instance id `v`.
pub fn read_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(png_err)?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::Format(format!(
            "{}: color type {:?} ({} channels), expected single-channel grayscale",
            path.display(),
            info.color_type,
            info.color_type.samples()
        )));
    }
    if info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::Format(format!(
            "{}: bit depth {}, expected 16",
            path.display(),
            info.bit_depth as u8
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(png_err)?;
    let bytes = &buf[..frame.buffer_size()];
    let labels = bytes
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]) as u32)
        .collect();
    LabelMap::new(width, height, labels)
}

/// Writes a label map as a 16-bit grayscale PNG. Ids above 65535 are rejected.
pub fn write_label_map(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(&id) = map.labels().iter().find(|&&l| l > u16::MAX as u32) {
        return Err(Error::Range(format!("instance id {id} does not fit in 16 bits")));
    }
    let width = u32::try_from(map.width()).map_err(|_| Error::Range("width".into()))?;
    let height = u32::try_from(map.height()).map_err(|_| Error::Range("height".into()))?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width, height);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let mut writer = encoder.write_header().map_err(png_err)?;
    let data: Vec<u8> = map.labels().iter().flat_map(|&l| (l as u16).to_be_bytes()).collect();
    writer.write_image_data(&data).map_err(png_err)?;
    writer.finish().map_err(png_err)?;
    Ok(())
}

/// JSON sidecar describing an energy raster. Field set is fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySidecar {
    pub width: usize,
    pub height: usize,
    pub alpha: f64,
    pub theta: f64,
    pub bins: u32,
}

/// Resolves `<base>.f32` and `<base>.json` from a base path, stripping either
/// extension if the caller passed one of the two files directly.
pub fn energy_paths(path: impl AsRef<Path>) -> (PathBuf, PathBuf) {
    let path = path.as_ref();
    let base = match path.extension().and_then(|e| e.to_str()) {
        Some("f32") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let mut raster = base.clone().into_os_string();
    raster.push(".f32");
    let mut sidecar = base.into_os_string();
    sidecar.push(".json");
    (raster.into(), sidecar.into())
}

/// Writes little-endian `f32` values with no header.
pub fn write_raw_f32(path: impl AsRef<Path>, values: &[f32]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads exactly `expected` little-endian `f32` values; NaN is rejected.
pub fn read_raw_f32(path: impl AsRef<Path>, expected: usize) -> Result<Vec<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 || bytes.len() / 4 != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: bytes.len() / 4,
        });
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Format(format!("{}: NaN at index {i}", path.display())));
    }
    Ok(values)
}

/// Writes `<base>.f32` and `<base>.json`. The sidecar's width/height are taken
/// from the map.
pub fn write_energy_map(
    map: &EnergyMap<f32>,
    alpha: f64,
    theta: f64,
    bins: u32,
    path: impl AsRef<Path>,
) -> Result<EnergySidecar> {
    let (raster, sidecar_path) = energy_paths(path);
    let sidecar = EnergySidecar {
        width: map.width(),
        height: map.height(),
        alpha,
        theta,
        bins,
    };
    write_raw_f32(&raster, map.values())?;
    let json = serde_json::to_string_pretty(&sidecar)?;
    std::fs::write(&sidecar_path, json).map_err(|e| Error::io(&sidecar_path, e))?;
    Ok(sidecar)
}

pub fn read_energy_map(path: impl AsRef<Path>) -> Result<(EnergyMap<f32>, EnergySidecar)> {
    let (raster, sidecar_path) = energy_paths(path);
    let text = std::fs::read_to_string(&sidecar_path).map_err(|e| Error::io(&sidecar_path, e))?;
    let sidecar: EnergySidecar = serde_json::from_str(&text)?;
    let values = read_raw_f32(&raster, sidecar.width * sidecar.height)?;
    let map = EnergyMap::new(sidecar.width, sidecar.height, values)?;
    Ok((map, sidecar))
}
