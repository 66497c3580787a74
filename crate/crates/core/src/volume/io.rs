//! Volume file formats.
//!
//! Native format: a raw little-endian 32-bit float voxel blob (`.raw`,
//! x-fastest) next to a JSON sidecar (`.json`) holding dims, spacing and
//! origin. A minimal metaimage-style reader (`.mhd` text header + raw blob)
//! is provided for interoperability.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::vec3::Vec3;
use crate::volume::{Volume, VolumeError};

/// JSON sidecar describing the raw voxel blob.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VolumeMeta {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
}

/// Writes `<stem>.raw` (f32 LE voxels) and `<stem>.json` (sidecar).
///
/// Returns the two paths written, blob first.
pub fn write_raw_with_sidecar<T: Real>(
    vol: &Volume<T>,
    stem: &Path,
) -> Result<(PathBuf, PathBuf), VolumeError> {
    let raw_path = stem.with_extension("raw");
    let json_path = stem.with_extension("json");

    let mut bytes = Vec::with_capacity(vol.data().len() * 4);
    for &v in vol.data() {
        bytes.extend_from_slice(&(v.widen() as f32).to_le_bytes());
    }
    let mut f = fs::File::create(&raw_path)?;
    f.write_all(&bytes)?;

    let meta = VolumeMeta {
        dims: vol.dims(),
        spacing: vol.spacing().to_f64_array(),
        origin: vol.origin().to_f64_array(),
    };
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| VolumeError::Format(format!("sidecar encode: {e}")))?;
    fs::write(&json_path, text)?;
    Ok((raw_path, json_path))
}

/// Reads a volume from its JSON sidecar path (or the `.raw`/stem path).
pub fn read_raw_with_sidecar<T: Real>(path: &Path) -> Result<Volume<T>, VolumeError> {
    let json_path = path.with_extension("json");
    let raw_path = path.with_extension("raw");
    let text = fs::read_to_string(&json_path)?;
    let meta: VolumeMeta = serde_json::from_str(&text)
        .map_err(|e| VolumeError::Format(format!("sidecar decode: {e}")))?;
    let bytes = fs::read(&raw_path)?;
    let n = meta.dims[0] * meta.dims[1] * meta.dims[2];
    if bytes.len() != n * 4 {
        return Err(VolumeError::Format(format!(
            "raw blob holds {} bytes, sidecar dims need {}",
            bytes.len(),
            n * 4
        )));
    }
    let data: Vec<T> = bytes
        .chunks_exact(4)
        .map(|c| T::of(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
        .collect();
    Volume::new(
        meta.dims,
        Vec3::from_f64_array(meta.spacing),
        Vec3::from_f64_array(meta.origin),
        data,
    )
}

/// Reads a metaimage-style volume: a `Tag = Value` text header plus a raw
/// blob, either in a separate file (`ElementDataFile = name`) or appended
/// after the header (`ElementDataFile = LOCAL`).
///
/// Supports MET_FLOAT, MET_DOUBLE and MET_SHORT, little-endian.
pub fn read_metaimage<T: Real>(header_path: &Path) -> Result<Volume<T>, VolumeError> {
    let bytes = fs::read(header_path)?;
    // Header is the leading ASCII region up to (and including) the
    // ElementDataFile line; everything after may be binary.
    let header_end = find_header_end(&bytes)?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| VolumeError::Format("non-UTF8 metaimage header".into()))?;

    let mut dims: Option<[usize; 3]> = None;
    let mut spacing = [1.0f64; 3];
    let mut origin = [0.0f64; 3];
    let mut elem_type = String::from("MET_FLOAT");
    let mut data_file: Option<String> = None;

    for line in header.lines() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "NDims" => {
                if value != "3" {
                    return Err(VolumeError::Format(format!("NDims {value} unsupported")));
                }
            }
            "DimSize" => dims = Some(parse_triple(value)?),
            "ElementSpacing" | "ElementSize" => {
                let t: [f64; 3] = parse_triple_f64(value)?;
                spacing = t;
            }
            "Offset" | "Origin" | "Position" => origin = parse_triple_f64(value)?,
            "ElementType" => elem_type = value.to_string(),
            "ElementByteOrderMSB" | "BinaryDataByteOrderMSB" => {
                if value.eq_ignore_ascii_case("true") {
                    return Err(VolumeError::Format("big-endian metaimage unsupported".into()));
                }
            }
            "CompressedData" => {
                if value.eq_ignore_ascii_case("true") {
                    return Err(VolumeError::Format("compressed metaimage unsupported".into()));
                }
            }
            "ElementDataFile" => data_file = Some(value.to_string()),
            _ => {}
        }
    }

    let dims = dims.ok_or_else(|| VolumeError::Format("missing DimSize".into()))?;
    let data_file = data_file.ok_or_else(|| VolumeError::Format("missing ElementDataFile".into()))?;
    let blob: Vec<u8> = if data_file == "LOCAL" {
        bytes[header_end..].to_vec()
    } else {
        let dir = header_path.parent().unwrap_or(Path::new("."));
        fs::read(dir.join(&data_file))?
    };

    let n = dims[0] * dims[1] * dims[2];
    let data: Vec<T> = match elem_type.as_str() {
        "MET_FLOAT" => {
            check_blob(blob.len(), n * 4, "MET_FLOAT")?;
            blob.chunks_exact(4)
                .map(|c| T::of(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
                .collect()
        }
        "MET_DOUBLE" => {
            check_blob(blob.len(), n * 8, "MET_DOUBLE")?;
            blob.chunks_exact(8)
                .map(|c| {
                    T::of(f64::from_le_bytes([
                        c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7],
                    ]))
                })
                .collect()
        }
        "MET_SHORT" => {
            check_blob(blob.len(), n * 2, "MET_SHORT")?;
            blob.chunks_exact(2)
                .map(|c| T::of(i16::from_le_bytes([c[0], c[1]]) as f64))
                .collect()
        }
        other => {
            return Err(VolumeError::Format(format!("ElementType {other} unsupported")));
        }
    };

    Volume::new(
        dims,
        Vec3::from_f64_array(spacing),
        Vec3::from_f64_array(origin),
        data,
    )
}

fn check_blob(got: usize, expected: usize, ty: &str) -> Result<(), VolumeError> {
    if got < expected {
        return Err(VolumeError::Format(format!(
            "{ty} blob holds {got} bytes, dims need {expected}"
        )));
    }
    Ok(())
}

/// Byte offset just past the ElementDataFile line.
fn find_header_end(bytes: &[u8]) -> Result<usize, VolumeError> {
    let needle = b"ElementDataFile";
    let pos = bytes
        .windows(needle.len())
        .position(|w| w == needle)
        .ok_or_else(|| VolumeError::Format("missing ElementDataFile".into()))?;
    let after = &bytes[pos..];
    let line_end = after
        .iter()
        .position(|&b| b == b'\n')
        .map(|i| pos + i + 1)
        .unwrap_or(bytes.len());
    Ok(line_end)
}

fn parse_triple(value: &str) -> Result<[usize; 3], VolumeError> {
    let parts: Vec<usize> = value
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| VolumeError::Format(format!("bad integer triple `{value}`: {e}")))?;
    if parts.len() != 3 {
        return Err(VolumeError::Format(format!("expected 3 values in `{value}`")));
    }
    Ok([parts[0], parts[1], parts[2]])
}

fn parse_triple_f64(value: &str) -> Result<[f64; 3], VolumeError> {
    let parts: Vec<f64> = value
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| VolumeError::Format(format!("bad float triple `{value}`: {e}")))?;
    if parts.len() != 3 {
        return Err(VolumeError::Format(format!("expected 3 values in `{value}`")));
    }
    Ok([parts[0], parts[1], parts[2]])
}
