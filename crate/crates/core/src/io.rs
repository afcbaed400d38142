//! File formats: raw little-endian float32 tensors with a JSON sidecar,
//! 16-bit PGM depth images, ASCII PLY point clouds and CSV tables.
//!
//! A tensor stored at `name.f32` has its metadata in `name.json`.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use ndarray::{Array2, Array3, Array4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::FeatureVolume;
use crate::geometry::{Fov, Pose, SphericalGrid};
use crate::grid::GridSpec;
use crate::imaging::{CartesianVolume, RadioFrame};
use crate::ofdm::{CirTensor, OfdmConfig};
use crate::reconstruct::{DepthMap, VoxelGrid, INVALID_DEPTH};

pub const DTYPE: &str = "float32-le";

/// Metadata written next to every raw tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub kind: String,
    pub dtype: String,
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complex: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<OfdmConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spherical_grid: Option<SphericalGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Pose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fov: Option<Fov>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_range: Option<f64>,
}

impl Sidecar {
    pub fn new(kind: &str, shape: Vec<usize>) -> Self {
        Self {
            kind: kind.to_string(),
            dtype: DTYPE.to_string(),
            shape,
            complex: None,
            channels: None,
            config: None,
            spherical_grid: None,
            grid: None,
            pose: None,
            fov: None,
            max_range: None,
        }
    }
}

pub fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("json")
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

/// Writes `values` as float32 at `path` and `meta` at the sidecar path.
pub fn write_raw(path: &Path, values: impl IntoIterator<Item = f64>, meta: &Sidecar) -> Result<()> {
    let mut bytes = Vec::new();
    for v in values {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let expected = meta.shape.iter().product::<usize>() * if meta.complex == Some(true) { 2 } else { 1 };
    if bytes.len() != expected * 4 {
        return Err(Error::ShapeMismatch(format!(
            "{} floats for sidecar shape {:?}",
            bytes.len() / 4,
            meta.shape
        )));
    }
    write_bytes(path, &bytes)?;
    write_json(&sidecar_path(path), meta)
}

/// Reads a raw tensor and its sidecar, checking the element count.
pub fn read_raw(path: &Path) -> Result<(Sidecar, Vec<f32>)> {
    let meta: Sidecar = read_json(&sidecar_path(path))?;
    if meta.dtype != DTYPE {
        return Err(format_err(path, format!("unsupported dtype {}", meta.dtype)));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(format_err(path, "length is not a multiple of 4"));
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let expected = meta.shape.iter().product::<usize>() * if meta.complex == Some(true) { 2 } else { 1 };
    if values.len() != expected {
        return Err(format_err(
            path,
            format!("{} floats, sidecar shape {:?} needs {expected}", values.len(), meta.shape),
        ));
    }
    Ok((meta, values))
}

fn expect_kind(path: &Path, meta: &Sidecar, kind: &str, rank: usize) -> Result<()> {
    if meta.kind != kind {
        return Err(format_err(path, format!("expected a {kind}, found {}", meta.kind)));
    }
    if meta.shape.len() != rank {
        return Err(format_err(path, format!("{kind} must have rank {rank}")));
    }
    Ok(())
}

fn missing(path: &Path, field: &str) -> Error {
    format_err(path, format!("sidecar lacks `{field}`"))
}

pub fn write_cir(path: &Path, cir: &CirTensor) -> Result<()> {
    let (t, r, k) = cir.shape();
    let mut meta = Sidecar::new("cir", vec![t, r, k]);
    meta.complex = Some(true);
    meta.config = Some(cir.config);
    write_raw(path, cir.taps.iter().flat_map(|c| [c.re, c.im]), &meta)
}

pub fn read_cir(path: &Path) -> Result<CirTensor> {
    let (meta, v) = read_raw(path)?;
    expect_kind(path, &meta, "cir", 3)?;
    let config = meta.config.ok_or_else(|| missing(path, "config"))?;
    let taps: Vec<Complex64> = v
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0] as f64, c[1] as f64))
        .collect();
    let shape = (meta.shape[0], meta.shape[1], meta.shape[2]);
    Ok(CirTensor {
        taps: Array3::from_shape_vec(shape, taps).map_err(|e| format_err(path, e.to_string()))?,
        config,
    })
}

pub fn write_radio_frame(path: &Path, frame: &RadioFrame) -> Result<()> {
    let (a, b, c) = frame.values.dim();
    let mut meta = Sidecar::new("radio_frame", vec![a, b, c]);
    meta.spherical_grid = Some(frame.grid.clone());
    meta.pose = Some(frame.pose);
    write_raw(path, frame.values.iter().copied(), &meta)
}

pub fn read_radio_frame(path: &Path) -> Result<RadioFrame> {
    let (meta, v) = read_raw(path)?;
    expect_kind(path, &meta, "radio_frame", 3)?;
    let shape = (meta.shape[0], meta.shape[1], meta.shape[2]);
    Ok(RadioFrame {
        values: to_array3(path, shape, v)?,
        grid: meta.spherical_grid.ok_or_else(|| missing(path, "spherical_grid"))?,
        pose: meta.pose.ok_or_else(|| missing(path, "pose"))?,
    })
}

fn to_array3(path: &Path, shape: (usize, usize, usize), v: Vec<f32>) -> Result<Array3<f64>> {
    Array3::from_shape_vec(shape, v.into_iter().map(f64::from).collect()).map_err(|e| format_err(path, e.to_string()))
}

fn write_grid_volume(path: &Path, kind: &str, values: &Array3<f64>, grid: &GridSpec, pose: Option<Pose>) -> Result<()> {
    let mut meta = Sidecar::new(kind, grid.dims.to_vec());
    meta.grid = Some(*grid);
    meta.pose = pose;
    write_raw(path, values.iter().copied(), &meta)
}

fn read_grid_volume(path: &Path, kind: &str) -> Result<(Sidecar, Array3<f64>)> {
    let (meta, v) = read_raw(path)?;
    expect_kind(path, &meta, kind, 3)?;
    let grid = meta.grid.ok_or_else(|| missing(path, "grid"))?;
    if grid.dims.to_vec() != meta.shape {
        return Err(format_err(path, "grid dims disagree with shape"));
    }
    let values = to_array3(path, grid.shape(), v)?;
    Ok((meta, values))
}

pub fn write_cartesian(path: &Path, vol: &CartesianVolume, pose: Option<Pose>) -> Result<()> {
    write_grid_volume(path, "cartesian_volume", &vol.values, &vol.grid, pose)
}

pub fn read_cartesian(path: &Path) -> Result<CartesianVolume> {
    let (meta, values) = read_grid_volume(path, "cartesian_volume")?;
    Ok(CartesianVolume {
        values,
        grid: meta.grid.expect("checked"),
    })
}

pub fn write_voxels(path: &Path, v: &VoxelGrid) -> Result<()> {
    write_grid_volume(path, "voxel_grid", &v.values, &v.grid, None)
}

pub fn read_voxels(path: &Path) -> Result<VoxelGrid> {
    let (meta, values) = read_grid_volume(path, "voxel_grid")?;
    Ok(VoxelGrid {
        values,
        grid: meta.grid.expect("checked"),
    })
}

/// Feature volumes keep the Cartesian layout with the channel axis last.
pub fn write_features(path: &Path, f: &FeatureVolume) -> Result<()> {
    let (x, y, z, c) = f.values.dim();
    let mut meta = Sidecar::new("feature_volume", vec![x, y, z, c]);
    meta.channels = Some(c);
    meta.grid = Some(f.grid);
    meta.pose = Some(f.pose);
    write_raw(path, f.values.iter().copied(), &meta)
}

pub fn read_features(path: &Path) -> Result<FeatureVolume> {
    let (meta, v) = read_raw(path)?;
    expect_kind(path, &meta, "feature_volume", 4)?;
    let s = &meta.shape;
    let values = Array4::from_shape_vec((s[0], s[1], s[2], s[3]), v.into_iter().map(f64::from).collect())
        .map_err(|e| format_err(path, e.to_string()))?;
    Ok(FeatureVolume {
        values,
        grid: meta.grid.ok_or_else(|| missing(path, "grid"))?,
        pose: meta.pose.ok_or_else(|| missing(path, "pose"))?,
    })
}

pub fn write_depth(path: &Path, d: &DepthMap) -> Result<()> {
    let (h, w) = d.shape();
    let mut meta = Sidecar::new("depth_map", vec![h, w]);
    meta.fov = Some(d.fov);
    meta.max_range = Some(d.max_range);
    write_raw(path, d.values.iter().copied(), &meta)
}

pub fn read_depth(path: &Path) -> Result<DepthMap> {
    let (meta, v) = read_raw(path)?;
    expect_kind(path, &meta, "depth_map", 2)?;
    let values = Array2::from_shape_vec((meta.shape[0], meta.shape[1]), v.into_iter().map(f64::from).collect())
        .map_err(|e| format_err(path, e.to_string()))?;
    Ok(DepthMap {
        values,
        fov: meta.fov.ok_or_else(|| missing(path, "fov"))?,
        max_range: meta.max_range.ok_or_else(|| missing(path, "max_range"))?,
    })
}

/// Millimeter value stored for a depth pixel; invalid pixels become 0.
pub fn depth_to_mm(v: f64) -> u16 {
    if v == INVALID_DEPTH || !v.is_finite() || v <= 0.0 {
        0
    } else {
        (v * 1000.0).round().clamp(1.0, u16::MAX as f64) as u16
    }
}

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples).
pub fn depth_pgm16(d: &DepthMap) -> Vec<u8> {
    let (h, w) = d.shape();
    let mut out = format!("P5\n{w} {h}\n65535\n").into_bytes();
    for &v in d.values.iter() {
        out.extend_from_slice(&depth_to_mm(v).to_be_bytes());
    }
    out
}

pub fn write_depth_pgm(path: &Path, d: &DepthMap) -> Result<()> {
    write_bytes(path, &depth_pgm16(d))
}

/// Parses a P5 16-bit PGM into millimeter samples, row-major.
pub fn read_pgm16(path: &Path) -> Result<Array2<u16>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(path, "truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "65535" {
        return Err(format_err(path, "not a 16-bit P5 image"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| format_err(path, "bad dimension"));
    let (w, h) = (parse(&fields[1])?, parse(&fields[2])?);
    let data = bytes.get(pos..).unwrap_or(&[]);
    if data.len() != w * h * 2 {
        return Err(format_err(path, "pixel data length mismatch"));
    }
    let px: Vec<u16> = data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
    Array2::from_shape_vec((h, w), px).map_err(|e| format_err(path, e.to_string()))
}

/// One row per image row, meters, `-1` for no return.
pub fn depth_csv(d: &DepthMap) -> String {
    let mut out = String::new();
    for row in d.values.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn ascii_ply(points: &[Vector3<f64>]) -> String {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str(&format!("element vertex {}\n", points.len()));
    out.push_str("property float x\nproperty float y\nproperty float z\nend_header\n");
    for p in points {
        out.push_str(&format!("{:.6} {:.6} {:.6}\n", p.x, p.y, p.z));
    }
    out
}

pub fn write_ply(path: &Path, points: &[Vector3<f64>]) -> Result<()> {
    write_bytes(path, ascii_ply(points).as_bytes())
}
