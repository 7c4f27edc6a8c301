//! On-disk formats: net directories, mollifier and embedding metadata.
//!
//! A net directory holds `meta.json` and one `frame_KKK.bin` per ladder
//! entry. Frames are row-major little-endian `(re, im)` pairs in the
//! precision named by `meta.json`'s `dtype` (`complex64` = two `f32`,
//! `complex128` = two `f64`).

use std::fs;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{DistributionSpec, Embedding, EmbeddingResult};
use crate::grid::{EpsilonNet, GridBox, GridError, GridFunction, Ladder, Side};
use crate::mollifier::{Mollifier, MollifierParams, MollifierValidation};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs { path: path.display().to_string(), source }
}

/// Sample precision of a frame file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    Complex64,
    Complex128,
}

impl Dtype {
    pub fn of<T: Real>() -> Self {
        if std::mem::size_of::<T>() == 4 {
            Self::Complex64
        } else {
            Self::Complex128
        }
    }

    fn component_bytes(self) -> usize {
        match self {
            Self::Complex64 => 4,
            Self::Complex128 => 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetMeta {
    #[serde(rename = "box")]
    pub grid: GridBox,
    pub ladder: Ladder,
    pub side: Side,
    /// The space box a frequency-side net was transformed from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space_box: Option<GridBox>,
    pub dtype: Dtype,
    pub frames: Vec<String>,
}

pub fn frame_name(k: usize) -> String {
    format!("frame_{k:03}.bin")
}

pub fn encode_frame<T: Real>(g: &GridFunction<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(g.samples.len() * 2 * std::mem::size_of::<T>());
    for v in &g.samples {
        for c in [v.re, v.im] {
            match Dtype::of::<T>() {
                Dtype::Complex64 => out.extend_from_slice(&(c.f64() as f32).to_le_bytes()),
                Dtype::Complex128 => out.extend_from_slice(&c.f64().to_le_bytes()),
            }
        }
    }
    out
}

pub fn decode_frame<T: Real>(bytes: &[u8], grid: &GridBox, dtype: Dtype) -> Result<GridFunction<T>, IoError> {
    let w = dtype.component_bytes();
    if bytes.len() != grid.len() * 2 * w {
        return Err(IoError::Format(format!("frame holds {} bytes, box needs {}", bytes.len(), grid.len() * 2 * w)));
    }
    let read = |c: &[u8]| -> f64 {
        match dtype {
            Dtype::Complex64 => f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64,
            Dtype::Complex128 => f64::from_le_bytes(c.try_into().expect("8 bytes")),
        }
    };
    let samples = bytes
        .chunks_exact(2 * w)
        .map(|p| Complex::new(T::of(read(&p[..w])), T::of(read(&p[w..]))))
        .collect();
    Ok(GridFunction::new(grid.clone(), samples)?)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json { path: path.display().to_string(), source })?;
    fs::write(path, text + "\n").map_err(fs_err(path))
}

pub fn read_json<V: for<'de> Deserialize<'de>>(path: &Path) -> Result<V, IoError> {
    let text = fs::read_to_string(path).map_err(fs_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.display().to_string(), source })
}

pub fn write_net<T: Real>(net: &EpsilonNet<T>, dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(fs_err(dir))?;
    let frames: Vec<String> = (0..net.frames.len()).map(frame_name).collect();
    for (name, f) in frames.iter().zip(&net.frames) {
        let path = dir.join(name);
        fs::write(&path, encode_frame(f)).map_err(fs_err(&path))?;
    }
    let meta = NetMeta {
        grid: net.grid.clone(),
        ladder: net.ladder.clone(),
        side: net.side,
        space_box: net.space_grid.clone(),
        dtype: Dtype::of::<T>(),
        frames,
    };
    write_json(&dir.join("meta.json"), &meta)
}

/// Reads a net directory, converting samples to `T` if the stored
/// precision differs.
pub fn read_net<T: Real>(dir: &Path) -> Result<EpsilonNet<T>, IoError> {
    let meta: NetMeta = read_json(&dir.join("meta.json"))?;
    meta.grid.validate()?;
    if meta.frames.len() != meta.ladder.len() {
        return Err(IoError::Format(format!("{} frames for a ladder of {}", meta.frames.len(), meta.ladder.len())));
    }
    let frames = meta
        .frames
        .iter()
        .map(|name| {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(fs_err(&path))?;
            decode_frame(&bytes, &meta.grid, meta.dtype)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut net = EpsilonNet::new(meta.grid, Ladder::new(meta.ladder.0)?, frames, meta.side)?;
    net.space_grid = meta.space_box;
    Ok(net)
}

/// Contents of `mollifier.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierRecord {
    pub params: MollifierParams,
    pub validated_moment_order: usize,
    pub validation: MollifierValidation,
    pub digest: String,
    pub rho_frame: String,
    pub psi_frame: String,
}

/// Writes `mollifier.json` plus `rho.bin` (on the reference box) and
/// `psi.bin` (on its frequency box), both `complex128`.
pub fn write_mollifier(m: &Mollifier, dir: &Path) -> Result<MollifierRecord, IoError> {
    fs::create_dir_all(dir).map_err(fs_err(dir))?;
    let record = MollifierRecord {
        params: m.params.clone(),
        validated_moment_order: m.validated_moment_order,
        validation: m.validation.clone(),
        digest: m.digest(),
        rho_frame: "rho.bin".into(),
        psi_frame: "psi.bin".into(),
    };
    for (name, g) in [(&record.rho_frame, &m.rho), (&record.psi_frame, &m.psi)] {
        let path = dir.join(name);
        fs::write(&path, encode_frame(g)).map_err(fs_err(&path))?;
    }
    write_json(&dir.join("mollifier.json"), &record)?;
    Ok(record)
}

/// Rebuilds the mollifier from `mollifier.json` and checks that the
/// rebuilt one has the recorded digest.
pub fn read_mollifier(dir: &Path) -> Result<Mollifier, IoError> {
    let record: MollifierRecord = read_json(&dir.join("mollifier.json"))?;
    let m = Mollifier::build(record.params).map_err(|e| IoError::Format(e.to_string()))?;
    if m.digest() != record.digest {
        return Err(IoError::Format(format!("mollifier digest mismatch: stored {}, rebuilt {}", record.digest, m.digest())));
    }
    Ok(m)
}

/// Contents of `embedding.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub embedding: Embedding,
    pub source: Option<DistributionSpec>,
    pub mollifier_digest: Option<String>,
}

/// An embedding result as a net directory with `embedding.json`.
pub fn write_embedding<T: Real>(result: &EmbeddingResult<T>, mollifier_digest: Option<String>, dir: &Path) -> Result<(), IoError> {
    write_net(&result.net, dir)?;
    let record = EmbeddingRecord { embedding: result.which, source: result.source.clone(), mollifier_digest };
    write_json(&dir.join("embedding.json"), &record)
}

pub fn read_embedding<T: Real>(dir: &Path) -> Result<(EmbeddingResult<T>, EmbeddingRecord), IoError> {
    let net = read_net(dir)?;
    let record: EmbeddingRecord = read_json(&dir.join("embedding.json"))?;
    Ok((EmbeddingResult { net, which: record.embedding, source: record.source.clone() }, record))
}

/// Pretty JSON with a trailing newline.
pub fn save_json(path: &Path, value: &impl Serialize) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(fs_err(parent))?;
    }
    write_json(path, value)
}

pub fn save_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(fs_err(parent))?;
    }
    fs::write(path, text).map_err(fs_err(path))
}
