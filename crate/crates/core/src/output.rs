//! Artifact writers. Every file records the scene's config hash.
//!
//! Density volumes are NRRD files (attached header, raw little-endian
//! `float`, x fastest), which ParaView, 3D Slicer and most volume tools open
//! directly. Field snapshots are canonical `KFLD` dumps with a JSON sidecar.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ib::SolidSampleSet;
use crate::lattice::Q;
use crate::layout::{save_canonical, Dims, FieldStore, LayoutParams};

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

/// Writes a scalar volume as NRRD with `step` and `config_hash` key/values.
pub fn write_volume(path: &Path, dims: Dims, data: &[f64], step: u64, config_hash: &str) -> Result<()> {
    assert_eq!(data.len(), dims.len(), "volume shape");
    let mut w = create(path)?;
    let mut body = Vec::with_capacity(data.len() * 4);
    for v in data {
        body.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    let header = format!(
        "NRRD0004\n# kinetic tracer density\ntype: float\ndimension: 3\nsizes: {} {} {}\nspacings: 1 1 1\nendian: little\nencoding: raw\nstep:={step}\nconfig_hash:={config_hash}\n\n",
        dims.nx, dims.ny, dims.nz
    );
    w.write_all(header.as_bytes())
        .and_then(|_| w.write_all(&body))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Volume read back by [`read_volume`].
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    pub dims: Dims,
    pub step: u64,
    pub config_hash: String,
    pub data: Vec<f32>,
}

pub fn read_volume(path: &Path) -> Result<Volume> {
    let bad = |reason: &str| Error::Format {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(f);
    let mut line = String::new();
    let (mut sizes, mut step, mut hash) = (None, None, None);
    loop {
        line.clear();
        if r.read_line(&mut line).map_err(|e| Error::io(path, e))? == 0 {
            return Err(bad("header not terminated"));
        }
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some(v) = l.strip_prefix("sizes: ") {
            let n: Vec<usize> = v.split_whitespace().filter_map(|s| s.parse().ok()).collect();
            if n.len() != 3 {
                return Err(bad("sizes"));
            }
            sizes = Some(Dims::new(n[0], n[1], n[2]));
        } else if let Some(v) = l.strip_prefix("step:=") {
            step = v.parse().ok();
        } else if let Some(v) = l.strip_prefix("config_hash:=") {
            hash = Some(v.to_string());
        }
    }
    let dims = sizes.ok_or_else(|| bad("missing sizes"))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    if bytes.len() != dims.len() * 4 {
        return Err(bad("payload length"));
    }
    Ok(Volume {
        dims,
        step: step.ok_or_else(|| bad("missing step"))?,
        config_hash: hash.ok_or_else(|| bad("missing config_hash"))?,
        data: bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect(),
    })
}

/// Sidecar of a field snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub step: u64,
    pub dims: [usize; 3],
    pub nu: f64,
    pub model: String,
    pub config_hash: String,
}

/// Writes `field_<step>.kfld` (canonical AoS distributions) and its `.json`
/// sidecar into `dir`. Returns both paths.
pub fn write_snapshot(dir: &Path, dims: Dims, aos: &[f64], meta: &SnapshotMeta) -> Result<[PathBuf; 2]> {
    let store = FieldStore::from_aos(LayoutParams::aos(Q, dims.len()), aos)?;
    let data = dir.join(format!("field_{:06}.kfld", meta.step));
    save_canonical(&data, dims, &store)?;
    let side = data.with_extension("json");
    let mut w = create(&side)?;
    serde_json::to_writer_pretty(&mut w, meta)
        .map_err(|e| Error::io(&side, e.into()))
        .and_then(|_| w.flush().map_err(|e| Error::io(&side, e)))?;
    Ok([data, side])
}

/// Sample positions and boundary velocities of one solid, headed by the
/// config hash.
pub fn write_samples(path: &Path, set: &SolidSampleSet, config_hash: &str) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# config_hash={config_hash}")
        .and_then(|_| set.write_samples(&mut w))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
