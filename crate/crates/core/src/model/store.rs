//! Checkpoint files: one JSON header line followed by the parameter vector
//! as little-endian `f64`s. A run directory holds one file per checkpoint
//! plus `manifest.json` listing them in order.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Arch, Checkpoint, ModelParams, ModelSpec};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    arch: Arch,
    #[serde(rename = "C")]
    num_classes: usize,
    #[serde(rename = "D")]
    dim: usize,
    l2_reg: f64,
    t: usize,
    eta_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub t: usize,
    pub eta_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub checkpoints: Vec<ManifestEntry>,
}

fn encode(params: &ModelParams, t: usize, eta: f64) -> Vec<u8> {
    let header = Header {
        arch: params.spec.arch,
        num_classes: params.spec.num_classes,
        dim: params.spec.dim,
        l2_reg: params.spec.l2_reg,
        t,
        eta_t: eta,
    };
    let mut buf = serde_json::to_vec(&header).expect("header serializes");
    buf.push(b'\n');
    buf.reserve(params.theta.len() * 8);
    for x in &params.theta {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf
}

fn decode(bytes: &[u8]) -> Result<(ModelParams, usize, f64)> {
    let bad = |m: String| Error::Format {
        what: "checkpoint",
        message: m,
    };
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing header line".into()))?;
    let header: Header = serde_json::from_slice(&bytes[..nl]).map_err(|e| bad(e.to_string()))?;
    let spec = ModelSpec::new(header.arch, header.num_classes, header.dim, header.l2_reg)?;
    let body = &bytes[nl + 1..];
    if body.len() != spec.param_count() * 8 {
        return Err(bad(format!(
            "expected {} parameters, found {} bytes",
            spec.param_count(),
            body.len()
        )));
    }
    let theta = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((ModelParams::from_theta(spec, theta)?, header.t, header.eta_t))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn save_params(path: impl AsRef<Path>, params: &ModelParams, t: usize, eta: f64) -> Result<()> {
    write(path.as_ref(), &encode(params, t, eta))
}

/// Returns the parameters with the step and learning rate from the header.
pub fn load_params(path: impl AsRef<Path>) -> Result<(ModelParams, usize, f64)> {
    let path = path.as_ref();
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn save_checkpoints(dir: impl AsRef<Path>, checkpoints: &[Checkpoint]) -> Result<CheckpointManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = CheckpointManifest {
        checkpoints: Vec::with_capacity(checkpoints.len()),
    };
    for ck in checkpoints {
        let file = format!("ckpt-{:05}.bin", ck.step);
        save_params(dir.join(&file), &ck.params, ck.step, ck.eta)?;
        manifest.checkpoints.push(ManifestEntry {
            file,
            t: ck.step,
            eta_t: ck.eta,
        });
    }
    let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    json.push(b'\n');
    write(&dir.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}

pub fn load_checkpoints(dir: impl AsRef<Path>) -> Result<Vec<Checkpoint>> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: CheckpointManifest = serde_json::from_slice(&text).map_err(|e| Error::Format {
        what: "checkpoint manifest",
        message: e.to_string(),
    })?;
    let mut out: Vec<Checkpoint> = Vec::with_capacity(manifest.checkpoints.len());
    for entry in manifest.checkpoints {
        let (params, t, eta) = load_params(dir.join(&entry.file))?;
        if out.last().is_some_and(|prev| prev.step >= t) {
            return Err(Error::Format {
                what: "checkpoint manifest",
                message: "checkpoints are not strictly increasing in t".into(),
            });
        }
        out.push(Checkpoint { step: t, eta, params });
    }
    Ok(out)
}
