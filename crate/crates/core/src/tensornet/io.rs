//! Model files: an 8-byte magic, a little-endian u64 manifest length, a JSON manifest,
//! then every tensor as little-endian f64 in [`ModelSpec::tensor_layout`] order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::ModelSpec;
use super::weights::ModelWeights;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"VOXATTR\x01";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset into the blob.
    offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    spec: ModelSpec,
    tensors: Vec<TensorEntry>,
    blob_bytes: usize,
}

pub fn model_to_bytes<T: Scalar>(spec: &ModelSpec, weights: &ModelWeights<T>) -> Result<Vec<u8>> {
    let layout = spec.tensor_layout()?;
    if weights.layout() != layout.as_slice() {
        return Err(Error::Shape("weights do not match the model spec".into()));
    }
    let mut offset = 0;
    let tensors = layout
        .iter()
        .map(|info| {
            let e = TensorEntry {
                name: info.name.clone(),
                shape: info.dims.clone(),
                offset,
            };
            offset += info.len() * 8;
            e
        })
        .collect();
    let manifest = Manifest {
        version: FORMAT_VERSION,
        spec: spec.clone(),
        tensors,
        blob_bytes: offset,
    };
    let json = serde_json::to_vec(&manifest).expect("manifest serializes");
    let mut out = Vec::with_capacity(16 + json.len() + offset);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in weights.tensors().iter().flatten() {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    Ok(out)
}

pub fn model_from_bytes<T: Scalar>(bytes: &[u8]) -> Result<(ModelSpec, ModelWeights<T>)> {
    let bad = |m: String| Error::ModelFormat(m);
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("bad magic bytes".into()));
    }
    let mlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    if bytes.len() < 16 + mlen {
        return Err(bad("truncated manifest".into()));
    }
    let manifest: Manifest = serde_json::from_slice(&bytes[16..16 + mlen])
        .map_err(|e| bad(format!("manifest: {e}")))?;
    if manifest.version != FORMAT_VERSION {
        return Err(bad(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            manifest.version
        )));
    }
    let blob = &bytes[16 + mlen..];
    if blob.len() != manifest.blob_bytes {
        return Err(bad(format!(
            "blob is {} bytes, manifest declares {}",
            blob.len(),
            manifest.blob_bytes
        )));
    }
    let layout = manifest.spec.tensor_layout()?;
    if layout.len() != manifest.tensors.len() {
        return Err(Error::Shape(format!(
            "manifest lists {} tensors, spec needs {}",
            manifest.tensors.len(),
            layout.len()
        )));
    }
    let mut tensors = Vec::with_capacity(layout.len());
    let mut expected_offset = 0;
    for (info, entry) in layout.iter().zip(&manifest.tensors) {
        if info.name != entry.name || info.dims != entry.shape {
            return Err(Error::Shape(format!(
                "tensor {} {:?} does not match spec tensor {} {:?}",
                entry.name, entry.shape, info.name, info.dims
            )));
        }
        if entry.offset != expected_offset {
            return Err(bad(format!("tensor {} has offset {}, expected {expected_offset}", entry.name, entry.offset)));
        }
        let end = entry.offset + info.len() * 8;
        if end > blob.len() {
            return Err(bad(format!("tensor {} runs past the blob", entry.name)));
        }
        tensors.push(
            blob[entry.offset..end]
                .chunks_exact(8)
                .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
                .collect(),
        );
        expected_offset = end;
    }
    if expected_offset != blob.len() {
        return Err(bad("blob has trailing bytes".into()));
    }
    let weights = ModelWeights::new(&manifest.spec, tensors)?;
    Ok((manifest.spec, weights))
}

pub fn save_model<T: Scalar>(spec: &ModelSpec, weights: &ModelWeights<T>, path: &Path) -> Result<()> {
    let bytes = model_to_bytes(spec, weights)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<(ModelSpec, ModelWeights<T>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}
