//! Model checkpoints: a versioned little-endian binary with the flat
//! parameters and a JSON sidecar with shape, encoding and provenance.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::inputs::InputEncoding;
use super::shape::{ParamLayout, RnnModel, RnnShape};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "sicnet-rnn-v1";
const MAGIC: &[u8; 8] = b"SICNETRN";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub format: String,
    pub shape: RnnShape,
    pub encoding: InputEncoding,
    pub segment: usize,
    pub parameters: usize,
    /// Free-form training record (seed, iterations, warm start, ...).
    #[serde(default)]
    pub provenance: serde_json::Value,
}

pub fn save_model(model: &RnnModel, stem: &Path, provenance: serde_json::Value) -> Result<(PathBuf, PathBuf)> {
    let mut buf = Vec::with_capacity(20 + 8 * model.params.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(model.params.len() as u64).to_le_bytes());
    for p in &model.params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    let sidecar = ModelSidecar {
        format: MODEL_FORMAT.into(),
        shape: model.shape.clone(),
        encoding: model.encoding.clone(),
        segment: model.segment,
        parameters: model.params.len(),
        provenance,
    };
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    fs::write(&bin, buf)?;
    fs::write(&json, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok((bin, json))
}

pub fn load_model(stem: &Path) -> Result<(RnnModel, ModelSidecar)> {
    let json = stem.with_extension("json");
    let bin = stem.with_extension("bin");
    if !json.exists() || !bin.exists() {
        return Err(Error::Missing(format!("model checkpoint {}", stem.display())));
    }
    let sidecar: ModelSidecar = serde_json::from_str(&fs::read_to_string(json)?)?;
    if sidecar.format != MODEL_FORMAT {
        return Err(Error::Serde(format!("unsupported model format `{}`", sidecar.format)));
    }
    let bytes = fs::read(bin)?;
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(Error::Serde("not a model checkpoint".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Serde(format!("unsupported model version {version}")));
    }
    let count = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let expected = ParamLayout::new(&sidecar.shape).total;
    if count != expected || count != sidecar.parameters || bytes.len() != 20 + 8 * count {
        return Err(Error::Shape(format!(
            "checkpoint holds {count} parameters, the shape needs {expected}"
        )));
    }
    let params: Vec<f64> = bytes[20..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Numeric("checkpoint contains non-finite parameters".into()));
    }
    let mut model = RnnModel::zeros(sidecar.shape.clone(), sidecar.encoding.clone())?;
    model.params = params;
    model.segment = sidecar.segment;
    Ok((model, sidecar))
}
