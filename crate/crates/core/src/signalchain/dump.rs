//! Block dumps: raw little-endian `f64` arrays plus a JSON sidecar.
//!
//! The `.bin` file holds the `n` transmitted levels followed by the
//! composite-real observations. The sidecar records the layout, the seed and
//! the full channel configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::channel::Block;
use super::config::ChannelConfig;
use super::Alphabet;
use crate::error::{Error, Result};

pub const BLOCK_FORMAT: &str = "sicnet-block-v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSidecar {
    pub format: String,
    pub symbols: usize,
    pub samples: usize,
    pub dims: usize,
    pub x_offset_bytes: usize,
    pub y_offset_bytes: usize,
    pub seed: u64,
    pub channel: ChannelConfig,
}

fn push_f64s(buf: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Writes `<stem>.bin` and `<stem>.json`; returns both paths.
pub fn write_block(stem: &Path, block: &Block, channel: &ChannelConfig) -> Result<(PathBuf, PathBuf)> {
    let alphabet = Alphabet::new(channel.alphabet, channel.order)?;
    let mut buf = Vec::with_capacity(8 * (block.x.len() + block.y.len()));
    push_f64s(&mut buf, block.x.iter().map(|&i| alphabet.level(i)));
    push_f64s(&mut buf, block.y.iter().copied());
    let sidecar = BlockSidecar {
        format: BLOCK_FORMAT.into(),
        symbols: block.x.len(),
        samples: block.samples(),
        dims: block.dims,
        x_offset_bytes: 0,
        y_offset_bytes: 8 * block.x.len(),
        seed: block.seed,
        channel: channel.clone(),
    };
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    fs::write(&bin, buf)?;
    fs::write(&json, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok((bin, json))
}

pub fn read_block(stem: &Path) -> Result<(Block, BlockSidecar)> {
    let sidecar: BlockSidecar = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
    if sidecar.format != BLOCK_FORMAT {
        return Err(Error::Serde(format!("unsupported block format `{}`", sidecar.format)));
    }
    let bytes = fs::read(stem.with_extension("bin"))?;
    let expected = 8 * (sidecar.symbols + sidecar.samples * sidecar.dims);
    if bytes.len() != expected {
        return Err(Error::Shape(format!(
            "block dump has {} bytes, sidecar implies {expected}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let alphabet = Alphabet::new(sidecar.channel.alphabet, sidecar.channel.order)?;
    let x = values[..sidecar.symbols]
        .iter()
        .map(|&v| {
            alphabet
                .index_of(v)
                .ok_or_else(|| Error::Serde(format!("level {v} is not in the alphabet")))
        })
        .collect::<Result<Vec<_>>>()?;
    let block = Block {
        x,
        y: values[sidecar.symbols..].to_vec(),
        dims: sidecar.dims,
        seed: sidecar.seed,
    };
    Ok((block, sidecar))
}
