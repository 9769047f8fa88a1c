//! The `.mg` layered-network archive.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "MODGRAPH"
//! 8       4     version, u32 little-endian (= 1)
//! 12      4     header length H, u32 little-endian
//! 16      H     UTF-8 JSON {"layer_dims": [...], "has_biases": bool}
//! 16+H    ...   weights[0..L], each row-major little-endian f32
//!         ...   biases[0..L] (only if has_biases), little-endian f32
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::LayeredNetwork;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"MODGRAPH";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    layer_dims: Vec<usize>,
    has_biases: bool,
}

pub fn save_archive(net: &LayeredNetwork, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(net)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    file.flush().map_err(|e| Error::io(path, e))
}

pub fn load_archive(path: impl AsRef<Path>) -> Result<LayeredNetwork> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn encode(net: &LayeredNetwork) -> Result<Vec<u8>> {
    net.validate()?;
    let header = serde_json::to_vec(&Header {
        layer_dims: net.layer_dims().to_vec(),
        has_biases: net.biases().is_some(),
    })?;
    let payload: usize = net.num_weights()
        + net
            .biases()
            .map_or(0, |b| b.iter().map(|v| v.len()).sum::<usize>());
    let mut out = Vec::with_capacity(16 + header.len() + 4 * payload);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for w in net.weights() {
        // `iter()` walks logical row-major order whatever the memory layout.
        for v in w.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    if let Some(biases) = net.biases() {
        for b in biases {
            for v in b.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.pos as u64,
                message: format!(
                    "truncated {what}: need {n} bytes, {} remain",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::Format {
            offset: self.pos as u64,
            message: format!("{what} is too large"),
        })?, what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<LayeredNetwork> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(8, "magic")? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "bad magic, expected \"MODGRAPH\"".into(),
        });
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(Error::Format {
            offset: 8,
            message: format!("unsupported version {version}"),
        });
    }
    let header_len = cur.u32("header length")? as usize;
    let header_offset = cur.pos as u64;
    let header: Header =
        serde_json::from_slice(cur.take(header_len, "header")?).map_err(|e| Error::Format {
            offset: header_offset,
            message: format!("malformed JSON header: {e}"),
        })?;
    let dims = &header.layer_dims;
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::Format {
            offset: header_offset,
            message: format!("invalid layer_dims {dims:?}"),
        });
    }

    let mut weights = Vec::with_capacity(dims.len() - 1);
    for (l, pair) in dims.windows(2).enumerate() {
        let values = cur.f32s(pair[0] * pair[1], &format!("weights of layer {l}"))?;
        weights.push(Array2::from_shape_vec((pair[0], pair[1]), values).unwrap());
    }
    let biases = if header.has_biases {
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for (l, &d) in dims[1..].iter().enumerate() {
            biases.push(Array1::from(cur.f32s(d, &format!("bias of layer {l}"))?));
        }
        Some(biases)
    } else {
        None
    };
    if cur.pos != bytes.len() {
        return Err(Error::Format {
            offset: cur.pos as u64,
            message: format!("{} trailing bytes", bytes.len() - cur.pos),
        });
    }
    LayeredNetwork::new(weights, biases)
}
