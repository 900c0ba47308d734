//! Weight checkpoint serialization.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "PCNW"
//! 4       2     format version (currently 1)
//! 6       1     activation code
//! 7       1     reserved, zero
//! 8       4     layer-size count (network depth + 1)
//! 12      4*n   layer sizes, from layer 0 upward
//! ...     8*... weights as row-major f64, layer 0 upward
//! ```

use std::fs;
use std::path::Path;

use super::PcNetwork;
use crate::numerics::{Activation, Matrix};
use crate::{PcnError, Result};

const MAGIC: &[u8; 4] = b"PCNW";
const FORMAT_VERSION: u16 = 1;

impl PcNetwork {
    /// Serialize the weights to `path` in the checkpoint format above.
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_checkpoint_bytes())?;
        Ok(())
    }

    /// Load a checkpoint written by [`PcNetwork::save`].
    pub fn load(path: &Path) -> Result<PcNetwork> {
        PcNetwork::from_checkpoint_bytes(&fs::read(path)?)
    }

    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let payload: usize = self.weights.iter().map(|w| w.as_slice().len() * 8).sum();
        let mut out = Vec::with_capacity(12 + 4 * self.dims.len() + payload);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.activation.code());
        out.push(0);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for w in &self.weights {
            for v in w.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<PcNetwork> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(PcnError::Format { offset: 0, what: format!("bad magic {magic:02x?}") });
        }
        let version = u16::from_le_bytes(r.take(2, "version")?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(PcnError::Format {
                offset: 4,
                what: format!("unsupported checkpoint version {version}"),
            });
        }
        let act_offset = r.pos as u64;
        let act_code = r.take(1, "activation")?[0];
        let activation = Activation::from_code(act_code).ok_or(PcnError::Format {
            offset: act_offset,
            what: format!("unknown activation code {act_code}"),
        })?;
        r.take(1, "reserved")?;
        let dims_offset = r.pos as u64;
        let n_dims = u32::from_le_bytes(r.take(4, "layer count")?.try_into().unwrap()) as usize;
        if n_dims < 2 {
            return Err(PcnError::Format {
                offset: dims_offset,
                what: format!("layer count {n_dims} is below 2"),
            });
        }
        let mut dims = Vec::with_capacity(n_dims);
        for _ in 0..n_dims {
            let off = r.pos as u64;
            let d = u32::from_le_bytes(r.take(4, "layer size")?.try_into().unwrap()) as usize;
            if d == 0 {
                return Err(PcnError::Format { offset: off, what: "zero layer size".into() });
            }
            dims.push(d);
        }
        let mut weights = Vec::with_capacity(n_dims - 1);
        for l in 0..n_dims - 1 {
            let (rows, cols) = (dims[l], dims[l + 1]);
            let off = r.pos as u64;
            let raw = r.take(rows * cols * 8, "weight payload")?;
            let mut data = Vec::with_capacity(rows * cols);
            for chunk in raw.chunks_exact(8) {
                data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
            }
            let w = Matrix::from_vec(rows, cols, data).map_err(|e| PcnError::Format {
                offset: off,
                what: format!("weight {l}: {e}"),
            })?;
            weights.push(w);
        }
        if r.pos != bytes.len() {
            return Err(PcnError::Format {
                offset: r.pos as u64,
                what: format!("{} trailing bytes after weights", bytes.len() - r.pos),
            });
        }
        PcNetwork::from_weights(weights, activation)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(PcnError::Format {
                offset: self.bytes.len() as u64,
                what: format!("truncated while reading {what} ({n} bytes at {})", self.pos),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}
