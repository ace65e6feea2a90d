//! Parameter checkpoints: a little-endian binary blob plus a JSON sidecar.
//!
//! Binary layout: magic `EAGLEMLP`, `u32` version, `u32` d_in, d_hidden,
//! d_out, then `f64` W1, b1, W2, b2 in row-major order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dense::{Head, MlpParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"EAGLEMLP";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub version: u32,
    pub d_in: usize,
    pub d_hidden: usize,
    pub d_out: usize,
    pub head: Head,
    pub seed: u64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

pub fn write_checkpoint(path: &Path, params: &MlpParams, head: Head, seed: u64) -> Result<()> {
    params.check_shapes()?;
    let mut buf = Vec::with_capacity(28 + 8 * params.num_params());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for d in [params.d_in, params.d_hidden, params.d_out] {
        let d = u32::try_from(d).map_err(|_| Error::Shape("dimension exceeds u32".into()))?;
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for t in params.tensors() {
        for v in t {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, &buf).map_err(|e| Error::io(path, e))?;
    let meta = CheckpointMeta {
        version: CHECKPOINT_VERSION,
        d_in: params.d_in,
        d_hidden: params.d_hidden,
        d_out: params.d_out,
        head,
        seed,
    };
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(&side, json).map_err(|e| Error::io(&side, e))
}

pub fn read_checkpoint(path: &Path) -> Result<(MlpParams, Option<CheckpointMeta>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Shape(format!("{}: {m}", path.display()));
    if bytes.len() < 24 || &bytes[..8] != MAGIC {
        return Err(bad("not a checkpoint"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap());
    if word(0) != CHECKPOINT_VERSION {
        return Err(bad(&format!("unsupported version {}", word(0))));
    }
    let (d_in, d_hidden, d_out) = (word(1) as usize, word(2) as usize, word(3) as usize);
    let mut p = MlpParams::zeros(d_in, d_hidden, d_out);
    if bytes.len() != 24 + 8 * p.num_params() {
        return Err(bad("truncated parameter data"));
    }
    let mut off = 24;
    for t in p.tensors_mut() {
        for v in t.iter_mut() {
            *v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            off += 8;
        }
    }
    let side = sidecar_path(path);
    let meta = match fs::read_to_string(&side) {
        Ok(s) => Some(
            serde_json::from_str(&s)
                .map_err(|e| Error::Config(format!("{}: {e}", side.display())))?,
        ),
        Err(_) => None,
    };
    Ok((p, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let p = MlpParams::init(5, 7, 2, 11);
        write_checkpoint(&path, &p, Head::Softmax, 11).unwrap();
        let (back, meta) = read_checkpoint(&path).unwrap();
        assert_eq!(back, p);
        let meta = meta.unwrap();
        assert_eq!(
            (meta.d_in, meta.d_hidden, meta.d_out, meta.seed),
            (5, 7, 2, 11)
        );
        assert_eq!(meta.head, Head::Softmax);
        let raw = fs::read(&path).unwrap();
        assert_eq!(&raw[..8], b"EAGLEMLP");
        assert_eq!(raw.len(), 24 + 8 * p.num_params());
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        fs::write(&path, b"hello world, not a model").unwrap();
        assert!(read_checkpoint(&path).is_err());
    }
}
