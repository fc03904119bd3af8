//! Binary checkpoint layout, all integers little-endian:
//!
//! ```text
//! b"CSUMCKPT" | u32 version | u32 len | config (key=value lines, UTF-8)
//! then per tensor until EOF:
//!   u32 name_len | name | u32 rank | u32 dims[rank] | f32 values[prod(dims)]
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use super::{Model, ModelConfig, ModelError};
use crate::nn::{ParamSet, Tensor, MAX_RANK};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CSUMCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

fn put_u32(w: &mut impl Write, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn len_u32(n: usize, what: &str) -> Result<u32, ModelError> {
    u32::try_from(n).map_err(|_| bad(format!("{what} too large")))
}

pub fn write_checkpoint(model: &Model<f32>, mut w: impl Write) -> Result<(), ModelError> {
    w.write_all(CHECKPOINT_MAGIC)?;
    put_u32(&mut w, CHECKPOINT_VERSION)?;
    let cfg = model.config().to_kv();
    put_u32(&mut w, len_u32(cfg.len(), "config block")?)?;
    w.write_all(cfg.as_bytes())?;
    for (name, p) in model.params().iter() {
        put_u32(&mut w, len_u32(name.len(), "tensor name")?)?;
        w.write_all(name.as_bytes())?;
        put_u32(&mut w, p.value.rank() as u32)?;
        for &d in p.value.shape() {
            put_u32(&mut w, len_u32(d, "dimension")?)?;
        }
        let mut buf = Vec::with_capacity(p.value.len() * 4);
        for v in p.value.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ModelError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| bad(format!("truncated while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn at_end(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

pub fn read_checkpoint(mut r: impl Read) -> Result<Model<f32>, ModelError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut c = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if c.take(8, "magic")? != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint file (bad magic)"));
    }
    let version = c.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let cfg_len = c.u32("config length")? as usize;
    let cfg_text = std::str::from_utf8(c.take(cfg_len, "config block")?)
        .map_err(|_| bad("config block is not UTF-8"))?;
    let config = ModelConfig::from_kv(cfg_text)?;

    let mut params = ParamSet::new();
    while !c.at_end() {
        let name_len = c.u32("tensor name length")? as usize;
        let name = std::str::from_utf8(c.take(name_len, "tensor name")?)
            .map_err(|_| bad("tensor name is not UTF-8"))?
            .to_string();
        let rank = c.u32("rank")? as usize;
        if !(1..=MAX_RANK).contains(&rank) {
            return Err(bad(format!("tensor `{name}` has unsupported rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(c.u32("dimension")? as usize);
        }
        let count = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| bad(format!("tensor `{name}` is too large")))?;
        let raw = c.take(
            count
                .checked_mul(4)
                .ok_or_else(|| bad("tensor too large"))?,
            &name,
        )?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        params.insert(&name, Tensor::from_vec(&shape, data)?)?;
    }
    Model::from_params(config, params)
}

/// Writes to a temporary sibling and renames it into place.
pub fn save_checkpoint(model: &Model<f32>, path: &Path) -> Result<(), ModelError> {
    let tmp = path.with_extension("tmp");
    {
        let f = io::BufWriter::new(fs::File::create(&tmp)?);
        write_checkpoint(model, f)?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Model<f32>, ModelError> {
    read_checkpoint(io::BufReader::new(fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;

    fn tiny() -> Model<f32> {
        let mut c = ModelConfig::new(ModelKind::AstAttendGru, 7, 6, 5);
        (c.txtlen, c.astlen, c.comlen, c.embdims, c.rnndims) = (4, 3, 3, 2, 3);
        Model::init(c, 11).unwrap()
    }

    fn bytes(m: &Model<f32>) -> Vec<u8> {
        let mut out = Vec::new();
        write_checkpoint(m, &mut out).unwrap();
        out
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = tiny();
        let b = bytes(&m);
        let back = read_checkpoint(&b[..]).unwrap();
        assert_eq!(back.config(), m.config());
        for ((n1, p1), (n2, p2)) in m.params().iter().zip(back.params().iter()) {
            assert_eq!(n1, n2);
            assert_eq!(p1.value, p2.value);
        }
        assert_eq!(bytes(&back), b);
    }

    #[test]
    fn header_layout() {
        let b = bytes(&tiny());
        assert_eq!(&b[..8], b"CSUMCKPT");
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 1);
        let len = u32::from_le_bytes(b[12..16].try_into().unwrap()) as usize;
        let cfg = std::str::from_utf8(&b[16..16 + len]).unwrap();
        assert!(cfg.starts_with("kind=ast-attendgru\n"));
        // First record is the alphabetically first parameter.
        let name_len = u32::from_le_bytes(b[16 + len..20 + len].try_into().unwrap()) as usize;
        assert_eq!(&b[20 + len..20 + len + name_len], b"ast_embedding.table");
    }

    #[test]
    fn rejects_unknown_version() {
        let mut b = bytes(&tiny());
        b[8..12].copy_from_slice(&2u32.to_le_bytes());
        let err = read_checkpoint(&b[..]).unwrap_err();
        assert!(err.to_string().contains("version 2"), "{err}");
    }

    #[test]
    fn rejects_shape_mismatch() {
        let m = tiny();
        let mut b = bytes(&m);
        // Claim a larger comment vocabulary than the stored tensors have.
        let len = u32::from_le_bytes(b[12..16].try_into().unwrap()) as usize;
        let cfg = String::from_utf8(b[16..16 + len].to_vec())
            .unwrap()
            .replace("comvocabsize=5", "comvocabsize=9");
        b.splice(16..16 + len, cfg.bytes());
        let err = read_checkpoint(&b[..]).unwrap_err();
        assert!(err.to_string().contains("shape"), "{err}");
    }

    #[test]
    fn rejects_truncation_and_bad_magic() {
        let b = bytes(&tiny());
        assert!(read_checkpoint(&b[..b.len() - 1]).is_err());
        let mut bad_magic = b.clone();
        bad_magic[0] = b'X';
        assert!(read_checkpoint(&bad_magic[..]).is_err());
    }
}
