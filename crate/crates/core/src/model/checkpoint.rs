//! Binary checkpoint container.
//!
//! ```text
//! magic    8 bytes  "RSQCKPT\0"
//! version  u32
//! config   arch u8 | d_text u64 | hidden u64 | dropout f64 | flags u8 | pooling u8 | init_seed u64
//! count    u32
//! arrays   name_len u16 | name | ndim u8 | dims u32* | data f64*
//! crc32    u32 over every preceding byte
//! ```
//!
//! All integers and floats are little-endian. Adam moments are not stored.

use std::io::Write;
use std::path::Path;

use crate::numeric::{DenseArray, ParameterSet};

use super::{check_params, Architecture, ModelConfig, ModelError, Pooling};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"RSQCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_checkpoint(params: &ParameterSet, config: &ModelConfig) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(config.architecture.code());
    out.extend_from_slice(&(config.d_text as u64).to_le_bytes());
    out.extend_from_slice(&(config.hidden_size as u64).to_le_bytes());
    out.extend_from_slice(&config.dropout_rate.to_le_bytes());
    let flags = u8::from(config.use_decay) | u8::from(config.use_emotion) << 1 | u8::from(config.use_attention) << 2;
    out.push(flags);
    out.push(match config.pooling {
        Pooling::Mean => 0,
        Pooling::Last => 1,
    });
    out.extend_from_slice(&config.init_seed.to_le_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, array) in params.iter() {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(array.ndim() as u8);
        for &d in array.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in array.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| ModelError::Integrity(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], ModelError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, ModelError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ModelError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ParameterSet, ModelConfig), ModelError> {
    if bytes.len() < CHECKPOINT_MAGIC.len() + 4 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(ModelError::Integrity("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("length checked"));
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::Incompatible(format!(
            "checkpoint version {version}, this build reads {CHECKPOINT_VERSION}"
        )));
    }
    if bytes.len() < 16 {
        return Err(ModelError::Integrity("truncated checkpoint".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(ModelError::Integrity("checksum mismatch".into()));
    }

    let mut r = Reader { bytes: body, pos: 12 };
    let code = r.u8()?;
    let architecture = Architecture::from_code(code)
        .ok_or_else(|| ModelError::Incompatible(format!("unknown architecture code {code}")))?;
    let d_text = r.u64()? as usize;
    let hidden_size = r.u64()? as usize;
    let dropout_rate = r.f64()?;
    let flags = r.u8()?;
    let pooling = match r.u8()? {
        0 => Pooling::Mean,
        1 => Pooling::Last,
        other => return Err(ModelError::Integrity(format!("unknown pooling code {other}"))),
    };
    let init_seed = r.u64()?;
    let config = ModelConfig {
        architecture,
        d_text,
        hidden_size,
        dropout_rate,
        use_decay: flags & 1 != 0,
        use_emotion: flags & 2 != 0,
        use_attention: flags & 4 != 0,
        pooling,
        init_seed,
    };
    config
        .validate()
        .map_err(|e| ModelError::Integrity(format!("stored config invalid: {e}")))?;

    let count = r.u32()?;
    let mut params = ParameterSet::new();
    for _ in 0..count {
        let name_len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| ModelError::Integrity("parameter name is not UTF-8".into()))?
            .to_owned();
        let ndim = r.u8()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()? as usize);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&n| n.checked_mul(8).is_some_and(|b| b <= body.len() - r.pos))
            .ok_or_else(|| ModelError::Integrity(format!("array `{name}` exceeds file size")))?;
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(r.f64()?);
        }
        if params.contains(&name) {
            return Err(ModelError::Integrity(format!("duplicate array `{name}`")));
        }
        params.insert(name, DenseArray::new(shape, data)?);
    }
    if r.pos != body.len() {
        return Err(ModelError::Integrity("trailing bytes after arrays".into()));
    }
    check_params(&config, &params).map_err(|e| ModelError::Integrity(e.to_string()))?;
    Ok((params, config))
}

/// Writes atomically through a temporary file in the destination directory.
pub fn save_checkpoint(params: &ParameterSet, config: &ModelConfig, path: &Path) -> Result<(), ModelError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&encode_checkpoint(params, config))?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| ModelError::Io(e.error))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(ParameterSet, ModelConfig), ModelError> {
    decode_checkpoint(&std::fs::read(path)?)
}

/// Loads a checkpoint and requires it to match `expected` in architecture and dimensions.
pub fn load_checkpoint_for(path: &Path, expected: &ModelConfig) -> Result<(ParameterSet, ModelConfig), ModelError> {
    let (params, config) = load_checkpoint(path)?;
    if config.architecture != expected.architecture
        || config.d_text != expected.d_text
        || config.hidden_size != expected.hidden_size
    {
        return Err(ModelError::Incompatible(format!(
            "checkpoint holds {} (d_text {}, h {}), expected {} (d_text {}, h {})",
            config.architecture,
            config.d_text,
            config.hidden_size,
            expected.architecture,
            expected.d_text,
            expected.hidden_size
        )));
    }
    Ok((params, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;

    fn sample() -> (ParameterSet, ModelConfig) {
        let c = ModelConfig::new(Architecture::EmoLstmTdA, 5)
            .with_hidden(4)
            .with_seed(9);
        (init_params(&c).unwrap(), c)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (p, c) = sample();
        let (p2, c2) = decode_checkpoint(&encode_checkpoint(&p, &c)).unwrap();
        assert!(p.same_values(&p2));
        assert_eq!(c, c2);
    }

    #[test]
    fn truncation_and_corruption_are_integrity_errors() {
        let (p, c) = sample();
        let bytes = encode_checkpoint(&p, &c);
        for cut in [0, 5, 12, 40, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(decode_checkpoint(&bytes[..cut]), Err(ModelError::Integrity(_))),
                "cut {cut}"
            );
        }
        let mut flipped = bytes.clone();
        flipped[60] ^= 0x10;
        assert!(matches!(decode_checkpoint(&flipped), Err(ModelError::Integrity(_))));
    }

    #[test]
    fn version_mismatch_is_incompatible() {
        let (p, c) = sample();
        let mut bytes = encode_checkpoint(&p, &c);
        bytes[8] = 2;
        assert!(matches!(decode_checkpoint(&bytes), Err(ModelError::Incompatible(_))));
    }

    #[test]
    fn file_round_trip_and_architecture_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let (p, c) = sample();
        save_checkpoint(&p, &c, &path).unwrap();
        let (p2, _) = load_checkpoint_for(&path, &c).unwrap();
        assert!(p.same_values(&p2));
        let other = ModelConfig::new(Architecture::LstmTd, 5).with_hidden(4);
        assert!(matches!(
            load_checkpoint_for(&path, &other),
            Err(ModelError::Incompatible(_))
        ));
    }
}
