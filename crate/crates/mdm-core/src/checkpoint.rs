//! Binary checkpoints.
//!
//! Layout: the magic `MDM1`, a kind byte (0 = pretrained embeddings only,
//! 1 = full model), little-endian `u32` size header (relation count and
//! width; the full kind adds window length and both stack depths), then one
//! tagged record per tensor in canonical visit order: name length, name
//! bytes, value count, and the values as little-endian `f64`. Readers
//! verify every tag, so a file from a mismatched code version fails loudly
//! instead of loading shifted weights.

use crate::embed::EmbedParams;
use crate::model::{MdmHyper, MdmParams};
use crate::{Error, Result};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"MDM1";
const KIND_EMBED: u8 = 0;
const KIND_MODEL: u8 = 1;

fn write_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn write_tensor(w: &mut impl Write, name: &str, data: &[f64]) -> Result<()> {
    write_u32(w, name.len() as u32)?;
    w.write_all(name.as_bytes())?;
    write_u32(w, data.len() as u32)?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_tensor_into(r: &mut impl Read, name: &str, data: &mut [f64]) -> Result<()> {
    let name_len = read_u32(r)? as usize;
    let mut name_buf = vec![0u8; name_len];
    r.read_exact(&mut name_buf)?;
    let found = String::from_utf8(name_buf)
        .map_err(|_| Error::Checkpoint("tensor name is not utf-8".into()))?;
    if found != name {
        return Err(Error::Checkpoint(format!(
            "expected tensor {name:?}, file holds {found:?}"
        )));
    }
    let count = read_u32(r)? as usize;
    if count != data.len() {
        return Err(Error::Checkpoint(format!(
            "tensor {name:?} holds {count} values, expected {}",
            data.len()
        )));
    }
    let mut buf = [0u8; 8];
    for v in data.iter_mut() {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    Ok(())
}

fn expect_eof(r: &mut impl Read) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(Error::Checkpoint("trailing bytes after the last tensor".into())),
    }
}

fn check_header(r: &mut impl Read, expect_kind: u8) -> Result<()> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("not a model checkpoint (bad magic)".into()));
    }
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    if kind[0] != expect_kind {
        let what = |k| match k {
            KIND_EMBED => "pretrained embeddings only",
            _ => "a full model",
        };
        return Err(Error::Checkpoint(format!(
            "checkpoint holds {}, expected {}",
            what(kind[0]),
            what(expect_kind)
        )));
    }
    Ok(())
}

pub fn save_embed(params: &EmbedParams, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[KIND_EMBED])?;
    write_u32(&mut w, params.relation_count() as u32)?;
    write_u32(&mut w, params.dim() as u32)?;
    let mut failed = None;
    params.clone().visit_mut("embed", &mut |name, data| {
        if failed.is_none() {
            if let Err(e) = write_tensor(&mut w, name, data) {
                failed = Some(e);
            }
        }
    });
    match failed {
        Some(e) => Err(e),
        None => {
            w.flush()?;
            Ok(())
        }
    }
}

pub fn load_embed(path: &Path) -> Result<EmbedParams> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    check_header(&mut r, KIND_EMBED)?;
    let m = read_u32(&mut r)? as usize;
    let d = read_u32(&mut r)? as usize;
    let mut params = EmbedParams::init(m, d, 0)?.zeros_like();
    let mut failed = None;
    params.visit_mut("embed", &mut |name, data| {
        if failed.is_none() {
            if let Err(e) = read_tensor_into(&mut r, name, data) {
                failed = Some(e);
            }
        }
    });
    if let Some(e) = failed {
        return Err(e);
    }
    expect_eof(&mut r)?;
    Ok(params)
}

pub fn save_model(params: &MdmParams, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[KIND_MODEL])?;
    let h = params.hyper;
    for v in [
        h.relation_count,
        h.d,
        h.window_len,
        h.individual_layers,
        h.union_layers,
    ] {
        write_u32(&mut w, v as u32)?;
    }
    let mut failed = None;
    params.clone().visit_mut(&mut |name, data| {
        if failed.is_none() {
            if let Err(e) = write_tensor(&mut w, name, data) {
                failed = Some(e);
            }
        }
    });
    match failed {
        Some(e) => Err(e),
        None => {
            w.flush()?;
            Ok(())
        }
    }
}

pub fn load_model(path: &Path) -> Result<MdmParams> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    check_header(&mut r, KIND_MODEL)?;
    let hyper = MdmHyper {
        relation_count: read_u32(&mut r)? as usize,
        d: read_u32(&mut r)? as usize,
        window_len: read_u32(&mut r)? as usize,
        individual_layers: read_u32(&mut r)? as usize,
        union_layers: read_u32(&mut r)? as usize,
    };
    let mut params = MdmParams::init(hyper, 0)?.zeros_like();
    let mut failed = None;
    params.visit_mut(&mut |name, data| {
        if failed.is_none() {
            if let Err(e) = read_tensor_into(&mut r, name, data) {
                failed = Some(e);
            }
        }
    });
    if let Some(e) = failed {
        return Err(e);
    }
    expect_eof(&mut r)?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbedParams;
    use tempfile::tempdir;

    fn model_params() -> MdmParams {
        MdmParams::init(
            MdmHyper {
                relation_count: 7,
                d: 5,
                window_len: 3,
                individual_layers: 2,
                union_layers: 1,
            },
            42,
        )
        .unwrap()
    }

    #[test]
    fn embed_roundtrip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("embed.bin");
        let params = EmbedParams::init(7, 4, 11).unwrap();
        save_embed(&params, &path).unwrap();
        let back = load_embed(&path).unwrap();
        assert_eq!(back, params);
    }

    #[test]
    fn model_roundtrip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let params = model_params();
        save_model(&params, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, params);
        assert_eq!(back.hyper, params.hyper);
    }

    #[test]
    fn kind_confusion_is_detected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("embed.bin");
        save_embed(&EmbedParams::init(7, 4, 1).unwrap(), &path).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(err.to_string().contains("pretrained embeddings"), "{err}");
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.bin");
        save_model(&model_params(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        // bad magic
        let mut broken = bytes.clone();
        broken[0] = b'X';
        std::fs::write(&path, &broken).unwrap();
        assert!(load_model(&path).is_err());

        // truncation
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(load_model(&path).is_err());

        // a corrupted tensor name (flip one ascii bit: "embed..." -> "dmbed...")
        let mut renamed = bytes.clone();
        // header: 4 magic + 1 kind + 5 * 4 sizes, then the first name length
        let name_start = 4 + 1 + 20 + 4;
        renamed[name_start] ^= 0x01;
        std::fs::write(&path, &renamed).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(err.to_string().contains("expected tensor"), "{err}");

        // trailing garbage
        let mut padded = bytes.clone();
        padded.push(0);
        std::fs::write(&path, &padded).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(err.to_string().contains("trailing"), "{err}");
    }
}
