//! Parameter checkpoint format.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! magic   8 bytes  b"GFCKPT\0\0"
//! version u32      currently 1
//! count   u32      number of entries
//! entry:  u32 path_len, path bytes (UTF-8),
//!         u32 rank, rank * u32 dims,
//!         prod(dims) * f64 values (IEEE-754 bits, little-endian)
//! ```
//!
//! Reloading restores bit-identical values.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{GlyphError, Result};

use super::tensor::Tensor;

const MAGIC: &[u8; 8] = b"GFCKPT\0\0";
const VERSION: u32 = 1;

pub fn save(path: &Path, entries: &[(String, &Tensor)]) -> Result<()> {
    let file = File::create(path).map_err(|e| GlyphError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| GlyphError::io(path, e);
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(entries.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (name, tensor) in entries {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes()).map_err(io_err)?;
        w.write_all(bytes).map_err(io_err)?;
        w.write_all(&(tensor.shape().len() as u32).to_le_bytes()).map_err(io_err)?;
        for dim in tensor.shape() {
            w.write_all(&(*dim as u32).to_le_bytes()).map_err(io_err)?;
        }
        for v in tensor.data() {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn load(path: &Path) -> Result<BTreeMap<String, Tensor>> {
    let file = File::open(path).map_err(|e| GlyphError::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, path)?;
    if &magic != MAGIC {
        return Err(GlyphError::Checkpoint(format!(
            "{} is not a parameter checkpoint (bad magic)",
            path.display()
        )));
    }
    let version = read_u32(&mut r, path)?;
    if version != VERSION {
        return Err(GlyphError::Checkpoint(format!(
            "unsupported checkpoint version {version} (expected {VERSION})"
        )));
    }
    let count = read_u32(&mut r, path)?;
    let mut out = BTreeMap::new();
    for _ in 0..count {
        let name_len = read_u32(&mut r, path)? as usize;
        let mut name_bytes = vec![0u8; name_len];
        read_exact(&mut r, &mut name_bytes, path)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| GlyphError::Checkpoint("non-UTF-8 parameter path".into()))?;
        let rank = read_u32(&mut r, path)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut r, path)? as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for _ in 0..n {
            read_exact(&mut r, &mut buf, path)?;
            data.push(f64::from_le_bytes(buf));
        }
        if out.insert(name.clone(), Tensor::from_vec(&shape, data)?).is_some() {
            return Err(GlyphError::Checkpoint(format!("duplicate parameter path {name}")));
        }
    }
    Ok(out)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], path: &Path) -> Result<()> {
    r.read_exact(buf).map_err(|e| GlyphError::io(path, e))
}

fn read_u32<R: Read>(r: &mut R, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, path)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.ckpt");
        let a = Tensor::from_vec(&[2, 2], vec![0.1, -0.2, 3.0e-300, f64::MIN_POSITIVE]).unwrap();
        let b = Tensor::from_vec(&[3], vec![1.0, 2.0, -0.0]).unwrap();
        save(&path, &[("net.a".into(), &a), ("net.b".into(), &b)]).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        for (orig, name) in [(&a, "net.a"), (&b, "net.b")] {
            let got = &loaded[name];
            assert_eq!(got.shape(), orig.shape());
            for (x, y) in got.data().iter().zip(orig.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"not a checkpoint").unwrap();
        assert!(matches!(load(&path), Err(GlyphError::Checkpoint(_))));
    }
}
