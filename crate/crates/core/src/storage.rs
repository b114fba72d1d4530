//! Bit-exact on-disk format for TrieArrays.
//!
//! Layout (little-endian): magic `TARR`, format version u32 = 1, arity u32,
//! `arity` u64 value-array lengths, `arity - 1` u64 index-array lengths, then
//! the arrays interleaved as val_0, idx_0, val_1, idx_1, ..., val_{arity-1},
//! 8 bytes per element.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::Error;
use crate::relation::TrieArray;
use crate::Result;

const MAGIC: &[u8; 4] = b"TARR";
const VERSION: u32 = 1;

pub fn persist(t: &TrieArray, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(t.arity() as u32).to_le_bytes())?;
    for level in 0..t.arity() {
        w.write_all(&(t.val(level).len() as u64).to_le_bytes())?;
    }
    for level in 0..t.arity() - 1 {
        w.write_all(&(t.idx(level).len() as u64).to_le_bytes())?;
    }
    for level in 0..t.arity() {
        for &v in t.val(level) {
            w.write_all(&v.to_le_bytes())?;
        }
        if level < t.arity() - 1 {
            for &i in t.idx(level) {
                w.write_all(&(i as u64).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], field: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|_| Error::Truncated { field })
}

fn read_u64(r: &mut impl Read, field: &'static str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, field)?;
    Ok(u64::from_le_bytes(b))
}

pub fn load(path: &Path) -> Result<TrieArray> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut b4 = [0u8; 4];
    read_exact(&mut r, &mut b4, "version")?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::BadVersion(version));
    }
    read_exact(&mut r, &mut b4, "arity")?;
    let arity = u32::from_le_bytes(b4) as usize;
    if arity == 0 {
        return Err(Error::InvariantViolation("arity must be positive".into()));
    }
    let mut val_lens = Vec::with_capacity(arity);
    for _ in 0..arity {
        val_lens.push(read_u64(&mut r, "value-array length")? as usize);
    }
    let mut idx_lens = Vec::with_capacity(arity - 1);
    for _ in 0..arity - 1 {
        idx_lens.push(read_u64(&mut r, "index-array length")? as usize);
    }
    let mut val = Vec::with_capacity(arity);
    let mut idx = Vec::with_capacity(arity - 1);
    for level in 0..arity {
        let mut vs = Vec::with_capacity(val_lens[level]);
        for _ in 0..val_lens[level] {
            vs.push(read_u64(&mut r, "value array")? as i64);
        }
        val.push(vs);
        if level < arity - 1 {
            let mut is = Vec::with_capacity(idx_lens[level]);
            for _ in 0..idx_lens[level] {
                is.push(read_u64(&mut r, "index array")? as usize);
            }
            idx.push(is);
        }
    }
    let t = TrieArray::from_parts(arity, val, idx);
    t.validate()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::build_from_sorted;

    fn fig2() -> TrieArray {
        let tuples: Vec<Vec<i64>> = [
            (1, 2),
            (1, 3),
            (1, 6),
            (2, 4),
            (2, 5),
            (3, 6),
            (4, 5),
            (4, 7),
            (5, 7),
            (6, 7),
        ]
        .iter()
        .map(|&(a, b)| vec![a, b])
        .collect();
        build_from_sorted(&tuples, 2).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.tarr");
        let t = fig2();
        persist(&t, &p).unwrap();
        assert_eq!(load(&p).unwrap(), t);
    }

    #[test]
    fn bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.tarr");
        std::fs::write(&p, b"NOPE\x01\x00\x00\x00").unwrap();
        let err = load(&p).unwrap_err();
        assert!(matches!(err, Error::BadMagic));
        assert_eq!(err.to_string(), "bad magic");
    }

    #[test]
    fn corrupt_idx_sentinel_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.tarr");
        let t = fig2();
        persist(&t, &p).unwrap();
        // idx_0 last entry lives right before val_1; patch it from 10 to 9.
        let mut bytes = std::fs::read(&p).unwrap();
        let header = 4 + 4 + 4 + 8 * 2 + 8; // magic, version, arity, val lens, idx len
        let idx0_last = header + 8 * 6 + 8 * 6; // after val_0 (6) and idx_0[0..6]
        assert_eq!(u64::from_le_bytes(bytes[idx0_last..idx0_last + 8].try_into().unwrap()), 10);
        bytes[idx0_last..idx0_last + 8].copy_from_slice(&9u64.to_le_bytes());
        std::fs::write(&p, &bytes).unwrap();
        let err = load(&p).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation(_)));
    }

    #[test]
    fn truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.tarr");
        persist(&fig2(), &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 4]).unwrap();
        let err = load(&p).unwrap_err();
        assert!(matches!(err, Error::Truncated { .. }));
    }
}
