//! Binary checkpoint format for named parameter matrices.
//!
//! Layout: magic bytes `OGAN`, format version (u16 LE), then for each
//! parameter: name length (u32 LE), name bytes (UTF-8), rows (u32 LE),
//! cols (u32 LE), row-major f64 payload (LE bit patterns). Entries repeat
//! until end of file. Round-trips are bit-exact.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::matrix::Matrix;

pub const MAGIC: &[u8; 4] = b"OGAN";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic bytes; not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u16),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

pub fn save(path: &Path, entries: &[(String, Matrix<f64>)]) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for (name, m) in entries {
        let name_bytes = name.as_bytes();
        w.write_all(&(name_bytes.len() as u32).to_le_bytes())?;
        w.write_all(name_bytes)?;
        w.write_all(&(m.rows() as u32).to_le_bytes())?;
        w.write_all(&(m.cols() as u32).to_le_bytes())?;
        for &v in m.data() {
            w.write_all(&v.to_bits().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Vec<(String, Matrix<f64>)>, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut ver = [0u8; 2];
    r.read_exact(&mut ver)?;
    let version = u16::from_le_bytes(ver);
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }

    let mut entries = Vec::new();
    loop {
        let mut len_buf = [0u8; 4];
        match r.read_exact(&mut len_buf) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let name_len = u32::from_le_bytes(len_buf) as usize;
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|e| CheckpointError::Corrupt(format!("non-utf8 name: {e}")))?;
        let mut dim = [0u8; 4];
        r.read_exact(&mut dim)?;
        let rows = u32::from_le_bytes(dim) as usize;
        r.read_exact(&mut dim)?;
        let cols = u32::from_le_bytes(dim) as usize;
        let mut data = Vec::with_capacity(rows * cols);
        let mut val = [0u8; 8];
        for _ in 0..rows * cols {
            r.read_exact(&mut val)?;
            data.push(f64::from_bits(u64::from_le_bytes(val)));
        }
        let m = Matrix::from_vec(rows, cols, data)
            .map_err(|e| CheckpointError::Corrupt(format!("entry {name}: {e}")))?;
        entries.push((name, m));
    }
    Ok(entries)
}

/// Lookup helper for loaded checkpoints.
pub fn find<'a>(
    entries: &'a [(String, Matrix<f64>)],
    name: &str,
) -> Result<&'a Matrix<f64>, CheckpointError> {
    entries
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, m)| m)
        .ok_or_else(|| CheckpointError::Corrupt(format!("missing entry {name}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::seeded_rng;
    use rand::Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = seeded_rng(99);
        let dir = std::env::temp_dir().join("ogan_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rt.ckpt");

        // Mix of magnitudes, including subnormals and exact negatives.
        let m1 = Matrix::from_fn(3, 5, |_, _| {
            let e: f64 = rng.random_range(-300.0..300.0);
            let s: f64 = rng.random_range(-1.0..1.0);
            s * 10f64.powf(e / 10.0)
        });
        let m2 = Matrix::from_vec(1, 4, vec![0.0, -0.0, 5e-324, f64::MAX]).unwrap();
        let entries = vec![("a/weights".to_string(), m1), ("b".to_string(), m2)];
        save(&path, &entries).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        for ((n0, m0), (n1, m1)) in entries.iter().zip(loaded.iter()) {
            assert_eq!(n0, n1);
            assert_eq!(m0.shape(), m1.shape());
            for (a, b) in m0.data().iter().zip(m1.data().iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = std::env::temp_dir().join("ogan_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.ckpt");
        std::fs::write(&path, b"NOPE\x01\x00").unwrap();
        assert!(matches!(load(&path), Err(CheckpointError::BadMagic)));
    }
}
