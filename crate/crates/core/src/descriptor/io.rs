//! Binary dump of descriptor matrices.

use std::path::Path;

use super::DescriptorError;
use crate::binio::{LeReader, LeWriter};

pub const DESC_MAGIC: &[u8; 4] = b"DESC";
pub const DESC_VERSION: u16 = 1;

/// Row-major matrix of `count` descriptors of length `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorMatrix {
    pub dim: usize,
    pub data: Vec<f32>,
}

impl DescriptorMatrix {
    pub fn new(dim: usize) -> Self {
        Self { dim, data: Vec::new() }
    }

    pub fn from_rows<'a>(dim: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut m = Self::new(dim);
        for r in rows {
            m.push(r);
        }
        m
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim, "descriptor length");
        self.data.extend(row.iter().map(|&v| v as f32));
    }

    pub fn count(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = LeWriter::new();
        w.bytes(DESC_MAGIC)
            .u16(DESC_VERSION)
            .u32(self.count() as u32)
            .u32(self.dim as u32);
        for &v in &self.data {
            w.f32(v);
        }
        w.into_inner()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DescriptorError> {
        let bad = |m: &str| DescriptorError::Format(m.to_string());
        let mut r = LeReader::new(bytes);
        if r.take(4) != Some(&DESC_MAGIC[..]) {
            return Err(bad("bad magic"));
        }
        let version = r.u16().ok_or_else(|| bad("truncated header"))?;
        if version != DESC_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let count = r.u32().ok_or_else(|| bad("truncated header"))? as usize;
        let dim = r.u32().ok_or_else(|| bad("truncated header"))? as usize;
        let n = count.checked_mul(dim).ok_or_else(|| bad("size overflow"))?;
        if r.remaining() != n * 4 {
            return Err(bad(&format!("expected {} value bytes, found {}", n * 4, r.remaining())));
        }
        let data = (0..n).map(|_| r.f32().expect("length checked")).collect();
        Ok(Self { dim, data })
    }
}

pub fn write_descriptors(path: &Path, m: &DescriptorMatrix) -> Result<(), DescriptorError> {
    std::fs::write(path, m.encode())?;
    Ok(())
}

pub fn read_descriptors(path: &Path) -> Result<DescriptorMatrix, DescriptorError> {
    DescriptorMatrix::decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_layout() {
        let m = DescriptorMatrix::from_rows(3, [&[0.5, 0.25, 0.25][..], &[1.0, 0.0, 0.0][..]]);
        let bytes = m.encode();
        assert_eq!(&bytes[..4], b"DESC");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[10..14].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 14 + 6 * 4);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.desc");
        write_descriptors(&p, &m).unwrap();
        let back = read_descriptors(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.row(1), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let m = DescriptorMatrix::from_rows(2, [&[1.0, 2.0][..]]);
        let mut bytes = m.encode();
        assert!(DescriptorMatrix::decode(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(DescriptorMatrix::decode(&bytes).is_err());
        let empty = DescriptorMatrix::new(5);
        assert_eq!(DescriptorMatrix::decode(&empty.encode()).unwrap().count(), 0);
    }
}
