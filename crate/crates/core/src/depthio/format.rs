//! DSEQ container and 16-bit PGM frame I/O.
//!
//! DSEQ layout (little-endian): `"DSEQ"`, u16 version, u16 width, u16 height,
//! u32 frame count, i32 subject id, i32 action label, then
//! `count * width * height` u16 depth values, frame-major and row-major.

use std::fs;
use std::path::{Path, PathBuf};

use super::{DepthFrame, DepthIoError, DepthSequence};
use crate::binio::{LeReader, LeWriter};

pub const DSEQ_MAGIC: &[u8; 4] = b"DSEQ";
pub const DSEQ_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 2 + 4 + 4 + 4;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DepthIoError + '_ {
    move |source| DepthIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn encode_dseq(seq: &DepthSequence) -> Vec<u8> {
    let (w, h, n) = (seq.width(), seq.height(), seq.len());
    assert!(w <= u16::MAX as usize && h <= u16::MAX as usize);
    let mut out = LeWriter::new();
    out.bytes(DSEQ_MAGIC)
        .u16(DSEQ_VERSION)
        .u16(w as u16)
        .u16(h as u16)
        .u32(n as u32)
        .i32(seq.subject_id)
        .i32(seq.action_label);
    for frame in seq.frames() {
        for &v in frame.as_slice() {
            out.u16(v);
        }
    }
    out.into_inner()
}

/// Parses a DSEQ byte buffer; `name` becomes the sequence name.
pub fn decode_dseq(bytes: &[u8], name: &str) -> Result<DepthSequence, DepthIoError> {
    if bytes.len() < 4 || &bytes[..4] != DSEQ_MAGIC {
        return Err(DepthIoError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(DepthIoError::MalformedHeader(format!(
            "header needs {HEADER_LEN} bytes, file has {}",
            bytes.len()
        )));
    }
    let mut rd = LeReader::new(&bytes[4..]);
    let version = rd.u16().expect("header length checked");
    if version != DSEQ_VERSION {
        return Err(DepthIoError::UnsupportedVersion(version));
    }
    let width = rd.u16().expect("header length checked") as usize;
    let height = rd.u16().expect("header length checked") as usize;
    let count = rd.u32().expect("header length checked") as usize;
    let subject_id = rd.i32().expect("header length checked");
    let action_label = rd.i32().expect("header length checked");
    if count == 0 {
        return Err(DepthIoError::EmptySequence);
    }
    if width == 0 || height == 0 {
        return Err(DepthIoError::MalformedHeader(format!(
            "zero frame size {width}x{height}"
        )));
    }
    let frame_px = width * height;
    let expected = count
        .checked_mul(frame_px)
        .and_then(|v| v.checked_mul(2))
        .ok_or_else(|| DepthIoError::MalformedHeader("payload size overflows".into()))?;
    let found = rd.remaining();
    if found < expected {
        return Err(DepthIoError::Truncated { expected, found });
    }
    if found > expected {
        return Err(DepthIoError::TrailingData {
            extra: found - expected,
        });
    }
    let mut frames = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = rd.take(frame_px * 2).expect("payload length checked");
        let depth = raw
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        frames.push(DepthFrame::new(width, height, depth)?);
    }
    DepthSequence::new(frames, subject_id, action_label, name)
}

pub fn save_sequence(seq: &DepthSequence, path: impl AsRef<Path>) -> Result<(), DepthIoError> {
    let path = path.as_ref();
    fs::write(path, encode_dseq(seq)).map_err(io_err(path))
}

/// Loads a DSEQ file, or a directory of 16-bit PGM frames read in
/// lexicographic file-name order.
pub fn load_sequence(path: impl AsRef<Path>) -> Result<DepthSequence, DepthIoError> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if path.is_dir() {
        return load_pgm_dir(path, &name);
    }
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_dseq(&bytes, &name)
}

fn load_pgm_dir(dir: &Path, name: &str) -> Result<DepthSequence, DepthIoError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .is_some_and(|ext| ext.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    if files.is_empty() {
        return Err(DepthIoError::NoFrames(dir.to_path_buf()));
    }
    files.sort();
    let mut frames: Vec<DepthFrame> = Vec::with_capacity(files.len());
    for (i, file) in files.iter().enumerate() {
        let frame = read_pgm(file)?;
        if let Some(first) = frames.first() {
            if !first.same_grid(&frame) {
                return Err(DepthIoError::DimensionMismatch {
                    frame: i,
                    expected_w: first.width(),
                    expected_h: first.height(),
                    found_w: frame.width(),
                    found_h: frame.height(),
                });
            }
        }
        frames.push(frame);
    }
    let (action, subject) = crate::pipeline::parse_sequence_name(name)
        .map(|n| (n.action, n.subject))
        .unwrap_or((0, 0));
    DepthSequence::new(frames, subject, action, name)
}

/// Reads a binary (P5) PGM. 16-bit samples are big-endian per the PGM
/// convention; 8-bit files are widened.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<DepthFrame, DepthIoError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    let bad = |reason: &str| DepthIoError::InvalidPgm {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };

    let mut pos = 0usize;
    let mut fields: Vec<usize> = Vec::with_capacity(3);
    if bytes.get(..2) != Some(b"P5") {
        return Err(bad("missing P5 signature"));
    }
    pos += 2;
    while fields.len() < 3 {
        // whitespace and comments between header tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(bad("header ends early")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(bad("expected a decimal header field"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        fields.push(text.parse().map_err(|_| bad("header field overflows"))?);
    }
    // exactly one whitespace byte separates header and raster
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(bad("missing separator after maxval"));
    }
    pos += 1;

    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if width == 0 || height == 0 {
        return Err(bad("zero image size"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval outside 1..=65535"));
    }
    let bytes_per = if maxval > 255 { 2 } else { 1 };
    let expected = width * height * bytes_per;
    let raster = &bytes[pos..];
    if raster.len() < expected {
        return Err(DepthIoError::Truncated {
            expected,
            found: raster.len(),
        });
    }
    let depth: Vec<u16> = if bytes_per == 2 {
        raster[..expected]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        raster[..expected].iter().map(|&b| b as u16).collect()
    };
    DepthFrame::new(width, height, depth)
}

/// Writes a 16-bit binary PGM with maxval 65535.
pub fn write_pgm(path: impl AsRef<Path>, frame: &DepthFrame) -> Result<(), DepthIoError> {
    let path = path.as_ref();
    let mut out = format!("P5\n{} {}\n65535\n", frame.width(), frame.height()).into_bytes();
    out.reserve(frame.as_slice().len() * 2);
    for &v in frame.as_slice() {
        out.extend_from_slice(&v.to_be_bytes());
    }
    fs::write(path, out).map_err(io_err(path))
}
