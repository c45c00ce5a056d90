//! `EMB1` embedding files.
//!
//! Layout, all little-endian, no padding:
//!
//! | bytes          | content                         |
//! |----------------|---------------------------------|
//! | 4              | magic `EMB1`                    |
//! | 4              | `u32` version (= 1)             |
//! | 4              | `u32` dim                       |
//! | 8              | `u64` count                     |
//! | 8 × count      | `u64` unit ids                  |
//! | 4 × count×dim  | `f32` vectors, row-major        |

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{norm, normalize, EmbeddingBlock};
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"EMB1";
pub const VERSION: u32 = 1;
const HEADER_LEN: u64 = 20;

/// Norm tolerance applied when reading.
pub const READ_NORM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Re-normalize rows outside the norm tolerance instead of failing.
    pub renormalize: bool,
}

/// Non-structural problems found in an otherwise well-formed file.
#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    Norm { row: usize, unit_id: u64, norm: f64 },
    DuplicateId { row: usize, unit_id: u64 },
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Finding::Norm { row, unit_id, norm } => write!(f, "row {row} (unit {unit_id}): norm {norm}"),
            Finding::DuplicateId { row, unit_id } => write!(f, "row {row}: duplicate unit id {unit_id}"),
        }
    }
}

pub fn write_block(path: &Path, block: &EmbeddingBlock) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode(block, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn encode(block: &EmbeddingBlock, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(block.dim() as u32).to_le_bytes())?;
    w.write_all(&(block.len() as u64).to_le_bytes())?;
    for id in block.ids() {
        w.write_all(&id.to_le_bytes())?;
    }
    for x in block.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn decode_raw(bytes: &[u8]) -> Result<(usize, Vec<u64>, Vec<f32>)> {
    let actual = bytes.len() as u64;
    if actual < HEADER_LEN {
        if actual >= 4 && bytes[..4] != MAGIC {
            return Err(Error::BadMagic { found: bytes[..4].try_into().expect("4 bytes") });
        }
        return Err(Error::Truncated { expected: HEADER_LEN, actual });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::BadVersion(version));
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as u64;
    let count = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    if dim == 0 {
        return Err(Error::Format("EMB1 dimension is zero".into()));
    }
    let expected = count
        .checked_mul(8)
        .and_then(|ids| count.checked_mul(dim)?.checked_mul(4)?.checked_add(ids))
        .and_then(|body| body.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format(format!("EMB1 header count {count} × dim {dim} overflows")))?;
    if actual < expected {
        return Err(Error::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(Error::Format(format!("{} trailing bytes after {count} rows", actual - expected)));
    }
    let count = count as usize;
    let dim = dim as usize;
    let id_end = HEADER_LEN as usize + count * 8;
    let ids = bytes[HEADER_LEN as usize..id_end]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let data = bytes[id_end..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    Ok((dim, ids, data))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut buf)).map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

fn findings(dim: usize, ids: &[u64], data: &[f32]) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut seen = HashSet::with_capacity(ids.len());
    for (row, (&unit_id, v)) in ids.iter().zip(data.chunks_exact(dim)).enumerate() {
        if !seen.insert(unit_id) {
            out.push(Finding::DuplicateId { row, unit_id });
        }
        let n = norm(v);
        if !((n - 1.0).abs() <= READ_NORM_TOLERANCE) {
            out.push(Finding::Norm { row, unit_id, norm: n });
        }
    }
    out
}

/// Structural problems (magic, version, truncation) are errors; norm and
/// duplicate-id problems are returned as findings.
pub fn validate_file(path: &Path) -> Result<(usize, usize, Vec<Finding>)> {
    let (dim, ids, data) = decode_raw(&read_bytes(path)?)?;
    let f = findings(dim, &ids, &data);
    Ok((dim, ids.len(), f))
}

pub fn decode(bytes: &[u8], opts: ReadOptions) -> Result<EmbeddingBlock> {
    let (dim, ids, mut data) = decode_raw(bytes)?;
    for f in findings(dim, &ids, &data) {
        match f {
            Finding::DuplicateId { unit_id, .. } => return Err(Error::DuplicateUnit(unit_id)),
            Finding::Norm { row, unit_id, norm } => {
                if !opts.renormalize {
                    return Err(Error::NormViolation { row, unit_id, norm });
                }
                let fixed = normalize(&data[row * dim..(row + 1) * dim])?;
                data[row * dim..(row + 1) * dim].copy_from_slice(&fixed);
            }
        }
    }
    Ok(EmbeddingBlock::unchecked(dim, ids, data))
}

pub fn read_block(path: &Path, opts: ReadOptions) -> Result<EmbeddingBlock> {
    decode(&read_bytes(path)?, opts)
}
