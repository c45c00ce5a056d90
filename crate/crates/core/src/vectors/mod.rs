//! Unit-norm embedding blocks, the `EMB1` file format and exact cosine
//! threshold search.
//!
//! Every stored row has Euclidean norm 1, so cosine similarity is a plain
//! dot product everywhere downstream. Dot products multiply in `f32` and
//! accumulate in `f64`.

mod io;
mod search;

use std::collections::HashMap;

use crate::{Error, Result};

pub use io::{read_block, validate_file, write_block, Finding, ReadOptions, MAGIC, VERSION};
pub use search::{correspondence_flags, threshold_search, MatchSet};

/// Stored rows must have norm within this of 1.
pub const NORM_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBlock {
    dim: usize,
    ids: Vec<u64>,
    data: Vec<f32>,
}

impl EmbeddingBlock {
    /// Wraps already-normalized rows, checking the norm and id invariants.
    pub fn new(dim: usize, ids: Vec<u64>, data: Vec<f32>) -> Result<Self> {
        Self::check_shape(dim, &ids, &data)?;
        let block = Self { dim, ids, data };
        if let Some(f) = block.first_violation(NORM_TOLERANCE) {
            return Err(f);
        }
        Ok(block)
    }

    /// Normalizes each raw row before storing it.
    pub fn from_raw(dim: usize, ids: Vec<u64>, mut data: Vec<f32>) -> Result<Self> {
        Self::check_shape(dim, &ids, &data)?;
        for row in data.chunks_exact_mut(dim) {
            let unit = normalize(row)?;
            row.copy_from_slice(&unit);
        }
        Ok(Self { dim, ids, data })
    }

    pub fn from_rows(dim: usize, ids: Vec<u64>, rows: &[Vec<f32>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimMismatch { left: dim, right: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::from_raw(dim, ids, data)
    }

    pub(crate) fn unchecked(dim: usize, ids: Vec<u64>, data: Vec<f32>) -> Self {
        Self { dim, ids, data }
    }

    fn check_shape(dim: usize, ids: &[u64], data: &[f32]) -> Result<()> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::Format(format!(
                "{} floats cannot hold {} rows of dimension {dim}",
                data.len(),
                ids.len()
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(ids.len());
        for &id in ids {
            if !seen.insert(id) {
                return Err(Error::DuplicateUnit(id));
            }
        }
        Ok(())
    }

    fn first_violation(&self, tol: f64) -> Option<Error> {
        (0..self.len()).find_map(|i| {
            let norm = norm(self.row(i));
            ((norm - 1.0).abs() > tol).then(|| Error::NormViolation { row: i, unit_id: self.ids[i], norm })
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn id_index(&self) -> HashMap<u64, usize> {
        self.ids.iter().enumerate().map(|(i, &id)| (id, i)).collect()
    }

    /// New block holding the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        let mut ids = Vec::with_capacity(rows.len());
        for &r in rows {
            ids.push(self.ids[r]);
            data.extend_from_slice(self.row(r));
        }
        Self { dim: self.dim, ids, data }
    }
}

pub fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

/// `v / ‖v‖₂`, computed in `f64`.
pub fn normalize(v: &[f32]) -> Result<Vec<f32>> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(v.iter().map(|&x| (x as f64 / n) as f32).collect())
}

/// Dot product of two unit vectors, clamped to `[-1, 1]`.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch { left: a.len(), right: b.len() });
    }
    Ok(dot(a, b).clamp(-1.0, 1.0))
}

const LANES: usize = 8;
const CHUNK: usize = 64;

/// Mixed-precision dot product: products are summed in `f32` lanes over
/// 64-element chunks and each chunk is folded into `f64` accumulators.
/// Every kernel in the crate goes through this function, so the blocked and
/// per-pair paths agree bit for bit.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0f64; LANES];
    let mut ca = a.chunks_exact(CHUNK);
    let mut cb = b.chunks_exact(CHUNK);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        let mut lanes = [0f32; LANES];
        for (pa, pb) in xa.chunks_exact(LANES).zip(xb.chunks_exact(LANES)) {
            for l in 0..LANES {
                lanes[l] += pa[l] * pb[l];
            }
        }
        for l in 0..LANES {
            acc[l] += lanes[l] as f64;
        }
    }
    let mut tail = 0f64;
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x as f64 * y as f64;
    }
    acc.iter().sum::<f64>() + tail
}

/// Dot of an `f32` row against an `f64` direction (cluster centers).
#[inline]
pub fn dot_f64(a: &[f32], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            acc[l] += xa[l] as f64 * xb[l];
        }
    }
    let mut tail = 0f64;
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x as f64 * y;
    }
    acc.iter().sum::<f64>() + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        let v = normalize(&[3.0, 4.0]).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-6 && (v[1] - 0.8).abs() < 1e-6);
        let u = normalize(&[0.6, 0.8]).unwrap();
        assert!((u[0] - 0.6).abs() < 1e-6 && (u[1] - 0.8).abs() < 1e-6);
        assert!(matches!(normalize(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn cosine_examples() {
        let a = [0.6f32, 0.8];
        assert!((cosine(&a, &a).unwrap() - 1.0).abs() < 1e-7);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&a, &[-0.6, -0.8]).unwrap() + 1.0).abs() < 1e-7);
        assert!(matches!(cosine(&[1.0], &[1.0, 0.0]), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn dot_matches_f64_reference() {
        let a: Vec<f32> = (0..771).map(|i| ((i * 37 % 101) as f32 - 50.0) / 97.0).collect();
        let b: Vec<f32> = (0..771).map(|i| ((i * 53 % 89) as f32 - 44.0) / 83.0).collect();
        let reference: f64 = a.iter().zip(&b).map(|(&x, &y)| x as f64 * y as f64).sum();
        assert!((dot(&a, &b) - reference).abs() < 1e-5 * reference.abs().max(1.0));
    }

    #[test]
    fn block_rejects_bad_rows() {
        assert!(matches!(EmbeddingBlock::new(2, vec![1], vec![1.0, 1.0]), Err(Error::NormViolation { .. })));
        assert!(matches!(EmbeddingBlock::new(2, vec![1, 1], vec![1.0, 0.0, 0.0, 1.0]), Err(Error::DuplicateUnit(1))));
        assert!(EmbeddingBlock::new(2, vec![1], vec![1.0]).is_err());
        let b = EmbeddingBlock::from_raw(2, vec![4], vec![3.0, 4.0]).unwrap();
        assert!((norm(b.row(0)) - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn dissimilarity_is_bounded_and_symmetric(
            a in proptest::collection::vec(-1f32..1.0, 16),
            b in proptest::collection::vec(-1f32..1.0, 16),
        ) {
            prop_assume!(norm(&a) > 1e-3 && norm(&b) > 1e-3);
            let a = normalize(&a).unwrap();
            let b = normalize(&b).unwrap();
            let ab = cosine(&a, &b).unwrap();
            prop_assert!((0.0..=2.0).contains(&(1.0 - ab)));
            prop_assert_eq!(ab, cosine(&b, &a).unwrap());
            prop_assert!(1.0 - cosine(&a, &a).unwrap() < 1e-6);
        }

        #[test]
        fn normalize_is_scale_free(v in proptest::collection::vec(-1f32..1.0, 8), s in 0.01f32..100.0) {
            prop_assume!(norm(&v) > 1e-3);
            let scaled: Vec<f32> = v.iter().map(|x| x * s).collect();
            let a = normalize(&v).unwrap();
            let b = normalize(&scaled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }
}
