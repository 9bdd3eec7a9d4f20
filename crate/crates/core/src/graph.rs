//! Compressed sparse row adjacency over pixels.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRAPH_MAGIC: &[u8; 4] = b"NNKG";
pub const GRAPH_FORMAT_VERSION: u32 = 1;

/// Non-negative weighted adjacency in CSR form. Columns within a row are
/// strictly increasing and never equal to the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    weights: Vec<f64>,
}

/// How the two directed values of an edge are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetrizeMode {
    #[default]
    Max,
    Average,
}

impl SparseGraph {
    /// Validating constructor. Rows are sorted by column on entry.
    pub fn from_csr(n: usize, row_ptr: Vec<usize>, col_idx: Vec<u32>, weights: Vec<f64>) -> Result<Self> {
        if row_ptr.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                actual: row_ptr.len(),
            });
        }
        if col_idx.len() != weights.len() || row_ptr[0] != 0 || row_ptr[n] != col_idx.len() {
            return Err(Error::format("inconsistent CSR array lengths"));
        }
        if n > u32::MAX as usize {
            return Err(Error::invalid("graph too large for 32-bit column indices"));
        }
        let mut g = SparseGraph {
            n,
            row_ptr,
            col_idx,
            weights,
        };
        for i in 0..n {
            let (s, e) = (g.row_ptr[i], g.row_ptr[i + 1]);
            if s > e {
                return Err(Error::format("row_ptr must be non-decreasing"));
            }
            let mut row: Vec<(u32, f64)> = g.col_idx[s..e]
                .iter()
                .copied()
                .zip(g.weights[s..e].iter().copied())
                .collect();
            row.sort_by_key(|&(c, _)| c);
            for (t, &(c, w)) in row.iter().enumerate() {
                if c as usize >= n {
                    return Err(Error::format(format!("column {c} out of range in row {i}")));
                }
                if c as usize == i {
                    return Err(Error::format(format!("self-loop at node {i}")));
                }
                if t > 0 && row[t - 1].0 == c {
                    return Err(Error::format(format!("duplicate edge ({i}, {c})")));
                }
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::format(format!("invalid weight {w} on ({i}, {c})")));
                }
                g.col_idx[s + t] = c;
                g.weights[s + t] = w;
            }
        }
        Ok(g)
    }

    /// Assembles rows produced in node order. Entries of each row are sorted
    /// by column; callers guarantee no duplicates and no self-loops.
    pub(crate) fn from_rows<I>(n: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = Vec<(u32, f64)>>,
    {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut weights = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            for (c, w) in row {
                col_idx.push(c);
                weights.push(w);
            }
            row_ptr.push(col_idx.len());
        }
        assert_eq!(row_ptr.len(), n + 1, "row count mismatch");
        SparseGraph {
            n,
            row_ptr,
            col_idx,
            weights,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored directed entries.
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    #[inline]
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&c, &w)| (c as usize, w))
    }

    #[inline]
    pub(crate) fn row_slices(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.weights[r])
    }

    /// Weight of the directed entry `(i, j)`, if stored.
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, ws) = self.row_slices(i);
        cols.binary_search(&(j as u32)).ok().map(|p| ws[p])
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weight(i, j).is_some()
    }

    /// True when every stored `(i, j)` has a stored `(j, i)` with a
    /// bit-identical weight.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.row(i)
                .all(|(j, w)| self.weight(j, i).is_some_and(|v| v.to_bits() == w.to_bits()))
        })
    }

    fn transpose(&self) -> SparseGraph {
        let mut counts = vec![0usize; self.n + 1];
        for &c in &self.col_idx {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.n {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0u32; self.nnz()];
        let mut weights = vec![0.0; self.nnz()];
        // rows visited in increasing order keep transposed rows sorted
        for i in 0..self.n {
            for (j, w) in self.row(i) {
                let p = next[j];
                col_idx[p] = i as u32;
                weights[p] = w;
                next[j] += 1;
            }
        }
        SparseGraph {
            n: self.n,
            row_ptr,
            col_idx,
            weights,
        }
    }

    /// Union of `(i, j)` and `(j, i)` supports with merged weights.
    pub fn symmetrize(&self, mode: SymmetrizeMode) -> SparseGraph {
        let t = self.transpose();
        let merge = |a: Option<f64>, b: Option<f64>| match (mode, a, b) {
            (SymmetrizeMode::Max, Some(x), Some(y)) => x.max(y),
            (SymmetrizeMode::Average, Some(x), Some(y)) => 0.5 * (x + y),
            (SymmetrizeMode::Max, Some(x), None) | (SymmetrizeMode::Max, None, Some(x)) => x,
            (SymmetrizeMode::Average, Some(x), None) | (SymmetrizeMode::Average, None, Some(x)) => {
                0.5 * x
            }
            (_, None, None) => unreachable!(),
        };
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::with_capacity(self.nnz() + self.nnz() / 4);
        let mut weights = Vec::with_capacity(col_idx.capacity());
        row_ptr.push(0);
        for i in 0..self.n {
            let (ac, aw) = self.row_slices(i);
            let (bc, bw) = t.row_slices(i);
            let (mut p, mut q) = (0, 0);
            while p < ac.len() || q < bc.len() {
                let (c, w) = match (ac.get(p), bc.get(q)) {
                    (Some(&x), Some(&y)) if x == y => {
                        p += 1;
                        q += 1;
                        (x, merge(Some(aw[p - 1]), Some(bw[q - 1])))
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        p += 1;
                        (x, merge(Some(aw[p - 1]), None))
                    }
                    (Some(&x), None) => {
                        p += 1;
                        (x, merge(Some(aw[p - 1]), None))
                    }
                    (_, Some(&y)) => {
                        q += 1;
                        (y, merge(None, Some(bw[q - 1])))
                    }
                    (None, None) => unreachable!(),
                };
                col_idx.push(c);
                weights.push(w);
            }
            row_ptr.push(col_idx.len());
        }
        SparseGraph {
            n: self.n,
            row_ptr,
            col_idx,
            weights,
        }
    }

    /// `true` if every stored entry of `self` is also stored in `other`.
    pub fn is_subgraph_of(&self, other: &SparseGraph) -> bool {
        self.n == other.n && (0..self.n).all(|i| self.row(i).all(|(j, _)| other.has_edge(i, j)))
    }

    pub fn stats(&self) -> GraphStats {
        graph_stats(self)
    }

    /// Mean number of stored neighbors over pixels at least `margin` away
    /// from every border of a `height x width` lattice.
    pub fn interior_mean_degree(&self, height: usize, width: usize, margin: usize) -> Option<f64> {
        if height * width != self.n || height <= 2 * margin || width <= 2 * margin {
            return None;
        }
        let mut total = 0usize;
        let mut count = 0usize;
        for r in margin..height - margin {
            for c in margin..width - margin {
                total += self.degree(r * width + c);
                count += 1;
            }
        }
        Some(total as f64 / count as f64)
    }

    /// Writes the little-endian binary CSR layout:
    /// `"NNKG"`, version u32, n u64, nnz u64, row_ptr u64[n+1],
    /// col_idx u32[nnz], weights f32[nnz].
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(GRAPH_MAGIC)?;
        w.write_all(&GRAPH_FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.nnz() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * (self.n + 1) + 8 * self.nnz());
        for &p in &self.row_ptr {
            buf.extend_from_slice(&(p as u64).to_le_bytes());
        }
        for &c in &self.col_idx {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        for &x in &self.weights {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Inverse of [`write_binary`](Self::write_binary). Weights come back at
    /// `f32` precision.
    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::format("truncated graph header"))?;
        if &magic != GRAPH_MAGIC {
            return Err(Error::format("not an NNKG graph file"));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        let mut read = |buf: &mut [u8]| {
            r.read_exact(buf)
                .map_err(|_| Error::format("truncated graph file"))
        };
        read(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != GRAPH_FORMAT_VERSION {
            return Err(Error::format(format!("unsupported graph format version {version}")));
        }
        read(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        read(&mut b8)?;
        let nnz = u64::from_le_bytes(b8) as usize;
        let mut row_ptr = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            read(&mut b8)?;
            row_ptr.push(u64::from_le_bytes(b8) as usize);
        }
        let mut col_idx = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            read(&mut b4)?;
            col_idx.push(u32::from_le_bytes(b4));
        }
        let mut weights = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            read(&mut b4)?;
            weights.push(f32::from_le_bytes(b4) as f64);
        }
        SparseGraph::from_csr(n, row_ptr, col_idx, weights)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_binary(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_binary(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Edge and degree accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    /// Stored directed entries.
    pub directed_edges: usize,
    /// Unordered pairs `{i, j}` with at least one stored direction.
    pub undirected_edges: usize,
    pub mean_degree: f64,
    pub max_degree: usize,
    /// `degree_histogram[d]` = number of nodes with `d` stored neighbors.
    pub degree_histogram: Vec<usize>,
    pub weight_sum: f64,
}

pub fn graph_stats(g: &SparseGraph) -> GraphStats {
    let mut hist = Vec::new();
    let mut undirected = 0usize;
    for i in 0..g.n() {
        let d = g.degree(i);
        if hist.len() <= d {
            hist.resize(d + 1, 0);
        }
        hist[d] += 1;
        for (j, _) in g.row(i) {
            if i < j || !g.has_edge(j, i) {
                undirected += 1;
            }
        }
    }
    GraphStats {
        nodes: g.n(),
        directed_edges: g.nnz(),
        undirected_edges: undirected,
        mean_degree: if g.n() == 0 { 0.0 } else { g.nnz() as f64 / g.n() as f64 },
        max_degree: hist.len().saturating_sub(1),
        degree_histogram: hist,
        weight_sum: g.weights().iter().sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid4(h: usize, w: usize) -> SparseGraph {
        let rows = (0..h * w).map(|i| {
            let (r, c) = (i / w, i % w);
            let mut row = Vec::new();
            if r > 0 {
                row.push(((i - w) as u32, 1.0));
            }
            if c > 0 {
                row.push(((i - 1) as u32, 1.0));
            }
            if c + 1 < w {
                row.push(((i + 1) as u32, 1.0));
            }
            if r + 1 < h {
                row.push(((i + w) as u32, 1.0));
            }
            row
        });
        SparseGraph::from_rows(h * w, rows)
    }

    #[test]
    fn grid_edge_count() {
        for (h, w) in [(3, 4), (10, 7), (64, 64)] {
            let s = grid4(h, w).stats();
            assert_eq!(s.undirected_edges, 2 * h * w - h - w);
            assert_eq!(s.directed_edges, 2 * s.undirected_edges);
        }
    }

    #[test]
    fn one_directed_edge_max_and_average() {
        let g = SparseGraph::from_csr(3, vec![0, 1, 1, 1], vec![2], vec![0.8]).unwrap();
        assert!(!g.is_symmetric());
        let s = g.symmetrize(SymmetrizeMode::Max);
        assert_eq!(s.weight(0, 2), Some(0.8));
        assert_eq!(s.weight(2, 0), Some(0.8));
        let a = g.symmetrize(SymmetrizeMode::Average);
        assert_eq!(a.weight(0, 2), Some(0.4));
        assert_eq!(a.weight(2, 0), Some(0.4));
        assert_eq!(g.stats().undirected_edges, 1);
    }

    #[test]
    fn symmetric_graph_unchanged() {
        let g = grid4(5, 6);
        assert_eq!(g.symmetrize(SymmetrizeMode::Max), g);
        assert_eq!(g.symmetrize(SymmetrizeMode::Average), g);
    }

    #[test]
    fn csr_validation() {
        assert!(SparseGraph::from_csr(2, vec![0, 1, 1], vec![0], vec![1.0]).is_err());
        assert!(SparseGraph::from_csr(2, vec![0, 2, 2], vec![1, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseGraph::from_csr(2, vec![0, 1, 1], vec![5], vec![1.0]).is_err());
        assert!(SparseGraph::from_csr(2, vec![0, 1, 1], vec![1], vec![-1.0]).is_err());
        assert!(SparseGraph::from_csr(2, vec![0, 1], vec![1], vec![1.0]).is_err());
        let g = SparseGraph::from_csr(3, vec![0, 2, 2, 2], vec![2, 1], vec![0.5, 0.25]).unwrap();
        assert_eq!(g.col_idx(), &[1, 2]);
        assert_eq!(g.weights(), &[0.25, 0.5]);
    }

    #[test]
    fn binary_layout() {
        let g = SparseGraph::from_csr(2, vec![0, 1, 2], vec![1, 0], vec![0.5, 0.5]).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"NNKG");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[16..24].try_into().unwrap()), 2);
        assert_eq!(buf.len(), 24 + 3 * 8 + 2 * 4 + 2 * 4);
        assert_eq!(SparseGraph::read_binary(&buf[..]).unwrap(), g);
        assert!(SparseGraph::read_binary(&buf[..30]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(SparseGraph::read_binary(&bad[..]).is_err());
    }

    fn random_directed() -> impl Strategy<Value = SparseGraph> {
        (2usize..12).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n, 0.01f64..1.0), 0..40).prop_map(move |edges| {
                let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
                for (i, j, w) in edges {
                    if i != j && !rows[i].iter().any(|&(c, _)| c as usize == j) {
                        rows[i].push((j as u32, w));
                    }
                }
                SparseGraph::from_rows(n, rows)
            })
        })
    }

    proptest! {
        #[test]
        fn symmetrize_idempotent(g in random_directed()) {
            for mode in [SymmetrizeMode::Max, SymmetrizeMode::Average] {
                let s = g.symmetrize(mode);
                prop_assert!(s.is_symmetric());
                prop_assert_eq!(s.symmetrize(mode), s.clone());
                prop_assert!(g.is_subgraph_of(&s));
                prop_assert_eq!(s.nnz(), 2 * g.stats().undirected_edges);
            }
        }

        #[test]
        fn binary_round_trip_f32_weights(g in random_directed()) {
            let mut buf = Vec::new();
            g.write_binary(&mut buf).unwrap();
            let back = SparseGraph::read_binary(&buf[..]).unwrap();
            prop_assert_eq!(back.row_ptr(), g.row_ptr());
            prop_assert_eq!(back.col_idx(), g.col_idx());
            for (a, b) in back.weights().iter().zip(g.weights()) {
                prop_assert_eq!(*a, *b as f32 as f64);
            }
        }
    }
}
