#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nnk_image::{read_pgm, Image, SparseGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EMBEDDED: [&str; 3] = ["camera", "astronaut", "chelsea"];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn embedded(name: &str) -> Image {
    read_pgm(data_dir().join(format!("{name}.pgm"))).unwrap().image
}

pub fn embedded_all() -> Vec<(String, Image)> {
    EMBEDDED.iter().map(|n| (n.to_string(), embedded(n))).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Image {
    let data = (0..h * w).map(|_| rng.random_range(0.0..255.0)).collect();
    Image::gray(h, w, data).unwrap()
}

pub fn random_signal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Unit-weight 4-connected grid.
pub fn grid_graph(h: usize, w: usize) -> SparseGraph {
    let mut row_ptr = vec![0];
    let mut cols = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if r > 0 {
                cols.push((i - w) as u32);
            }
            if c > 0 {
                cols.push((i - 1) as u32);
            }
            if c + 1 < w {
                cols.push((i + 1) as u32);
            }
            if r + 1 < h {
                cols.push((i + w) as u32);
            }
            row_ptr.push(cols.len());
        }
    }
    let weights = vec![1.0; cols.len()];
    SparseGraph::from_csr(h * w, row_ptr, cols, weights).unwrap()
}

/// Path graph with the given edge weights.
pub fn path_graph(weights: &[f64]) -> SparseGraph {
    let n = weights.len() + 1;
    let mut row_ptr = vec![0];
    let mut cols = Vec::new();
    let mut ws = Vec::new();
    for i in 0..n {
        if i > 0 {
            cols.push((i - 1) as u32);
            ws.push(weights[i - 1]);
        }
        if i + 1 < n {
            cols.push((i + 1) as u32);
            ws.push(weights[i]);
        }
        row_ptr.push(cols.len());
    }
    SparseGraph::from_csr(n, row_ptr, cols, ws).unwrap()
}

pub fn dense_laplacian(g: &SparseGraph) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, w) in g.row(i) {
            l[(i, j)] -= w;
            l[(i, i)] += w;
        }
    }
    l
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors.
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn spectrum(g: &SparseGraph) -> Spectrum {
    let eig = SymmetricEigen::new(dense_laplacian(g));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    Spectrum { values, vectors }
}

impl Spectrum {
    pub fn lambda_max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// `U diag(kernel(lambda)) U^T f`.
    pub fn filter(&self, kernel: impl Fn(f64) -> f64, f: &[f64]) -> Vec<f64> {
        let fv = DVector::from_column_slice(f);
        let hat = self.vectors.transpose() * fv;
        let scaled = DVector::from_iterator(hat.len(), hat.iter().zip(&self.values).map(|(c, &l)| c * kernel(l)));
        (&self.vectors * scaled).iter().copied().collect()
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(f64::MIN_POSITIVE)
}
