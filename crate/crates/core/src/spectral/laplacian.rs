use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::par::{self, Execution};

pub const LANCZOS_TOLERANCE: f64 = 1e-6;
pub const LANCZOS_MAX_ITERS: usize = 200;
const LANCZOS_SAFETY: f64 = 1.01;
const ROW_CHUNK: usize = 4096;

/// Combinatorial Laplacian `L = D - W` of a symmetric graph, applied
/// matrix-free from the CSR adjacency.
#[derive(Debug)]
pub struct LaplacianOperator {
    graph: SparseGraph,
    degrees: Vec<f64>,
    exec: Execution,
    matvecs: AtomicUsize,
}

impl LaplacianOperator {
    pub fn new(graph: SparseGraph) -> Result<Self> {
        for i in 0..graph.n() {
            for (j, w) in graph.row(i) {
                match graph.weight(j, i) {
                    Some(v) if (v - w).abs() <= 1e-12 * v.abs().max(w.abs()) => {}
                    _ => {
                        return Err(Error::invalid(format!(
                            "graph is not symmetric at ({i}, {j})"
                        )))
                    }
                }
            }
        }
        let degrees = (0..graph.n()).map(|i| graph.row(i).map(|(_, w)| w).sum()).collect();
        Ok(LaplacianOperator {
            graph,
            degrees,
            exec: Execution::default(),
            matvecs: AtomicUsize::new(0),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &SparseGraph {
        &self.graph
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees.iter().copied().fold(0.0, f64::max)
    }

    /// Number of operator applications since construction or the last reset.
    pub fn matvec_count(&self) -> usize {
        self.matvecs.load(Ordering::Relaxed)
    }

    pub fn reset_matvec_count(&self) {
        self.matvecs.store(0, Ordering::Relaxed);
    }

    #[inline]
    fn row_apply(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, ws) = self.graph.row_slices(i);
        let mut s = 0.0;
        for (&c, &w) in cols.iter().zip(ws) {
            s += w * x[c as usize];
        }
        self.degrees[i] * x[i] - s
    }

    /// `y = L x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        self.matvecs.fetch_add(1, Ordering::Relaxed);
        par::for_each_chunk(self.exec, y, ROW_CHUNK, |chunk, out| {
            let base = chunk * ROW_CHUNK;
            for (t, o) in out.iter_mut().enumerate() {
                *o = self.row_apply(base + t, x);
            }
        });
        Ok(())
    }

    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n()];
        self.apply(x, &mut y)?;
        Ok(y)
    }

    /// One Chebyshev step on the shifted operator `S = scale * L - I`:
    /// `next = 2 S cur - prev`. Counts as one matvec.
    pub(crate) fn chebyshev_step(&self, scale: f64, cur: &[f64], prev: &[f64], next: &mut [f64]) {
        self.matvecs.fetch_add(1, Ordering::Relaxed);
        par::for_each_chunk(self.exec, next, ROW_CHUNK, |chunk, out| {
            let base = chunk * ROW_CHUNK;
            for (t, o) in out.iter_mut().enumerate() {
                let i = base + t;
                let s = scale * self.row_apply(i, cur) - cur[i];
                *o = 2.0 * s - prev[i];
            }
        });
    }

    /// `S x` with `S = scale * L - I`. Counts as one matvec.
    pub(crate) fn shifted_apply(&self, scale: f64, x: &[f64], y: &mut [f64]) {
        self.matvecs.fetch_add(1, Ordering::Relaxed);
        par::for_each_chunk(self.exec, y, ROW_CHUNK, |chunk, out| {
            let base = chunk * ROW_CHUNK;
            for (t, o) in out.iter_mut().enumerate() {
                let i = base + t;
                *o = scale * self.row_apply(i, x) - x[i];
            }
        });
    }

    /// `x' L x = sum over edges of w_ij (x_i - x_j)^2`.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        let y = self.apply_vec(x)?;
        Ok(x.iter().zip(&y).map(|(a, b)| a * b).sum())
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// Laplacian of a symmetric graph. The graph is copied.
pub fn build_laplacian(g: &SparseGraph) -> Result<LaplacianOperator> {
    LaplacianOperator::new(g.clone())
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `a` and off-diagonal `b`, by Sturm-sequence bisection.
fn tridiagonal_max_eig(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..k {
        let r = b.get(i).map_or(0.0, |v| v.abs()) + if i > 0 { b[i - 1].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    // number of eigenvalues strictly below x
    let below = |x: f64| {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..k {
            let off = if i > 0 { b[i - 1] * b[i - 1] } else { 0.0 };
            q = a[i] - x - if i > 0 { off / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Upper estimate of the largest Laplacian eigenvalue: the top Lanczos Ritz
/// value once its relative change drops below [`LANCZOS_TOLERANCE`] (at most
/// [`LANCZOS_MAX_ITERS`] steps), inflated by 1% and never above the
/// Gershgorin bound `2 * max degree`. Ritz values approach the extreme
/// eigenvalue from below much faster than the power-iteration Rayleigh
/// quotient, which keeps the estimate above the true value.
pub fn estimate_lambda_max(l: &LaplacianOperator) -> f64 {
    let gershgorin = 2.0 * l.max_degree();
    let n = l.n();
    if n == 0 || gershgorin == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a4b);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut v);
    let mut prev_v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut theta = f64::NAN;
    for step in 0..LANCZOS_MAX_ITERS.min(n) {
        l.apply(&v, &mut w).expect("length checked");
        let b_prev = if step > 0 { beta[step - 1] } else { 0.0 };
        let a: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
        for i in 0..n {
            w[i] -= a * v[i] + b_prev * prev_v[i];
        }
        alpha.push(a);
        let next = tridiagonal_max_eig(&alpha, &beta);
        let converged = theta.is_finite() && (next - theta).abs() <= LANCZOS_TOLERANCE * next.abs();
        theta = next;
        let b = normalize(&mut w);
        if converged || b <= 1e-12 * theta.abs().max(1.0) {
            // an exhausted Krylov space holds lambda_max exactly
            return (LANCZOS_SAFETY * theta).min(gershgorin);
        }
        beta.push(b);
        std::mem::swap(&mut prev_v, &mut v);
        std::mem::swap(&mut v, &mut w);
    }
    if n <= LANCZOS_MAX_ITERS {
        return (LANCZOS_SAFETY * theta).min(gershgorin);
    }
    log::warn!("Lanczos did not converge; using Gershgorin bound {gershgorin}");
    gershgorin
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_bisection() {
        // eigenvalues of tridiag(-1, 2, -1) of size 4: 2 - 2 cos(k pi / 5)
        let top = tridiagonal_max_eig(&[2.0; 4], &[-1.0; 3]);
        let exact = 2.0 - 2.0 * (4.0 * std::f64::consts::PI / 5.0).cos();
        assert!((top - exact).abs() < 1e-12);
        assert_eq!(tridiagonal_max_eig(&[3.5], &[]), 3.5);
    }
}
