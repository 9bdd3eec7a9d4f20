//! Exact NNK machinery used to validate the image construction.
//!
//! At node `i` with candidate set `S` the NNK weights solve
//!
//! ```text
//! min_{theta >= 0}  1 - 2 theta . k_i + theta' K_S theta
//! ```
//!
//! where `K_S` holds kernel values among the candidates and `k_i` kernel
//! values between `i` and each candidate. The solver below is an active-set
//! (Lawson-Hanson) method with a fresh Cholesky factorization per pivot.

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::image::Image;
use crate::kernel::{check_window_fits, sq_dist, KernelParams};
use crate::lattice::WindowPlan;
use crate::par::{self, Execution};

/// Weights below this are treated as "no edge".
pub const ZERO_SUPPORT: f64 = 1e-9;

/// Tolerance on the KKT conditions of a returned solution.
pub const KKT_TOLERANCE: f64 = 1e-9;

const MAX_OUTER_ITERS_FACTOR: usize = 3;

/// Kernel Gram matrix of a candidate set and its similarities to the center.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalKernelSystem {
    size: usize,
    gram: Vec<f64>,
    target: Vec<f64>,
}

impl LocalKernelSystem {
    /// `gram` is row-major `n x n`, `target` has length `n`.
    pub fn new(gram: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        let n = target.len();
        if gram.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: gram.len(),
            });
        }
        if gram.iter().chain(&target).any(|v| !v.is_finite()) {
            return Err(Error::NumericalDomain("non-finite kernel value".into()));
        }
        for a in 0..n {
            for b in 0..a {
                let (x, y) = (gram[a * n + b], gram[b * n + a]);
                if (x - y).abs() > 1e-12 * x.abs().max(y.abs()).max(1.0) {
                    return Err(Error::NumericalDomain(format!(
                        "kernel matrix not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(LocalKernelSystem {
            size: n,
            gram,
            target,
        })
    }

    /// Bilateral system for center `i` and candidate pixels `s`.
    pub fn bilateral(img: &Image, p: &KernelParams, center: usize, candidates: &[usize]) -> Self {
        let w = img.width();
        let pos = |q: usize| [(q % w) as f64, (q / w) as f64];
        let weight = |a: usize, b: usize| {
            p.spatial(sq_dist(&pos(a), &pos(b))) * p.range(sq_dist(img.pixel(a), img.pixel(b)))
        };
        let n = candidates.len();
        let mut gram = vec![0.0; n * n];
        for a in 0..n {
            gram[a * n + a] = 1.0;
            for b in 0..a {
                let v = weight(candidates[a], candidates[b]);
                gram[a * n + b] = v;
                gram[b * n + a] = v;
            }
        }
        let target = candidates.iter().map(|&q| weight(center, q)).collect();
        LocalKernelSystem {
            size: n,
            gram,
            target,
        }
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    #[inline]
    pub fn gram(&self, a: usize, b: usize) -> f64 {
        self.gram[a * self.size + b]
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// `||phi_i - Phi_S theta||^2` with `k(i, i) = 1`.
    pub fn objective(&self, theta: &[f64]) -> f64 {
        let n = self.size;
        let mut quad = 0.0;
        for a in 0..n {
            let row = &self.gram[a * n..(a + 1) * n];
            quad += theta[a] * row.iter().zip(theta).map(|(g, t)| g * t).sum::<f64>();
        }
        1.0 - 2.0 * theta.iter().zip(&self.target).map(|(t, k)| t * k).sum::<f64>() + quad
    }

    /// `K_S theta - k_i`.
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let n = self.size;
        (0..n)
            .map(|a| {
                self.gram[a * n..(a + 1) * n]
                    .iter()
                    .zip(theta)
                    .map(|(g, t)| g * t)
                    .sum::<f64>()
                    - self.target[a]
            })
            .collect()
    }

    /// Rounding bound on `gradient(theta)[a]`. Kernel values can be tiny,
    /// so the bound scales with the terms actually summed.
    fn gradient_noise(&self, a: usize, theta: &[f64]) -> f64 {
        let row = &self.gram[a * self.size..(a + 1) * self.size];
        let mag: f64 = row.iter().zip(theta).map(|(k, t)| (k * t).abs()).sum();
        64.0 * f64::EPSILON * (self.target[a].abs() + mag)
    }

    fn sub_gram(&self, idx: &[usize]) -> Vec<f64> {
        let m = idx.len();
        let mut out = vec![0.0; m * m];
        for (r, &a) in idx.iter().enumerate() {
            for (c, &b) in idx.iter().enumerate() {
                out[r * m + c] = self.gram(a, b);
            }
        }
        out
    }
}

/// In-place Cholesky of a row-major SPD matrix (lower factor). Returns the
/// first non-positive pivot on failure.
fn cholesky(a: &mut [f64], n: usize) -> std::result::Result<(), (usize, f64)> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return Err((j, d));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Ok(())
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

fn ensure_psd(sys: &LocalKernelSystem) -> Result<()> {
    let n = sys.size;
    if n == 0 {
        return Ok(());
    }
    let scale = (0..n).map(|a| sys.gram(a, a).abs()).fold(0.0, f64::max).max(1.0);
    let mut a = sys.gram.clone();
    let jitter = 1e-10 * scale;
    for d in 0..n {
        a[d * n + d] += jitter;
    }
    cholesky(&mut a, n).map_err(|(j, pivot)| {
        Error::NumericalDomain(format!(
            "kernel matrix is not positive semidefinite (pivot {pivot:.3e} at {j})"
        ))
    })
}

/// Exact non-negative solution of the local NNK problem.
pub fn solve_nnk_exact(sys: &LocalKernelSystem) -> Result<Vec<f64>> {
    ensure_psd(sys)?;
    let n = sys.size;
    let mut theta = vec![0.0; n];
    let mut active: Vec<usize> = Vec::new();
    let mut excluded = vec![false; n];

    for _ in 0..MAX_OUTER_ITERS_FACTOR * n + 1 {
        // w = k_i - K theta: descent direction for inactive coordinates
        let grad = sys.gradient(&theta);
        let pick = (0..n)
            .filter(|&a| !excluded[a] && !active.contains(&a))
            .map(|a| (a, -grad[a]))
            .filter(|&(a, w)| w > sys.gradient_noise(a, &theta))
            .max_by(|x, y| x.1.total_cmp(&y.1));
        let Some((t, _)) = pick else { break };
        active.push(t);

        loop {
            let mut l = sys.sub_gram(&active);
            if cholesky(&mut l, active.len()).is_err() {
                // t is numerically dependent on the current support
                active.retain(|&a| a != t);
                excluded[t] = true;
                break;
            }
            let rhs: Vec<f64> = active.iter().map(|&a| sys.target[a]).collect();
            let z = cholesky_solve(&l, active.len(), &rhs);
            if z.iter().all(|&v| v > 0.0) {
                for (&a, &v) in active.iter().zip(&z) {
                    theta[a] = v;
                }
                break;
            }
            // step toward z until the first coordinate hits zero
            let mut alpha = f64::INFINITY;
            for (&a, &v) in active.iter().zip(&z) {
                if v <= 0.0 {
                    alpha = alpha.min(theta[a] / (theta[a] - v));
                }
            }
            for (&a, &v) in active.iter().zip(&z) {
                theta[a] += alpha * (v - theta[a]);
            }
            active.retain(|&a| {
                if theta[a] <= 1e-15 {
                    theta[a] = 0.0;
                    false
                } else {
                    true
                }
            });
            if active.is_empty() {
                break;
            }
        }
    }
    Ok(theta)
}

/// Checks the KKT conditions of `theta` for `sys`.
pub fn satisfies_kkt(sys: &LocalKernelSystem, theta: &[f64], eps: f64) -> bool {
    let g = sys.gradient(theta);
    let comp: f64 = theta.iter().zip(&g).map(|(t, v)| t * v).sum();
    theta.iter().all(|&t| t >= 0.0) && g.iter().all(|&v| v >= -eps) && comp.abs() <= eps
}

/// Closed-form NNK weights for a two-atom dictionary, projected onto the
/// non-negative orthant.
pub fn solve_two_node(kij: f64, kik: f64, kjk: f64) -> Result<(f64, f64)> {
    if !(kjk < 1.0) {
        return Err(Error::NumericalDomain(format!(
            "degenerate dictionary: K_jk = {kjk} >= 1"
        )));
    }
    let denom = 1.0 - kjk * kjk;
    let tj = (kij - kjk * kik) / denom;
    let tk = (kik - kjk * kij) / denom;
    Ok(if tk <= 0.0 {
        (kij.max(0.0), 0.0)
    } else if tj <= 0.0 {
        (0.0, kik.max(0.0))
    } else {
        (tj, tk)
    })
}

/// Kernel ratio interval test: `true` when `k` is disconnected from `i`
/// given that `j` is connected, i.e. `K_ij / K_ik >= 1 / K_jk`.
#[inline]
pub fn kri_check(kij: f64, kik: f64, kjk: f64) -> bool {
    kij * kjk >= kik
}

/// Exact NNK weights at one pixel over all in-image window neighbors, as
/// `(pixel index, weight)` with weights above [`ZERO_SUPPORT`].
pub fn exact_nnk_pixel(
    img: &Image,
    plan: &WindowPlan,
    p: &KernelParams,
    row: usize,
    col: usize,
) -> Result<Vec<(usize, f64)>> {
    let cand: Vec<usize> = plan
        .valid_neighbors(row, col, img.height(), img.width())
        .into_iter()
        .map(|(_, px)| px)
        .collect();
    let sys = LocalKernelSystem::bilateral(img, p, row * img.width() + col, &cand);
    let theta = solve_nnk_exact(&sys)?;
    Ok(cand
        .into_iter()
        .zip(theta)
        .filter(|&(_, t)| t > ZERO_SUPPORT)
        .collect())
}

/// Row-wise exact NNK graph over the window. Rows hold the solved weights.
pub fn build_exact_nnk_directed(
    img: &Image,
    plan: &WindowPlan,
    p: &KernelParams,
    exec: Execution,
) -> Result<SparseGraph> {
    check_window_fits(img, plan)?;
    let w = img.width();
    let rows = par::map_range(exec, img.num_pixels(), |i| {
        exact_nnk_pixel(img, plan, p, i / w, i % w)
            .map(|r| r.into_iter().map(|(j, t)| (j as u32, t)).collect::<Vec<_>>())
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SparseGraph::from_rows(img.num_pixels(), rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two(kij: f64, kik: f64, kjk: f64) -> LocalKernelSystem {
        LocalKernelSystem::new(vec![1.0, kjk, kjk, 1.0], vec![kij, kik]).unwrap()
    }

    #[test]
    fn singleton_projects() {
        let sys = LocalKernelSystem::new(vec![1.0], vec![0.37]).unwrap();
        assert_eq!(solve_nnk_exact(&sys).unwrap(), vec![0.37]);
    }

    #[test]
    fn interior_two_atom_solution() {
        let theta = solve_nnk_exact(&two(0.8, 0.6, 0.5)).unwrap();
        assert_relative_eq!(theta[0], 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(theta[1], 4.0 / 15.0, max_relative = 1e-14);
        let (a, b) = solve_two_node(0.8, 0.6, 0.5).unwrap();
        assert_relative_eq!(a, 0.666667, epsilon = 1e-6);
        assert_relative_eq!(b, 0.266667, epsilon = 1e-6);
        assert!(!kri_check(0.8, 0.6, 0.5));
    }

    #[test]
    fn clamped_two_atom_solution() {
        assert_eq!(solve_nnk_exact(&two(0.9, 0.2, 0.3)).unwrap(), vec![0.9, 0.0]);
        assert_eq!(solve_two_node(0.9, 0.2, 0.3).unwrap(), (0.9, 0.0));
        assert!(kri_check(0.9, 0.2, 0.3));
        assert_eq!(solve_two_node(0.2, 0.9, 0.3).unwrap(), (0.0, 0.9));
    }

    #[test]
    fn equal_similarities_split_evenly() {
        for kjk in [0.0, 0.2, 0.7, 0.95] {
            let (a, b) = solve_two_node(0.6, 0.6, kjk).unwrap();
            assert_eq!(a, b);
            assert!(!kri_check(0.6, 0.6, kjk) || kjk == 1.0);
        }
    }

    #[test]
    fn degenerate_and_non_psd() {
        assert!(matches!(solve_two_node(0.5, 0.5, 1.0), Err(Error::NumericalDomain(_))));
        let bad = LocalKernelSystem::new(vec![1.0, 2.0, 2.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(solve_nnk_exact(&bad), Err(Error::NumericalDomain(_))));
        assert!(LocalKernelSystem::new(vec![1.0, 0.2, 0.3, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn empty_system() {
        let sys = LocalKernelSystem::new(vec![], vec![]).unwrap();
        assert!(solve_nnk_exact(&sys).unwrap().is_empty());
    }

    fn random_gaussian_system(points: &[(f64, f64)], center: (f64, f64), s: f64) -> LocalKernelSystem {
        let k = |a: (f64, f64), b: (f64, f64)| {
            (-((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)) / (2.0 * s * s)).exp()
        };
        let n = points.len();
        let mut gram = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                gram[a * n + b] = k(points[a], points[b]);
            }
        }
        let target = points.iter().map(|&q| k(center, q)).collect();
        LocalKernelSystem::new(gram, target).unwrap()
    }

    fn point_set() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..12).prop_filter(
            "distinct points",
            |pts| {
                pts.iter().enumerate().all(|(a, p)| {
                    pts[..a].iter().all(|q| (p.0 - q.0).abs() + (p.1 - q.1).abs() > 0.05)
                })
            },
        )
    }

    proptest! {
        #[test]
        fn solutions_satisfy_kkt(pts in point_set(), cx in -1.0f64..1.0, cy in -1.0f64..1.0) {
            let sys = random_gaussian_system(&pts, (cx, cy), 1.0);
            let theta = solve_nnk_exact(&sys).unwrap();
            prop_assert!(satisfies_kkt(&sys, &theta, KKT_TOLERANCE));
        }

        #[test]
        fn feasible_perturbations_never_improve(pts in point_set(), cx in -1.0f64..1.0, cy in -1.0f64..1.0) {
            let sys = random_gaussian_system(&pts, (cx, cy), 1.0);
            let theta = solve_nnk_exact(&sys).unwrap();
            let base = sys.objective(&theta);
            for a in 0..theta.len() {
                for step in [1e-4, -1e-4] {
                    let mut t = theta.clone();
                    t[a] += step;
                    if t[a] < 0.0 {
                        continue;
                    }
                    prop_assert!(sys.objective(&t) >= base - 1e-14);
                }
            }
        }

        #[test]
        fn closed_form_preserves_order(kij in 0.01f64..1.0, kik in 0.01f64..1.0, kjk in 0.0f64..0.99) {
            let denom = 1.0 - kjk * kjk;
            let tj = (kij - kjk * kik) / denom;
            let tk = (kik - kjk * kij) / denom;
            if tj > 0.0 && tk > 0.0 {
                let (a, b) = solve_two_node(kij, kik, kjk).unwrap();
                let lhs = a - b;
                let rhs = (kij - kik) * (1.0 + kjk) / denom;
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300) + 1e-15);
                prop_assert_eq!(lhs.partial_cmp(&0.0), (kij - kik).partial_cmp(&0.0));
            }
        }
    }
}
