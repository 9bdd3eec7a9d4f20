//! Bilateral kernel, dense window (BF) graphs and the classical bilateral
//! filter `D^-1 K f`.

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::image::Image;
use crate::lattice::WindowPlan;
use crate::par::{self, Execution};

/// Spatial and intensity bandwidths of the bilateral kernel.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelParams {
    sigma_d: f64,
    sigma_f: f64,
}

impl KernelParams {
    pub fn new(sigma_d: f64, sigma_f: f64) -> Result<Self> {
        for (name, v) in [("sigma_d", sigma_d), ("sigma_f", sigma_f)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(KernelParams { sigma_d, sigma_f })
    }

    /// `sigma_d = w / 4`, `sigma_f = 30` on the 8-bit intensity scale.
    pub fn default_for_window(window: usize) -> Self {
        KernelParams {
            sigma_d: window as f64 / 4.0,
            sigma_f: 30.0,
        }
    }

    pub fn sigma_d(&self) -> f64 {
        self.sigma_d
    }

    pub fn sigma_f(&self) -> f64 {
        self.sigma_f
    }

    /// Pruning slope `(sigma_f / sigma_d)^2`.
    pub fn mu(&self) -> f64 {
        let r = self.sigma_f / self.sigma_d;
        r * r
    }

    #[inline]
    pub fn spatial(&self, dist2: f64) -> f64 {
        (-dist2 / (2.0 * self.sigma_d * self.sigma_d)).exp()
    }

    #[inline]
    pub fn range(&self, diff2: f64) -> f64 {
        (-diff2 / (2.0 * self.sigma_f * self.sigma_f)).exp()
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Bilateral edge weight between two pixels with positions `xi`, `xj` and
/// intensity vectors `fi`, `fj`.
pub fn bilateral_weight(p: &KernelParams, xi: [f64; 2], xj: [f64; 2], fi: &[f64], fj: &[f64]) -> f64 {
    debug_assert_eq!(fi.len(), fj.len());
    p.spatial(sq_dist(&xi, &xj)) * p.range(sq_dist(fi, fj))
}

/// Spatial kernel value for every plan offset.
pub(crate) fn spatial_table(plan: &WindowPlan, p: &KernelParams) -> Vec<f64> {
    plan.offsets()
        .iter()
        .map(|o| p.spatial(o.norm2() as f64))
        .collect()
}

pub(crate) fn check_window_fits(img: &Image, plan: &WindowPlan) -> Result<()> {
    if plan.window() > img.height().min(img.width()) {
        return Err(Error::invalid(format!(
            "window {} larger than {}x{} image",
            plan.window(),
            img.height(),
            img.width()
        )));
    }
    Ok(())
}

/// Connects every pixel to all in-image window neighbors with bilateral
/// weights. The result is symmetric and has no self-loops.
pub fn build_bf_graph(img: &Image, plan: &WindowPlan, p: &KernelParams) -> Result<SparseGraph> {
    build_bf_graph_with(img, plan, p, Execution::default())
}

pub fn build_bf_graph_with(
    img: &Image,
    plan: &WindowPlan,
    p: &KernelParams,
    exec: Execution,
) -> Result<SparseGraph> {
    check_window_fits(img, plan)?;
    let spatial = spatial_table(plan, p);
    let (h, w) = (img.height(), img.width());
    let rows = par::map_range(exec, h, |r| {
        let mut out = Vec::with_capacity(w);
        for c in 0..w {
            let i = r * w + c;
            let fi = img.pixel(i);
            let mut row = Vec::with_capacity(plan.len());
            plan.for_each_valid(r, c, h, w, |idx, j| {
                let wgt = spatial[idx] * p.range(sq_dist(fi, img.pixel(j)));
                row.push((j as u32, wgt));
            });
            out.push(row);
        }
        out
    });
    Ok(SparseGraph::from_rows(img.num_pixels(), rows.into_iter().flatten()))
}

/// Normalized bilateral filter. With `include_self` the center pixel
/// contributes with weight 1.
pub fn bf_filter(img: &Image, plan: &WindowPlan, p: &KernelParams, include_self: bool) -> Result<Image> {
    bf_filter_with(img, plan, p, include_self, Execution::default())
}

pub fn bf_filter_with(
    img: &Image,
    plan: &WindowPlan,
    p: &KernelParams,
    include_self: bool,
    exec: Execution,
) -> Result<Image> {
    let spatial = spatial_table(plan, p);
    let (h, w, ch) = (img.height(), img.width(), img.channels());
    let mut out = vec![0.0; img.data().len()];
    par::for_each_chunk(exec, &mut out, w * ch, |r, out_row| {
        let mut acc = vec![0.0; ch];
        for c in 0..w {
            let i = r * w + c;
            let fi = img.pixel(i);
            let mut norm = 0.0;
            acc.iter_mut().for_each(|a| *a = 0.0);
            if include_self {
                norm = 1.0;
                acc.copy_from_slice(fi);
            }
            plan.for_each_valid(r, c, h, w, |idx, j| {
                let fj = img.pixel(j);
                let k = spatial[idx] * p.range(sq_dist(fi, fj));
                norm += k;
                acc.iter_mut().zip(fj).for_each(|(a, v)| *a += k * v);
            });
            let dst = &mut out_row[c * ch..(c + 1) * ch];
            if norm > 0.0 {
                dst.iter_mut().zip(&acc).for_each(|(d, a)| *d = a / norm);
            } else {
                // isolated pixel: all neighbor weights underflowed
                dst.copy_from_slice(fi);
            }
        }
    });
    img.with_data(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::precompute_window;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn weight_examples() {
        let p = KernelParams::new(1.0, 1.0).unwrap();
        assert_eq!(bilateral_weight(&p, [3.0, 4.0], [3.0, 4.0], &[7.0], &[7.0]), 1.0);
        assert_relative_eq!(
            bilateral_weight(&p, [0.0, 0.0], [1.0, 0.0], &[5.0], &[5.0]),
            0.6065306597126334,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            bilateral_weight(&p, [0.0, 0.0], [0.0, 1.0], &[5.0], &[6.0]),
            0.36787944117144233,
            max_relative = 1e-15
        );
    }

    #[test]
    fn params_validation() {
        assert!(KernelParams::new(0.0, 1.0).is_err());
        assert!(KernelParams::new(1.0, -2.0).is_err());
        assert!(KernelParams::new(f64::NAN, 1.0).is_err());
        let p = KernelParams::new(2.0, 30.0).unwrap();
        assert_relative_eq!(p.mu(), 225.0);
    }

    #[test]
    fn bf_graph_constant_image() {
        let img = Image::constant(8, 8, 42.0);
        let plan = precompute_window(3).unwrap();
        let p = KernelParams::new(1.5, 10.0).unwrap();
        let g = build_bf_graph(&img, &plan, &p).unwrap();
        assert_eq!(g.degree(3 * 8 + 3), 8);
        assert!(g.is_symmetric());
        let expected = (-1.0 / (2.0 * 1.5 * 1.5f64)).exp();
        for i in 0..g.n() {
            for (j, w) in g.row(i) {
                assert_ne!(i, j);
                let (ri, ci) = (i / 8, i % 8);
                let (rj, cj) = (j / 8, j % 8);
                if ri.abs_diff(rj) + ci.abs_diff(cj) == 1 {
                    assert_relative_eq!(w, expected, max_relative = 1e-15);
                }
            }
        }
    }

    #[test]
    fn bf_graph_edge_count_matches_enumeration() {
        let img = Image::from_fn(8, 8, |r, c| ((r * 31 + c * 17) % 255) as f64).unwrap();
        for w in [3usize, 5, 7] {
            let plan = precompute_window(w).unwrap();
            let g = build_bf_graph(&img, &plan, &KernelParams::default_for_window(w)).unwrap();
            let r = (w / 2) as i64;
            let mut count = 0;
            for a in 0..64i64 {
                for b in 0..64i64 {
                    let (ra, ca, rb, cb) = (a / 8, a % 8, b / 8, b % 8);
                    if a != b && (ra - rb).abs() <= r && (ca - cb).abs() <= r {
                        count += 1;
                    }
                }
            }
            assert_eq!(g.nnz(), count);
        }
    }

    #[test]
    fn window_larger_than_image() {
        let img = Image::constant(4, 10, 0.0);
        let plan = precompute_window(5).unwrap();
        let p = KernelParams::default_for_window(5);
        assert!(matches!(build_bf_graph(&img, &plan, &p), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn filter_two_pixel_example() {
        let img = Image::gray(1, 2, vec![0.0, 100.0]).unwrap();
        let plan = precompute_window(3).unwrap();
        let p = KernelParams::new(1.0, 100.0).unwrap();
        let out = bf_filter(&img, &plan, &p, true).unwrap();
        // 100^2 / (2 * 100^2) = 0.5
        let k: f64 = (-0.5f64 - 0.5).exp();
        assert_relative_eq!(out.data()[0], 100.0 * k / (1.0 + k), max_relative = 1e-14);
        assert_relative_eq!(out.data()[0], 26.894, epsilon = 1e-3);
        assert_relative_eq!(out.data()[1], 100.0 / (1.0 + k), max_relative = 1e-14);

        // range exponent 0.005 needs sigma_f = 1000
        let p = KernelParams::new(1.0, 1000.0).unwrap();
        let out = bf_filter(&img, &plan, &p, true).unwrap();
        let k: f64 = (-0.5f64 - 0.005).exp();
        assert_relative_eq!(k, 0.603506, epsilon = 1e-6);
        assert_relative_eq!(out.data()[0], 100.0 * k / (1.0 + k), max_relative = 1e-14);
        assert_relative_eq!(out.data()[0], 37.636, epsilon = 1e-3);
    }

    #[test]
    fn filter_sequential_matches_parallel() {
        let img = Image::from_fn(20, 17, |r, c| ((r * 13 + c * 29) % 97) as f64).unwrap();
        let plan = precompute_window(5).unwrap();
        let p = KernelParams::new(1.3, 20.0).unwrap();
        let a = bf_filter_with(&img, &plan, &p, true, Execution::Sequential).unwrap();
        let b = bf_filter_with(&img, &plan, &p, true, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn weight_symmetric_and_single_exponential(
            xi in (-50.0f64..50.0, -50.0f64..50.0),
            xj in (-50.0f64..50.0, -50.0f64..50.0),
            fi in 0.0f64..255.0,
            fj in 0.0f64..255.0,
            sd in 0.5f64..6.0,
            sf in 5.0f64..80.0,
        ) {
            let p = KernelParams::new(sd, sf).unwrap();
            let a = [xi.0, xi.1];
            let b = [xj.0, xj.1];
            let wij = bilateral_weight(&p, a, b, &[fi], &[fj]);
            let wji = bilateral_weight(&p, b, a, &[fj], &[fi]);
            prop_assert_eq!(wij.to_bits(), wji.to_bits());
            prop_assert!(wij >= 0.0);
            prop_assert!(wij <= 1.0);

            let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
            let f2 = (fi - fj).powi(2);
            // single exponential of the exact sum of both exponents: the
            // TwoSum error term keeps the argument's rounding out of the result
            let (ea, eb) = (-d2 / (2.0 * sd * sd), -f2 / (2.0 * sf * sf));
            let s = ea + eb;
            let bb = s - ea;
            let err = (ea - (s - bb)) + (eb - bb);
            let joint = s.exp() * err.exp();
            if joint > f64::MIN_POSITIVE * 1e4 {
                let ulps = (joint.to_bits() as i64 - wij.to_bits() as i64).abs();
                prop_assert!(ulps <= 4, "ulps {} ({} vs {})", ulps, joint, wij);
            }
        }

        #[test]
        fn filter_preserves_constants_and_range(
            value in 0.0f64..255.0,
            sd in 0.5f64..4.0,
            sf in 1.0f64..60.0,
            seed in 0u64..1000,
        ) {
            let plan = precompute_window(5).unwrap();
            let p = KernelParams::new(sd, sf).unwrap();
            let flat = Image::constant(9, 7, value);
            let out = bf_filter(&flat, &plan, &p, true).unwrap();
            for v in out.data() {
                prop_assert!((v - value).abs() <= 1e-12 * value.max(1.0));
            }
            let img = Image::from_fn(9, 7, |r, c| ((seed as usize * 7 + r * 31 + c * 57) % 256) as f64).unwrap();
            let (lo, hi) = img.min_max();
            let out = bf_filter(&img, &plan, &p, true).unwrap();
            for v in out.data() {
                prop_assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9);
            }
        }
    }
}
