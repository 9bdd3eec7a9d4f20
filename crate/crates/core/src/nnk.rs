//! Image NNK graph construction.
//!
//! For each pixel the window neighbors are visited from nearest to farthest.
//! An unpruned neighbor `j` becomes connected and then removes every still
//! unpruned candidate `k` lying in its direction (`delta[j][k] >= 0`) whose
//! intensities satisfy
//!
//! ```text
//! (f_j - f_k) . (f_j - f_i) <= mu * delta[j][k],    mu = (sigma_f / sigma_d)^2
//! ```
//!
//! which is the kernel-ratio-interval disconnection condition specialised to
//! the bilateral kernel on a regular lattice. Surviving neighbors keep their
//! bilateral weights.

use crate::error::Result;
use crate::graph::{SparseGraph, SymmetrizeMode};
use crate::image::Image;
use crate::kernel::{check_window_fits, spatial_table, sq_dist, KernelParams};
use crate::lattice::WindowPlan;
use crate::par::{self, Execution};

/// `true` when candidate `k` is disconnected from `i` given that `j` is
/// connected. Callers only pass pairs with `delta_jk >= 0`.
#[inline]
pub fn prune_test(fi: &[f64], fj: &[f64], fk: &[f64], mu: f64, delta_jk: f64) -> bool {
    let lhs: f64 = fj
        .iter()
        .zip(fk)
        .zip(fi)
        .map(|((j, k), i)| (j - k) * (j - i))
        .sum();
    lhs <= mu * delta_jk
}

const ABSENT: u8 = 0;
const CANDIDATE: u8 = 1;
const CONNECTED: u8 = 2;
const PRUNED: u8 = 3;

/// Per-worker buffers reused across pixels.
struct Scratch {
    state: Vec<u8>,
    pixel: Vec<usize>,
}

impl Scratch {
    fn new(plan: &WindowPlan) -> Self {
        Scratch {
            state: vec![ABSENT; plan.len()],
            pixel: vec![0; plan.len()],
        }
    }
}

/// Runs the pruning loop for one pixel. `on_connect(j)` fires in plan order;
/// `on_prune(k, j, prior_state)` fires for every removal with its witness.
#[inline]
fn prune_pixel(
    img: &Image,
    plan: &WindowPlan,
    mu: f64,
    row: usize,
    col: usize,
    scratch: &mut Scratch,
    mut on_connect: impl FnMut(usize, usize),
    mut on_prune: impl FnMut(usize, usize, u8),
) {
    let (h, w) = (img.height(), img.width());
    scratch.state.fill(ABSENT);
    {
        let Scratch { state, pixel } = scratch;
        plan.for_each_valid(row, col, h, w, |idx, p| {
            state[idx] = CANDIDATE;
            pixel[idx] = p;
        });
    }
    let fi = img.at(row, col);
    for j in 0..plan.len() {
        if scratch.state[j] != CANDIDATE {
            continue;
        }
        scratch.state[j] = CONNECTED;
        on_connect(j, scratch.pixel[j]);
        let fj = img.pixel(scratch.pixel[j]);
        for &k in plan.same_direction(j) {
            let k = k as usize;
            let s = scratch.state[k];
            if s == ABSENT || s == PRUNED {
                continue;
            }
            let fk = img.pixel(scratch.pixel[k]);
            if prune_test(fi, fj, fk, mu, plan.delta(j, k)) {
                scratch.state[k] = PRUNED;
                on_prune(k, j, s);
            }
        }
    }
}

/// Record of one pixel's pruning run, in plan offset indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RowTrace {
    /// Connected neighbors as `(offset index, pixel index)`, in the order
    /// they were confirmed.
    pub connected: Vec<(usize, usize)>,
    /// `(pruned offset, witness offset)` pairs.
    pub pruned: Vec<(usize, usize)>,
    /// Number of prunes that hit an already connected neighbor. Always zero
    /// for a correct plan; exposed for instrumentation.
    pub reversals: usize,
}

/// Traces the pruning loop at pixel `(row, col)`. Does not require the
/// window to fit in the image.
pub fn trace_pixel(img: &Image, plan: &WindowPlan, p: &KernelParams, row: usize, col: usize) -> RowTrace {
    let mut scratch = Scratch::new(plan);
    let mut connected = Vec::new();
    let mut pruned = Vec::new();
    let mut reversals = 0;
    prune_pixel(
        img,
        plan,
        p.mu(),
        row,
        col,
        &mut scratch,
        |j, px| connected.push((j, px)),
        |k, j, prior| {
            if prior == CONNECTED {
                reversals += 1;
            }
            pruned.push((k, j));
        },
    );
    // a reversal would leave a pruned entry in the connected list
    connected.retain(|&(j, _)| scratch.state[j] == CONNECTED);
    RowTrace {
        connected,
        pruned,
        reversals,
    }
}

/// Directed (row-wise) NNK adjacency: row `i` holds the surviving neighbors
/// of pixel `i` with bilateral weights.
pub fn build_nnk_directed(img: &Image, plan: &WindowPlan, p: &KernelParams, exec: Execution) -> Result<SparseGraph> {
    check_window_fits(img, plan)?;
    let spatial = spatial_table(plan, p);
    let mu = p.mu();
    let (h, w) = (img.height(), img.width());
    let rows = par::map_range(exec, h, |r| {
        let mut scratch = Scratch::new(plan);
        let mut out = Vec::with_capacity(w);
        for c in 0..w {
            let mut conn: Vec<(usize, usize)> = Vec::with_capacity(16);
            prune_pixel(img, plan, mu, r, c, &mut scratch, |j, px| conn.push((j, px)), |_, _, _| {});
            let fi = img.at(r, c);
            let row: Vec<(u32, f64)> = conn
                .into_iter()
                .filter(|&(j, _)| scratch.state[j] == CONNECTED)
                .map(|(j, px)| (px as u32, spatial[j] * p.range(sq_dist(fi, img.pixel(px)))))
                .collect();
            out.push(row);
        }
        out
    });
    Ok(SparseGraph::from_rows(img.num_pixels(), rows.into_iter().flatten()))
}

/// NNK image graph, symmetrized with `max`.
pub fn build_nnk_graph(img: &Image, plan: &WindowPlan, p: &KernelParams) -> Result<SparseGraph> {
    build_nnk_graph_with(img, plan, p, SymmetrizeMode::Max, Execution::default())
}

pub fn build_nnk_graph_with(
    img: &Image,
    plan: &WindowPlan,
    p: &KernelParams,
    mode: SymmetrizeMode,
    exec: Execution,
) -> Result<SparseGraph> {
    Ok(build_nnk_directed(img, plan, p, exec)?.symmetrize(mode))
}
