//! Image-independent window geometry.
//!
//! Pixel positions inside a `w x w` window do not depend on the image, so
//! the distance ordering of the window and the threshold factors
//! `delta[j][k] = (x_k - x_j) . (x_j - x_i)` (center `x_i` at the origin)
//! are computed once per window size and shared by every pixel.

use crate::error::{Error, Result};

pub const MIN_WINDOW: usize = 3;
pub const MAX_WINDOW: usize = 63;

/// Position of a window member relative to the center pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Offset {
    /// Column displacement.
    pub dx: i32,
    /// Row displacement.
    pub dy: i32,
}

impl Offset {
    pub const fn new(dx: i32, dy: i32) -> Self {
        Offset { dx, dy }
    }

    #[inline]
    pub fn norm2(self) -> i64 {
        let (dx, dy) = (self.dx as i64, self.dy as i64);
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dot(self, other: Offset) -> i64 {
        self.dx as i64 * other.dx as i64 + self.dy as i64 * other.dy as i64
    }
}

/// Threshold factor for pruner `j` and candidate `k`, center at the origin.
#[inline]
pub fn threshold_factor(j: Offset, k: Offset) -> i64 {
    // (x_k - x_j) . (x_j - 0)
    k.dot(j) - j.norm2()
}

/// Precomputed window ordering and threshold-factor table.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPlan {
    window: usize,
    offsets: Vec<Offset>,
    delta: Vec<f64>,
    same_direction: Vec<Vec<u32>>,
}

impl WindowPlan {
    /// Builds the plan for an odd window size in `3..=63`.
    pub fn new(window: usize) -> Result<Self> {
        if window.is_multiple_of(2) || !(MIN_WINDOW..=MAX_WINDOW).contains(&window) {
            return Err(Error::invalid(format!(
                "window size must be odd and within {MIN_WINDOW}..={MAX_WINDOW}, got {window}"
            )));
        }
        let r = (window / 2) as i32;
        let mut offsets: Vec<Offset> = (-r..=r)
            .flat_map(|dy| (-r..=r).map(move |dx| Offset::new(dx, dy)))
            .filter(|o| *o != Offset::new(0, 0))
            .collect();
        offsets.sort_by_key(|o| (o.norm2(), o.dy, o.dx));

        let m = offsets.len();
        let mut delta = vec![0.0; m * m];
        let mut same_direction = vec![Vec::new(); m];
        for (j, &oj) in offsets.iter().enumerate() {
            for (k, &ok) in offsets.iter().enumerate() {
                let d = threshold_factor(oj, ok);
                delta[j * m + k] = d as f64;
                if k != j && d >= 0 {
                    same_direction[j].push(k as u32);
                }
            }
        }
        Ok(WindowPlan {
            window,
            offsets,
            delta,
            same_direction,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn radius(&self) -> usize {
        self.window / 2
    }

    /// Number of window members excluding the center (`w^2 - 1`).
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offsets(&self) -> &[Offset] {
        &self.offsets
    }

    #[inline]
    pub fn delta(&self, j: usize, k: usize) -> f64 {
        self.delta[j * self.offsets.len() + k]
    }

    /// Indices `k != j` with `delta[j][k] >= 0`, in plan order.
    #[inline]
    pub fn same_direction(&self, j: usize) -> &[u32] {
        &self.same_direction[j]
    }

    /// Plan offsets whose absolute position lies inside a `height x width`
    /// image, as `(offset index, linear pixel index)` in plan order.
    pub fn valid_neighbors(
        &self,
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    ) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.offsets.len());
        self.for_each_valid(row, col, height, width, |idx, p| out.push((idx, p)));
        out
    }

    #[inline]
    pub(crate) fn for_each_valid(
        &self,
        row: usize,
        col: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize),
    ) {
        debug_assert!(row < height && col < width);
        let r = self.radius();
        let interior = row >= r && col >= r && row + r < height && col + r < width;
        for (idx, o) in self.offsets.iter().enumerate() {
            let y = row as i64 + o.dy as i64;
            let x = col as i64 + o.dx as i64;
            if interior || (y >= 0 && x >= 0 && (y as usize) < height && (x as usize) < width) {
                f(idx, y as usize * width + x as usize);
            }
        }
    }
}

/// Convenience wrapper over [`WindowPlan::new`].
pub fn precompute_window(window: usize) -> Result<WindowPlan> {
    WindowPlan::new(window)
}
