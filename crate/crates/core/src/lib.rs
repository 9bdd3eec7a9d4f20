//! Sparse image graphs from non-negative kernel regression (NNK), dense
//! bilateral window graphs, and spectral graph wavelet filtering on both.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] precomputes window geometry shared by every pixel.
//! * [`kernel`] evaluates the bilateral kernel and builds window graphs.
//! * [`nnk`] prunes window neighbors into a sparse NNK graph.
//! * [`oracle`] solves the exact NNK problem for validation and timing.
//! * [`spectral`] builds Laplacians and applies wavelet filter banks.
//! * [`pipeline`] runs denoising and energy-compaction experiments.
//! * [`bench`] times graph construction per pixel.
//!
//! Data-parallel loops go through [`Execution`]; building without the
//! `parallel` feature turns every loop sequential.

pub mod bench;
pub mod error;
pub mod graph;
pub mod image;
pub mod kernel;
pub mod lattice;
pub mod nnk;
pub mod oracle;
mod par;
pub mod pipeline;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{graph_stats, GraphStats, SparseGraph, SymmetrizeMode};
pub use image::{read_pgm, write_pgm, Image, Pgm};
pub use kernel::{bf_filter, bilateral_weight, build_bf_graph, KernelParams};
pub use lattice::{precompute_window, Offset, WindowPlan};
pub use nnk::{build_nnk_graph, prune_test};
pub use oracle::{kri_check, solve_nnk_exact, solve_two_node, LocalKernelSystem};
pub use par::Execution;
