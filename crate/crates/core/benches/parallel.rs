//! Sequential vs rayon execution of the three hot loops: NNK rows, BF rows
//! and the Chebyshev recurrence of the forward transform.
//!
//! Build with `--no-default-features` to confirm both variants then run the
//! same sequential code.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nnk_image::kernel::build_bf_graph_with;
use nnk_image::nnk::build_nnk_graph_with;
use nnk_image::spectral::{build_laplacian, design_wavelets, estimate_lambda_max, sgw_forward};
use nnk_image::{precompute_window, read_pgm, Execution, Image, KernelParams, SymmetrizeMode};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn camera() -> Image {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/camera.pgm");
    read_pgm(path).expect("embedded test image").image
}

fn construction(c: &mut Criterion) {
    let img = camera();
    let plan = precompute_window(11).unwrap();
    let p = KernelParams::default_for_window(11);
    let mut group = c.benchmark_group("construction_w11");
    group.sample_size(10).measurement_time(Duration::from_secs(5));
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("nnk", name), &exec, |b, &exec| {
            b.iter(|| build_nnk_graph_with(black_box(&img), &plan, &p, SymmetrizeMode::Max, exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("bf", name), &exec, |b, &exec| {
            b.iter(|| build_bf_graph_with(black_box(&img), &plan, &p, exec).unwrap())
        });
    }
    group.finish();
}

fn forward(c: &mut Criterion) {
    let img = camera();
    let plan = precompute_window(11).unwrap();
    let p = KernelParams::default_for_window(11);
    let g = build_nnk_graph_with(&img, &plan, &p, SymmetrizeMode::Max, Execution::Parallel).unwrap();
    let mut group = c.benchmark_group("sgw_forward_nnk_w11");
    group.sample_size(10).measurement_time(Duration::from_secs(5));
    for (name, exec) in MODES {
        let l = build_laplacian(&g).unwrap().with_execution(exec);
        let design = design_wavelets(estimate_lambda_max(&l), 6, 30).unwrap();
        group.bench_function(name, |b| b.iter(|| sgw_forward(&l, &design, black_box(img.data())).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, construction, forward);
criterion_main!(benches);
