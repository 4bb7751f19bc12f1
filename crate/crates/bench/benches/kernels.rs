use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sotlab_core::degrade::{gen_clean, DegradationSpec, SceneModel};
use sotlab_core::ot::{energy_distance_grad, sinkhorn, solve_exact_weights, CostMatrix, SinkhornParams};
use sotlab_core::train::{sot_gradient, ObjectiveParams, RestorationModel};
use sotlab_core::{dft2, Image};

fn scene(size: usize, seed: u64) -> Image {
    gen_clean(size, size, 1, SceneModel::PiecewiseConstant, seed).unwrap()
}

/// Deterministic pseudo-random costs without pulling in an RNG crate.
fn costs(n: usize, m: usize) -> CostMatrix {
    let data = (0..n * m).map(|k| (k as f64 * 0.618_033_988_75).fract() * 10.0).collect();
    CostMatrix::new(n, m, data).unwrap()
}

fn bench_dft(c: &mut Criterion) {
    for size in [32, 64, 256] {
        let img = scene(size, 1);
        c.bench_function(&format!("dft2 {size}x{size}"), |b| b.iter(|| dft2(black_box(&img)).unwrap()));
    }
}

fn bench_transport(c: &mut Criterion) {
    let (a, b) = (vec![0.1; 10], vec![0.1; 10]);
    let cost = costs(10, 10);
    c.bench_function("solve_exact 10x10", |bch| bch.iter(|| solve_exact_weights(black_box(&a), &b, &cost).unwrap()));
    let (a, b) = (vec![0.01; 100], vec![0.01; 100]);
    let cost = costs(100, 100);
    let params = SinkhornParams { epsilon: 0.5, ..Default::default() };
    c.bench_function("sinkhorn 100x100", |bch| bch.iter(|| sinkhorn(black_box(&a), &b, &cost, params).unwrap()));
}

fn bench_energy(c: &mut Criterion) {
    let points = |offset: f64| (0..256).map(|i| (0..64).map(|d| ((i * 64 + d) as f64 * 0.37 + offset).sin()).collect()).collect::<Vec<Vec<f64>>>();
    let (u, v) = (points(0.0), points(1.0));
    c.bench_function("energy distance 256x256 dim 64", |b| b.iter(|| energy_distance_grad(black_box(&u), &v).unwrap()));
}

fn bench_gradient(c: &mut Criterion) {
    let spec = DegradationSpec::FreqSparse { k: 8, amplitude: 1.0, support_seed: Some(7) };
    let ys: Vec<Image> = (0..16).map(|i| spec.apply(&scene(32, i), 100 + i).unwrap().0).collect();
    let xs: Vec<Image> = (0..16).map(|i| scene(32, 1000 + i)).collect();
    let model = RestorationModel::identity(32, 0).unwrap();
    let params = ObjectiveParams { q: 1.0, eps: 0.3, lambda: 100.0, feature: Default::default() };
    c.bench_function("sot_gradient batch 16 at 32x32", |b| b.iter(|| sot_gradient(black_box(&model), &ys, &xs, &params).unwrap()));
}

criterion_group!(benches, bench_dft, bench_transport, bench_energy, bench_gradient);
criterion_main!(benches);
