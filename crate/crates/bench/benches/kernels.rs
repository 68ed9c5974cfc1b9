use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use csigan_bench::{plane_wave, random_tensor, rng, scattered_dataset, uniform_values};
use csigan_core::interp::{phase_aligned_blend, BarycentricCoords, BlendOptions};
use csigan_core::metrics::{array_correlation, dataset_delay_spreads, jsd_matrix, root_music_azimuth};
use csigan_core::wgan::Generator;
use csigan_core::{build_interpolant, ArrayGeometry, Fallback, TensorShape};
use ndarray::Array2;

fn geometry() -> ArrayGeometry {
    ArrayGeometry::new(1, 2, 4, 16, 1.272e9, 50e6).unwrap()
}

fn generator_forward(c: &mut Criterion) {
    let gen = Generator::new(geometry(), 32, 0.25, &mut rng(1)).unwrap();
    let cond = Array2::from_elem((64, 2), 0.1);
    let noise = Array2::from_elem((64, 32), -0.3);
    c.bench_function("generator forward, batch 64", |b| b.iter(|| gen.forward(cond.view(), noise.view()).unwrap()));
}

fn root_music(c: &mut Criterion) {
    let h = plane_wave(TensorShape::new(1, 2, 4, 16), 0.4, 2);
    c.bench_function("root-MUSIC, 4-element row", |b| {
        b.iter(|| root_music_azimuth(&array_correlation(&h, 0).unwrap()).unwrap())
    });
}

fn blend(c: &mut Criterion) {
    let mut r = rng(3);
    let shape = geometry().shape();
    let h = [random_tensor(shape, &mut r), random_tensor(shape, &mut r), random_tensor(shape, &mut r)];
    let s = BarycentricCoords([0.2, 0.3, 0.5]);
    c.bench_function("phase-aligned blend", |b| {
        b.iter(|| phase_aligned_blend([&h[0], &h[1], &h[2]], &s, BlendOptions::default()).unwrap())
    });
}

fn delaunay(c: &mut Criterion) {
    let ds = scattered_dataset(ArrayGeometry::new(1, 1, 1, 1, 1.272e9, 50e6).unwrap(), 2000, 4);
    c.bench_function("triangulate 2000 points", |b| {
        b.iter_batched(|| ds.clone(), |d| build_interpolant(&d, Fallback::Error).unwrap(), BatchSize::LargeInput)
    });
}

fn distances(c: &mut Criterion) {
    let ds = scattered_dataset(geometry(), 500, 5);
    c.bench_function("delay spreads, 500 datapoints", |b| b.iter(|| dataset_delay_spreads(&ds)));
    let sets: Vec<(String, Vec<f64>)> = (0..4).map(|i| (format!("s{i}"), uniform_values(4000, 6 + i))).collect();
    c.bench_function("JSD matrix, 4 sets of 4000", |b| b.iter(|| jsd_matrix(&sets, 150).unwrap()));
}

criterion_group!(kernels, generator_forward, root_music, blend, delaunay, distances);
criterion_main!(kernels);
