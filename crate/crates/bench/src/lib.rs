//! Seeded fixtures shared by the benchmarks.

use csigan_core::{ArrayGeometry, CsiDataset, CsiTensor, Datapoint, TensorShape};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(shape: TensorShape, rng: &mut ChaCha8Rng) -> CsiTensor {
    CsiTensor::from_fn(shape, |_, _, _, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// `n` datapoints scattered uniformly over a 10 m square.
pub fn scattered_dataset(geometry: ArrayGeometry, n: usize, seed: u64) -> CsiDataset {
    let mut rng = rng(seed);
    let points = (0..n)
        .map(|_| {
            let csi = random_tensor(geometry.shape(), &mut rng);
            Datapoint::new(csi, [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).expect("finite position")
        })
        .collect();
    CsiDataset::new(geometry, points).expect("consistent shapes")
}

/// Single-path array response at azimuth `theta` with random per-tap gains.
pub fn plane_wave(shape: TensorShape, theta: f64, seed: u64) -> CsiTensor {
    let mut rng = rng(seed);
    let gains: Vec<Complex64> = (0..shape.rows * shape.taps)
        .map(|_| Complex64::from_polar(rng.random_range(0.2..1.0), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    CsiTensor::from_fn(shape, |_, r, c, t| {
        gains[r * shape.taps + t] * Complex64::from_polar(1.0, std::f64::consts::PI * c as f64 * theta.sin())
    })
}

pub fn uniform_values(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}
