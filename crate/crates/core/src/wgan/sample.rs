use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::network::Generator;
use crate::csi::{CsiDataset, CsiTensor, Datapoint};
use crate::dataset::ConditionScaler;
use crate::error::Result;

const CHUNK: usize = 256;

/// Standard normal noise vector of length `k`.
pub fn noise_vector(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.sample(StandardNormal)).collect()
}

/// Noise for condition `index` in variable mode: stream `index` of the
/// ChaCha8 generator seeded with `seed`.
pub fn variable_noise(seed: u64, index: usize, k: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    noise_vector(&mut rng, k)
}

fn generate(
    generator: &Generator,
    scaler: &ConditionScaler,
    positions: &[[f64; 2]],
    noise: impl Fn(usize) -> Vec<f64> + Sync,
) -> Result<Vec<Datapoint>> {
    let shape = generator.geometry.shape();
    let k = generator.noise_dim;
    let chunks: Vec<Vec<Datapoint>> = positions
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut cond = Array2::zeros((chunk.len(), 2));
            let mut z = Array2::zeros((chunk.len(), k));
            for (i, p) in chunk.iter().enumerate() {
                let s = scaler.scale(*p);
                cond[[i, 0]] = s[0];
                cond[[i, 1]] = s[1];
                z.row_mut(i).assign(&ndarray::ArrayView1::from(&noise(c * CHUNK + i)));
            }
            let out = generator.forward(cond.view(), z.view())?.output;
            chunk
                .iter()
                .zip(out.rows())
                .map(|(p, row)| Datapoint::new(CsiTensor::from_interleaved(shape, &row.to_vec())?, *p))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn package(generator: &Generator, points: Vec<Datapoint>, mode: &str, seed: u64) -> Result<CsiDataset> {
    let mut ds = CsiDataset::new(generator.geometry, points)?;
    ds.provenance.insert("generator".into(), format!("wgan-{mode}"));
    ds.provenance.insert("seed".into(), seed.to_string());
    Ok(ds)
}

/// One noise vector drawn from `seed`, shared by every position.
pub fn sample_fixed(generator: &Generator, scaler: &ConditionScaler, positions: &[[f64; 2]], seed: u64) -> Result<CsiDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = noise_vector(&mut rng, generator.noise_dim);
    let points = generate(generator, scaler, positions, |_| n.clone())?;
    package(generator, points, "fixed", seed)
}

/// An independent noise vector per position, drawn from [`variable_noise`].
pub fn sample_variable(generator: &Generator, scaler: &ConditionScaler, positions: &[[f64; 2]], seed: u64) -> Result<CsiDataset> {
    let k = generator.noise_dim;
    let points = generate(generator, scaler, positions, |i| variable_noise(seed, i, k))?;
    package(generator, points, "variable", seed)
}

/// Regenerates position `index` of a [`sample_variable`] run on its own.
pub fn sample_variable_at(
    generator: &Generator,
    scaler: &ConditionScaler,
    position: [f64; 2],
    index: usize,
    seed: u64,
) -> Result<CsiTensor> {
    let noise = variable_noise(seed, index, generator.noise_dim);
    let mut points = generate(generator, scaler, &[position], |_| noise.clone())?;
    Ok(points.pop().expect("one position").csi)
}
