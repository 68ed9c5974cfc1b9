//! Evaluation statistics: received power, RMS delay spread, array
//! correlation with root-MUSIC azimuth, histogram densities, KL and
//! Jensen-Shannon distances, and the Gaussian-fit baseline.

mod angle;
mod delay_spread;
mod density;

pub use angle::{array_correlation, polynomial_roots, root_music_azimuth, root_music_polynomial, CorrelationMatrix};
pub use delay_spread::{delay_spread_taps, rms_delay_spread, DelaySpreadMap};
pub use density::{
    gaussian_fit_samples, histogram_density, js_distance, js_distance_max, jsd_matrix, kl_divergence, pooled_edges,
    uniform_edges, Density, JsdMatrix, DEFAULT_BINS,
};

use rayon::prelude::*;

use crate::csi::{total_rx_power, CsiDataset, CsiTensor};

/// Normalized squared error after removing the best global phase:
/// `min_φ ‖estimate − e^{jφ}·truth‖² / ‖truth‖²`.
pub fn phase_aligned_nmse(estimate: &CsiTensor, truth: &CsiTensor) -> f64 {
    let e = estimate.norm_sqr();
    let t = truth.norm_sqr();
    let cross = estimate.inner(truth).norm();
    ((e + t - 2.0 * cross) / t).max(0.0)
}

/// Every per-antenna RMS delay spread (seconds) of every datapoint, pooled.
pub fn dataset_delay_spreads(dataset: &CsiDataset) -> Vec<f64> {
    dataset
        .points
        .par_iter()
        .map(|p| rms_delay_spread(&p.csi, &dataset.geometry).values)
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Per-array statistics of one datapoint.
#[derive(Debug, Clone, PartialEq)]
pub struct DatapointSummary {
    pub position: [f64; 2],
    /// Linear `‖H_b‖²_F`.
    pub power: Vec<f64>,
    /// Mean RMS delay spread per array, seconds.
    pub mean_delay_spread: Vec<f64>,
    /// Root-MUSIC azimuth per array, radians; `None` when the array has no
    /// usable signal.
    pub azimuth: Vec<Option<f64>>,
}

pub fn summarize_dataset(dataset: &CsiDataset) -> Vec<DatapointSummary> {
    dataset
        .points
        .par_iter()
        .map(|p| {
            let arrays = p.csi.shape().arrays;
            let ds = rms_delay_spread(&p.csi, &dataset.geometry);
            DatapointSummary {
                position: p.position,
                power: (0..arrays).map(|b| total_rx_power(&p.csi, b).unwrap_or(0.0)).collect(),
                mean_delay_spread: ds.array_means,
                azimuth: (0..arrays)
                    .map(|b| array_correlation(&p.csi, b).and_then(|r| root_music_azimuth(&r)).ok())
                    .collect(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csi::TensorShape;
    use num_complex::Complex64;

    #[test]
    fn nmse_ignores_global_phase() {
        let s = TensorShape::new(1, 2, 2, 3);
        let h = CsiTensor::from_fn(s, |_, r, c, t| Complex64::new(r as f64 + 1.0, (c * t) as f64));
        assert!(phase_aligned_nmse(&h.rotated(1.3), &h) < 1e-15);
        assert!((phase_aligned_nmse(&CsiTensor::zeros(s), &h) - 1.0).abs() < 1e-15);
    }
}
