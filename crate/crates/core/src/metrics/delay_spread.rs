use num_complex::Complex64;

use crate::csi::{ArrayGeometry, CsiTensor, TensorShape};

/// Per-antenna RMS delay spreads of one CSI tensor, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySpreadMap {
    pub shape: TensorShape,
    /// Flat `[array][row][col]`.
    pub values: Vec<f64>,
    /// Antennas whose taps are all zero; their spread is reported as 0.
    pub zero_power: Vec<bool>,
    /// Mean over the antennas of each array.
    pub array_means: Vec<f64>,
}

impl DelaySpreadMap {
    pub fn get(&self, b: usize, r: usize, c: usize) -> f64 {
        self.values[(b * self.shape.rows + r) * self.shape.cols + c]
    }
}

/// RMS delay spread of one antenna in taps, or `None` for an all-zero CIR.
///
/// Power-weighted second central moment of the tap index. The index origin
/// (0- or 1-based) cancels out.
pub fn delay_spread_taps(taps: &[Complex64]) -> Option<f64> {
    let mut total = 0.0;
    let mut first = 0.0;
    for (t, h) in taps.iter().enumerate() {
        let p = h.norm_sqr();
        total += p;
        first += (t + 1) as f64 * p;
    }
    if total <= 0.0 {
        return None;
    }
    let mean = first / total;
    let second: f64 = taps
        .iter()
        .enumerate()
        .map(|(t, h)| {
            let d = (t + 1) as f64 - mean;
            d * d * h.norm_sqr()
        })
        .sum();
    Some((second / total).max(0.0).sqrt())
}

pub fn rms_delay_spread(csi: &CsiTensor, geometry: &ArrayGeometry) -> DelaySpreadMap {
    let shape = csi.shape();
    let tap = geometry.tap_duration();
    let mut values = Vec::with_capacity(shape.num_antennas());
    let mut zero_power = Vec::with_capacity(shape.num_antennas());
    for ant in csi.values().chunks_exact(shape.taps) {
        match delay_spread_taps(ant) {
            Some(ds) => {
                values.push(ds * tap);
                zero_power.push(false);
            }
            None => {
                values.push(0.0);
                zero_power.push(true);
            }
        }
    }
    let per_array = shape.antennas_per_array();
    let array_means = values.chunks_exact(per_array).map(|a| a.iter().sum::<f64>() / per_array as f64).collect();
    DelaySpreadMap { shape, values, zero_power, array_means }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn geometry(taps: usize) -> ArrayGeometry {
        ArrayGeometry::new(1, 1, 1, taps, 1.272e9, 50e6).unwrap()
    }

    fn pdp(powers: &[f64]) -> CsiTensor {
        let g = geometry(powers.len());
        CsiTensor::new(g.shape(), powers.iter().map(|p| Complex64::new(0.0, p.sqrt())).collect()).unwrap()
    }

    /// E[t²] − E[t]² with plain sums; a different route from the
    /// central-moment form used by the implementation.
    fn brute_force_taps(powers: &[f64]) -> f64 {
        let total: f64 = powers.iter().sum();
        let m1: f64 = powers.iter().enumerate().map(|(t, p)| t as f64 * p).sum::<f64>() / total;
        let m2: f64 = powers.iter().enumerate().map(|(t, p)| (t * t) as f64 * p).sum::<f64>() / total;
        (m2 - m1 * m1).sqrt()
    }

    #[test]
    fn single_tap_is_zero() {
        for k in [0, 5, 47] {
            let mut p = vec![0.0; 48];
            p[k] = 2.5;
            let g = geometry(48);
            assert_eq!(rms_delay_spread(&pdp(&p), &g).values[0], 0.0);
        }
    }

    #[test]
    fn two_taps_one_tap_apart_each_way() {
        let mut p = vec![0.0; 48];
        p[0] = 1.0;
        p[2] = 1.0;
        let g = geometry(48);
        let ds = rms_delay_spread(&pdp(&p), &g);
        assert!((ds.values[0] / g.tap_duration() - 1.0).abs() < 1e-12);
        assert!((ds.values[0] - 20e-9).abs() < 1e-20);
    }

    #[test]
    fn uniform_pdp_matches_closed_form_and_brute_force() {
        let p = vec![1.0; 48];
        let closed = ((48.0f64 * 48.0 - 1.0) / 12.0).sqrt();
        assert!((closed - 13.8534).abs() < 1e-4);
        assert!((brute_force_taps(&p) - closed).abs() < 1e-9);
        let ds = delay_spread_taps(pdp(&p).values()).unwrap();
        assert!((ds - closed).abs() < 1e-9);
    }

    #[test]
    fn zero_antenna_is_flagged() {
        let g = ArrayGeometry::new(1, 1, 2, 4, 1e9, 50e6).unwrap();
        let h = CsiTensor::from_fn(g.shape(), |_, _, c, t| if c == 1 && t == 2 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        let ds = rms_delay_spread(&h, &g);
        assert_eq!(ds.zero_power, vec![true, false]);
        assert_eq!(ds.values, vec![0.0, 0.0]);
    }

    #[test]
    fn array_mean_and_bounds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = ArrayGeometry::new(3, 2, 4, 48, 1.272e9, 50e6).unwrap();
        let h = CsiTensor::from_fn(g.shape(), |_, _, _, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let ds = rms_delay_spread(&h, &g);
        for b in 0..3 {
            let direct: f64 = (0..2).flat_map(|r| (0..4).map(move |c| (r, c))).map(|(r, c)| ds.get(b, r, c)).sum::<f64>() / 8.0;
            assert!((ds.array_means[b] - direct).abs() <= 1e-12 * direct);
        }
        assert!(ds.values.iter().all(|&v| v >= 0.0 && v <= 48.0 * g.tap_duration()));
        for ant in 0..g.shape().num_antennas() {
            let powers: Vec<f64> = h.values()[ant * 48..(ant + 1) * 48].iter().map(|v| v.norm_sqr()).collect();
            assert!((ds.values[ant] / g.tap_duration() - brute_force_taps(&powers)).abs() < 1e-9);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn invariant_under_phase_and_scale(
                v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
                phi in -6.0f64..6.0,
                scale in 1e-3f64..1e3,
            ) {
                let g = geometry(16);
                let h = CsiTensor::new(g.shape(), v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap();
                let a = rms_delay_spread(&h, &g).values[0];
                let b = rms_delay_spread(&h.scaled(Complex64::from_polar(scale, phi)), &g).values[0];
                prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12));
            }
        }
    }
}
