//! RMS delay spread (in taps) as a differentiable function of a flattened,
//! interleaved `(re, im)` CSI row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this spread (taps) the derivative is treated as zero; the exact
/// derivative of the square root is unbounded there.
const MIN_DIFFERENTIABLE_SPREAD: f64 = 1e-9;

/// Power moments of one antenna's CIR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub power: f64,
    pub mean: f64,
    pub spread: f64,
}

impl Moments {
    /// `∂DS/∂p_t` for tap `t` (0-based).
    fn dspread_dpower(&self, t: usize) -> f64 {
        if self.power <= 0.0 || self.spread <= MIN_DIFFERENTIABLE_SPREAD {
            return 0.0;
        }
        let d = (t + 1) as f64 - self.mean;
        (d * d - self.spread * self.spread) / (2.0 * self.power * self.spread)
    }
}

/// Per-antenna moments of a row holding `antennas × taps` complex values.
pub fn moments(row: &[f64], taps: usize) -> Vec<Moments> {
    row.chunks_exact(2 * taps)
        .map(|ant| {
            let mut power = 0.0;
            let mut first = 0.0;
            for (t, z) in ant.chunks_exact(2).enumerate() {
                let p = z[0] * z[0] + z[1] * z[1];
                power += p;
                first += (t + 1) as f64 * p;
            }
            if power <= 0.0 {
                return Moments { power: 0.0, mean: 0.0, spread: 0.0 };
            }
            let mean = first / power;
            let second: f64 = ant
                .chunks_exact(2)
                .enumerate()
                .map(|(t, z)| {
                    let d = (t + 1) as f64 - mean;
                    d * d * (z[0] * z[0] + z[1] * z[1])
                })
                .sum();
            Moments { power, mean, spread: (second / power).max(0.0).sqrt() }
        })
        .collect()
}

/// Accumulates `Jᵀ g` into `out`, where `J` is the Jacobian of the
/// per-antenna spreads with respect to the row.
pub fn spread_vjp(row: &[f64], moments: &[Moments], taps: usize, g: &[f64], out: &mut [f64]) {
    for (a, (m, &ga)) in moments.iter().zip(g).enumerate() {
        if ga == 0.0 {
            continue;
        }
        let base = 2 * a * taps;
        for t in 0..taps {
            let k = ga * 2.0 * m.dspread_dpower(t);
            out[base + 2 * t] += k * row[base + 2 * t];
            out[base + 2 * t + 1] += k * row[base + 2 * t + 1];
        }
    }
}

/// `J u`: directional derivative of the per-antenna spreads.
pub fn spread_jvp(row: &[f64], moments: &[Moments], taps: usize, u: &[f64]) -> Vec<f64> {
    moments
        .iter()
        .enumerate()
        .map(|(a, m)| {
            let base = 2 * a * taps;
            (0..taps)
                .map(|t| {
                    let i = base + 2 * t;
                    2.0 * m.dspread_dpower(t) * (row[i] * u[i] + row[i + 1] * u[i + 1])
                })
                .sum()
        })
        .collect()
}

/// Affine map of a scalar range `[min, max]` onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueScaler {
    pub min: f64,
    pub max: f64,
}

impl ValueScaler {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::DegenerateExtent { dim: 0, value: min });
        }
        Ok(ValueScaler { min, max })
    }

    pub fn fit(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let (min, max) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if min > max {
            return Err(Error::EmptyDataset);
        }
        ValueScaler::new(min, max)
    }

    /// Derivative of [`ValueScaler::scale`].
    pub fn slope(&self) -> f64 {
        2.0 / (self.max - self.min)
    }

    pub fn scale(&self, v: f64) -> f64 {
        (v - self.min) * self.slope() - 1.0
    }
}
