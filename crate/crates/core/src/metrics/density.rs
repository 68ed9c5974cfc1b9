//! Histogram densities and the divergences used to compare them.
//!
//! All logarithms are natural, so the Jensen-Shannon distance lies in
//! `[0, sqrt(ln 2)]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Default number of histogram bins for delay-spread comparisons.
pub const DEFAULT_BINS: usize = 150;

/// Upper bound of [`js_distance`].
pub fn js_distance_max() -> f64 {
    std::f64::consts::LN_2.sqrt()
}

/// Histogram on fixed edges, normalized to a probability mass function.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub edges: Vec<f64>,
    pub probs: Vec<f64>,
}

impl Density {
    pub fn n_bins(&self) -> usize {
        self.probs.len()
    }
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::BadEdges);
    }
    Ok(())
}

pub fn uniform_edges(min: f64, max: f64, n_bins: usize) -> Result<Vec<f64>> {
    if n_bins == 0 || !(min < max) {
        return Err(Error::BadEdges);
    }
    let width = (max - min) / n_bins as f64;
    let mut edges: Vec<f64> = (0..=n_bins).map(|i| min + width * i as f64).collect();
    edges[n_bins] = max;
    Ok(edges)
}

/// Uniform edges spanning the pooled min/max of every set. A degenerate
/// span is widened by ±0.5 so the edges stay strictly increasing.
pub fn pooled_edges<S: AsRef<[f64]>>(sets: &[S], n_bins: usize) -> Result<Vec<f64>> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (i, set) in sets.iter().enumerate() {
        let set = set.as_ref();
        if set.is_empty() {
            return Err(Error::EmptyValues(format!(" (set {i})")));
        }
        for &v in set {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("value in set {i}")));
            }
            min = min.min(v);
            max = max.max(v);
        }
    }
    if sets.is_empty() {
        return Err(Error::EmptyValues(String::new()));
    }
    if min == max {
        min -= 0.5;
        max += 0.5;
    }
    uniform_edges(min, max, n_bins)
}

/// Bin counts divided by the total. Values below the first edge land in the
/// first bin and values at or above the last edge in the last bin.
pub fn histogram_density(values: &[f64], edges: &[f64]) -> Result<Density> {
    check_edges(edges)?;
    if values.is_empty() {
        return Err(Error::EmptyValues(String::new()));
    }
    let n = edges.len() - 1;
    let mut counts = vec![0u64; n];
    for &v in values {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("histogram value {v}")));
        }
        let i = edges.partition_point(|&e| e <= v).saturating_sub(1).min(n - 1);
        counts[i] += 1;
    }
    let total = values.len() as f64;
    Ok(Density { edges: edges.to_vec(), probs: counts.into_iter().map(|c| c as f64 / total).collect() })
}

fn check_same_edges(p: &Density, q: &Density) -> Result<()> {
    if p.edges != q.edges {
        return Err(Error::EdgeMismatch);
    }
    Ok(())
}

/// `Σ P·ln(P/Q)`, with `0·ln(0/q) = 0` and `+∞` when `P > 0 = Q`.
pub fn kl_divergence(p: &Density, q: &Density) -> Result<f64> {
    check_same_edges(p, q)?;
    Ok(kl_unchecked(&p.probs, &q.probs))
}

fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            sum += pi * (pi / qi).ln();
        }
    }
    sum
}

/// Jensen-Shannon distance: `sqrt((KL(P‖M) + KL(Q‖M)) / 2)`, `M = (P+Q)/2`.
pub fn js_distance(p: &Density, q: &Density) -> Result<f64> {
    check_same_edges(p, q)?;
    let m: Vec<f64> = p.probs.iter().zip(&q.probs).map(|(a, b)| 0.5 * (a + b)).collect();
    let div = 0.5 * (kl_unchecked(&p.probs, &m) + kl_unchecked(&q.probs, &m));
    Ok(div.max(0.0).sqrt())
}

/// Labeled symmetric matrix of pairwise Jensen-Shannon distances.
#[derive(Debug, Clone, PartialEq)]
pub struct JsdMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub densities: Vec<Density>,
}

impl JsdMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.values[i][j])
    }
}

/// Pairwise distances between value sets, all binned on one set of pooled
/// edges with `n_bins` bins.
pub fn jsd_matrix<S: AsRef<[f64]>>(sets: &[(String, S)], n_bins: usize) -> Result<JsdMatrix> {
    if sets.len() < 2 {
        return Err(Error::EmptyValues(" (need at least two sets)".into()));
    }
    let values: Vec<&[f64]> = sets.iter().map(|(_, v)| v.as_ref()).collect();
    let edges = pooled_edges(&values, n_bins)?;
    let densities = values.iter().map(|v| histogram_density(v, &edges)).collect::<Result<Vec<_>>>()?;
    let n = sets.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = js_distance(&densities[i], &densities[j])?;
            out[i][j] = d;
            out[j][i] = d;
        }
    }
    Ok(JsdMatrix { labels: sets.iter().map(|(l, _)| l.clone()).collect(), values: out, densities })
}

/// `n` draws from a normal distribution with the sample mean and unbiased
/// sample standard deviation of `values`. Negative draws are kept.
pub fn gaussian_fit_samples(values: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::EmptyValues(" (need at least two values)".into()));
    }
    let len = values.len() as f64;
    let mean = values.iter().sum::<f64>() / len;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1.0);
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let normal = Normal::new(mean, var.sqrt()).map_err(|e| Error::NonFinite(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| normal.sample(&mut rng)).collect())
}
