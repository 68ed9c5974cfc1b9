//! Deterministic geometric multipath CSI generator.
//!
//! Every array sees the LoS path plus one single-bounce path per point
//! reflector. Paths are rendered with a far-field half-wavelength UPA
//! steering model, free-space `1/d` amplitude decay, and a Hann-windowed
//! sinc fractional-delay kernel. Arrivals from behind an array, and paths
//! whose legs cross a blocker rectangle, are dropped.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csi::{ArrayGeometry, CsiDataset, CsiTensor, Datapoint, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Half-width of the fractional-delay kernel, in taps.
pub const KERNEL_HALF_WIDTH: f64 = 8.0;

/// One propagation path as seen by one array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    /// Radians from broadside, positive towards increasing column index.
    pub azimuth: f64,
    pub elevation: f64,
    /// Seconds.
    pub delay: f64,
    pub gain: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayPlacement {
    pub position: [f64; 2],
    /// Direction of broadside, radians from the +x axis.
    pub orientation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reflector {
    pub position: [f64; 2],
    /// Complex reflection coefficient as `[re, im]`.
    pub gain: [f64; 2],
}

/// Axis-aligned rectangle that obstructs any path leg crossing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blocker {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Blocker {
    /// Slab test for the segment `a → b`.
    fn intersects(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        let mut t0: f64 = 0.0;
        let mut t1: f64 = 1.0;
        for d in 0..2 {
            let delta = b[d] - a[d];
            if delta.abs() < 1e-15 {
                if a[d] < self.min[d] || a[d] > self.max[d] {
                    return false;
                }
            } else {
                let (mut lo, mut hi) = ((self.min[d] - a[d]) / delta, (self.max[d] - a[d]) / delta);
                if lo > hi {
                    std::mem::swap(&mut lo, &mut hi);
                }
                t0 = t0.max(lo);
                t1 = t1.min(hi);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|d| p[d] >= self.min[d] && p[d] <= self.max[d])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub arrays: Vec<ArrayPlacement>,
    #[serde(default)]
    pub reflectors: Vec<Reflector>,
    #[serde(default)]
    pub blockers: Vec<Blocker>,
    #[serde(default = "default_los_gain")]
    pub los_gain: f64,
    /// Linear power of the complex Gaussian noise added to every entry.
    #[serde(default)]
    pub noise_power: f64,
    #[serde(default)]
    pub seed: u64,
    pub bounds: Bounds,
}

fn default_los_gain() -> f64 {
    1.0
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.arrays.len() != self.geometry.num_arrays {
            return Err(Error::Geometry(format!(
                "{} array placements for {} arrays",
                self.arrays.len(),
                self.geometry.num_arrays
            )));
        }
        if !(self.noise_power >= 0.0) {
            return Err(Error::Geometry(format!("noise power must be non-negative, got {}", self.noise_power)));
        }
        Ok(())
    }

    /// L-shaped hall with four arrays, a central metal container that blocks
    /// LoS for part of the area, and a handful of wall reflectors.
    pub fn demo(geometry: ArrayGeometry) -> Scenario {
        let corners = [
            ([-0.5, 7.0], 0.0),
            ([7.0, 14.5], -PI / 2.0),
            ([14.5, 7.0], PI),
            ([7.0, -0.5], PI / 2.0),
        ];
        let arrays = (0..geometry.num_arrays)
            .map(|b| {
                let (position, orientation) = corners[b % corners.len()];
                ArrayPlacement { position, orientation }
            })
            .collect();
        let reflectors = vec![
            Reflector { position: [3.0, 16.0], gain: [0.6, 0.2] },
            Reflector { position: [16.0, 11.0], gain: [-0.5, 0.3] },
            Reflector { position: [11.0, -2.5], gain: [0.4, -0.4] },
            Reflector { position: [-2.5, 2.0], gain: [0.7, 0.0] },
            Reflector { position: [20.0, 20.0], gain: [0.9, 0.5] },
            Reflector { position: [-6.0, 18.0], gain: [0.8, -0.6] },
        ];
        Scenario {
            geometry,
            arrays,
            reflectors,
            blockers: vec![Blocker { min: [5.0, 5.0], max: [9.0, 9.0] }],
            los_gain: 1.0,
            noise_power: 1e-6,
            seed: 1,
            bounds: Bounds { min: [0.0, 0.0], max: [14.0, 14.0] },
        }
    }

    fn blocked(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        self.blockers.iter().any(|k| k.intersects(a, b))
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Paths reaching array `b` from a UE at `ue`.
pub fn paths_for(scenario: &Scenario, ue: [f64; 2], b: usize) -> Result<Vec<PathSpec>> {
    let g = &scenario.geometry;
    let placement = scenario
        .arrays
        .get(b)
        .ok_or(Error::IndexOutOfRange { index: b, len: scenario.arrays.len() })?;
    let p = placement.position;
    let los = sub(ue, p);
    let d_los = norm(los);
    if d_los < 1e-9 {
        return Err(Error::CoincidentPosition { array: b });
    }
    let broadside = [placement.orientation.cos(), placement.orientation.sin()];
    let azimuth_of = |dir: [f64; 2]| {
        let cross = broadside[0] * dir[1] - broadside[1] * dir[0];
        let dot = broadside[0] * dir[0] + broadside[1] * dir[1];
        cross.atan2(dot)
    };
    let wavelength = g.wavelength();
    let window = (g.num_taps as f64 - 1.0) * g.tap_duration();
    let mut paths = Vec::with_capacity(1 + scenario.reflectors.len());
    let mut push = |dir: [f64; 2], length: f64, coeff: Complex64| {
        let azimuth = azimuth_of(dir);
        let delay = length / SPEED_OF_LIGHT;
        if azimuth.abs() < PI / 2.0 && delay < window {
            let gain = coeff / length * Complex64::from_polar(1.0, -2.0 * PI * length / wavelength);
            paths.push(PathSpec { azimuth, elevation: 0.0, delay, gain });
        }
    };
    if !scenario.blocked(ue, p) {
        push(los, d_los, Complex64::new(scenario.los_gain, 0.0));
    }
    for r in &scenario.reflectors {
        if scenario.blocked(ue, r.position) || scenario.blocked(r.position, p) {
            continue;
        }
        let length = norm(sub(r.position, ue)) + norm(sub(p, r.position));
        push(sub(r.position, p), length, Complex64::new(r.gain[0], r.gain[1]));
    }
    Ok(paths)
}

/// Hann-windowed sinc sampled at integer taps around `delay_taps`,
/// normalized to unit energy over the taps that fall inside `0..num_taps`.
pub fn delay_kernel(delay_taps: f64, num_taps: usize) -> Vec<f64> {
    let mut k: Vec<f64> = (0..num_taps)
        .map(|t| {
            let x = t as f64 - delay_taps;
            if x.abs() >= KERNEL_HALF_WIDTH {
                0.0
            } else {
                let sinc = if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
                sinc * 0.5 * (1.0 + (PI * x / KERNEL_HALF_WIDTH).cos())
            }
        })
        .collect();
    let energy: f64 = k.iter().map(|v| v * v).sum();
    if energy > 0.0 {
        let s = energy.sqrt().recip();
        k.iter_mut().for_each(|v| *v *= s);
    }
    k
}

/// UPA response `e^{jπ(c·sin(az)·cos(el) + r·sin(el))}` for element `(r, c)`.
pub fn steering(azimuth: f64, elevation: f64, row: usize, col: usize) -> Complex64 {
    let phase = PI * (col as f64 * azimuth.sin() * elevation.cos() + row as f64 * elevation.sin());
    Complex64::from_polar(1.0, phase)
}

/// Renders `paths` into one array's `(row, col, tap)` block.
pub fn render_array(geometry: &ArrayGeometry, paths: &[PathSpec]) -> Vec<Complex64> {
    let (rows, cols, taps) = (geometry.rows_per_array, geometry.cols_per_array, geometry.num_taps);
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols * taps];
    for path in paths {
        let kernel = delay_kernel(path.delay * geometry.bandwidth_hz, taps);
        for r in 0..rows {
            for c in 0..cols {
                let a = path.gain * steering(path.azimuth, path.elevation, r, c);
                let base = (r * cols + c) * taps;
                for (t, k) in kernel.iter().enumerate() {
                    if *k != 0.0 {
                        out[base + t] += a * k;
                    }
                }
            }
        }
    }
    out
}

/// Generator for datapoint `index`; noise comes from stream `index` of the
/// scenario seed so any subset can be regenerated independently.
pub fn synth_csi_indexed(scenario: &Scenario, ue: [f64; 2], index: u64) -> Result<CsiTensor> {
    scenario.validate()?;
    if !scenario.bounds.contains(ue) {
        return Err(Error::OutOfBounds(ue[0], ue[1]));
    }
    let g = &scenario.geometry;
    let mut values = Vec::with_capacity(g.shape().len());
    for b in 0..g.num_arrays {
        values.extend(render_array(g, &paths_for(scenario, ue, b)?));
    }
    if scenario.noise_power > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        rng.set_stream(index);
        let sigma = (scenario.noise_power / 2.0).sqrt();
        for v in values.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v += Complex64::new(sigma * re, sigma * im);
        }
    }
    CsiTensor::new(g.shape(), values)
}

pub fn synth_csi(scenario: &Scenario, ue: [f64; 2]) -> Result<CsiTensor> {
    synth_csi_indexed(scenario, ue, 0)
}

pub fn synth_dataset(scenario: &Scenario, positions: &[[f64; 2]]) -> Result<CsiDataset> {
    let points = positions
        .par_iter()
        .enumerate()
        .map(|(l, &x)| Datapoint::new(synth_csi_indexed(scenario, x, l as u64)?, x))
        .collect::<Result<Vec<_>>>()?;
    let mut ds = CsiDataset::new(scenario.geometry, points)?;
    ds.provenance.insert("generator".into(), "synth".into());
    ds.provenance.insert("seed".into(), scenario.seed.to_string());
    Ok(ds)
}

/// Row-major grid of `nx × ny` positions, alternating direction per row so
/// consecutive indices stay spatially adjacent like a measured trajectory.
pub fn serpentine_grid(min: [f64; 2], max: [f64; 2], nx: usize, ny: usize) -> Vec<[f64; 2]> {
    let step = |lo: f64, hi: f64, n: usize, i: usize| if n <= 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for k in 0..nx {
            let i = if j % 2 == 0 { k } else { nx - 1 - k };
            out.push([step(min[0], max[0], nx, i), step(min[1], max[1], ny, j)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csi::total_rx_power;
    use crate::metrics::{array_correlation, rms_delay_spread, root_music_azimuth};

    fn geometry(taps: usize) -> ArrayGeometry {
        ArrayGeometry::new(1, 2, 4, taps, 1.272e9, 50e6).unwrap()
    }

    fn los_scenario() -> Scenario {
        Scenario {
            geometry: geometry(48),
            arrays: vec![ArrayPlacement { position: [0.0, 0.0], orientation: 0.0 }],
            reflectors: vec![],
            blockers: vec![],
            los_gain: 1.0,
            noise_power: 0.0,
            seed: 9,
            bounds: Bounds { min: [-50.0, -50.0], max: [50.0, 50.0] },
        }
    }

    fn tensor(g: &ArrayGeometry, paths: &[PathSpec]) -> CsiTensor {
        CsiTensor::new(g.shape(), render_array(g, paths)).unwrap()
    }

    #[test]
    fn broadside_los_gives_zero_azimuth() {
        let s = los_scenario();
        let h = synth_csi(&s, [12.0, 0.0]).unwrap();
        let az = root_music_azimuth(&array_correlation(&h, 0).unwrap()).unwrap();
        assert!(az.abs() < 1e-3, "azimuth {az}");
    }

    #[test]
    fn integer_delay_is_a_single_tap() {
        let g = geometry(48);
        let k = 7;
        let h = tensor(&g, &[PathSpec { azimuth: 0.3, elevation: 0.0, delay: k as f64 / g.bandwidth_hz, gain: Complex64::new(0.5, 0.1) }]);
        let ant = h.antenna(0, 1, 2);
        let peak = (0..48).max_by(|&a, &b| ant[a].norm().total_cmp(&ant[b].norm())).unwrap();
        assert_eq!(peak, k);
        let ds = rms_delay_spread(&h, &g);
        assert!(ds.values.iter().all(|&v| v / g.tap_duration() < 0.05));
    }

    #[test]
    fn two_equal_paths_two_taps_apart() {
        let g = geometry(16);
        let paths = [1.0, 3.0].map(|t| PathSpec { azimuth: 0.0, elevation: 0.0, delay: t / g.bandwidth_hz, gain: Complex64::new(1.0, 0.0) });
        let ds = rms_delay_spread(&tensor(&g, &paths), &g);
        for v in &ds.values {
            assert!((v / g.tap_duration() - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn fractional_delay_spread_stays_small() {
        let g = geometry(48);
        let h = tensor(&g, &[PathSpec { azimuth: 0.0, elevation: 0.0, delay: 20.5 / g.bandwidth_hz, gain: Complex64::new(1.0, 0.0) }]);
        let ant = h.antenna(0, 0, 0);
        assert!(ant[20].norm() > 0.5 && ant[21].norm() > 0.5);
    }

    #[test]
    fn deterministic_and_noisy() {
        let mut s = los_scenario();
        s.noise_power = 1e-3;
        let pos: Vec<[f64; 2]> = (0..5).map(|i| [3.0 + i as f64, 1.0]).collect();
        let a = synth_dataset(&s, &pos).unwrap();
        let b = synth_dataset(&s, &pos).unwrap();
        assert_eq!(a, b);
        // Single-point regeneration matches the batch.
        assert_eq!(synth_csi_indexed(&s, pos[3], 3).unwrap(), a.points[3].csi);
        s.seed += 1;
        assert_ne!(synth_dataset(&s, &pos).unwrap(), a);
        assert!(synth_dataset(&s, &[]).unwrap().is_empty());
    }

    #[test]
    fn los_power_follows_inverse_square() {
        let s = los_scenario();
        let pos = serpentine_grid([1.0, -5.0], [20.0, 5.0], 10, 10);
        let ds = synth_dataset(&s, &pos).unwrap();
        for p in &ds.points {
            let d = norm(p.position);
            let power = total_rx_power(&p.csi, 0).unwrap();
            // 8 antennas, unit-energy kernel, amplitude 1/d.
            assert!((power - 8.0 / (d * d)).abs() < 1e-9 * power, "d={d} power={power}");
        }
        let mut sorted: Vec<_> = ds.points.iter().map(|p| (norm(p.position), total_rx_power(&p.csi, 0).unwrap())).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(sorted.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12)));
    }

    #[test]
    fn doubling_gains_quadruples_power() {
        let mut s = los_scenario();
        s.reflectors.push(Reflector { position: [5.0, 8.0], gain: [0.3, 0.4] });
        let p0 = synth_csi(&s, [9.0, -2.0]).unwrap().norm_sqr();
        s.los_gain *= 2.0;
        s.reflectors[0].gain = [0.6, 0.8];
        let p1 = synth_csi(&s, [9.0, -2.0]).unwrap().norm_sqr();
        assert!((p1 - 4.0 * p0).abs() < 1e-9 * p1);
    }

    #[test]
    fn single_path_is_rank_one() {
        let s = los_scenario();
        let h = synth_csi(&s, [6.0, 4.0]).unwrap();
        let r = array_correlation(&h, 0).unwrap();
        let eig = r.eigenvalues();
        let trace: f64 = eig.iter().sum();
        assert!(eig.iter().cloned().fold(0.0, f64::max) > 0.999 * trace);
    }

    #[test]
    fn blockers_and_back_hemisphere() {
        let mut s = los_scenario();
        assert!(paths_for(&s, [-5.0, 0.0], 0).unwrap().is_empty());
        s.blockers.push(Blocker { min: [2.0, -1.0], max: [3.0, 1.0] });
        assert!(paths_for(&s, [5.0, 0.0], 0).unwrap().is_empty());
        assert_eq!(paths_for(&s, [5.0, 3.0], 0).unwrap().len(), 1);
    }

    #[test]
    fn error_cases() {
        let s = los_scenario();
        assert!(matches!(synth_csi(&s, [0.0, 0.0]), Err(Error::CoincidentPosition { array: 0 })));
        assert!(matches!(synth_csi(&s, [60.0, 0.0]), Err(Error::OutOfBounds(..))));
    }

    #[test]
    fn demo_scenario_is_valid() {
        let s = Scenario::demo(ArrayGeometry::new(4, 2, 4, 16, 1.272e9, 50e6).unwrap());
        s.validate().unwrap();
        let h = synth_csi(&s, [2.0, 3.0]).unwrap();
        assert!(h.norm_sqr() > 0.0);
    }

    #[test]
    fn serpentine_order() {
        let g = serpentine_grid([0.0, 0.0], [2.0, 1.0], 3, 2);
        assert_eq!(g, vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [0.0, 1.0]]);
    }
}
