//! CSI tensors, datasets and the frequency/time conversions and power
//! conventions shared by the rest of the crate.
//!
//! A [`CsiTensor`] holds complex channel impulse response taps for every
//! antenna of every array. Storage order is tap-fastest, then column, row
//! and array, which is also the on-disk order of the `CSIT` format.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element spacing of every uniform planar array, in wavelengths.
pub const ELEMENT_SPACING: f64 = 0.5;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Dimensions of a CSI tensor: arrays × rows × columns × taps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorShape {
    pub arrays: usize,
    pub rows: usize,
    pub cols: usize,
    pub taps: usize,
}

impl TensorShape {
    pub fn new(arrays: usize, rows: usize, cols: usize, taps: usize) -> Self {
        TensorShape { arrays, rows, cols, taps }
    }

    pub fn antennas_per_array(&self) -> usize {
        self.rows * self.cols
    }

    pub fn num_antennas(&self) -> usize {
        self.arrays * self.rows * self.cols
    }

    pub fn len(&self) -> usize {
        self.num_antennas() * self.taps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat offset of `(b, r, c, t)`.
    #[inline]
    pub fn index(&self, b: usize, r: usize, c: usize, t: usize) -> usize {
        ((b * self.rows + r) * self.cols + c) * self.taps + t
    }
}

/// Antenna layout and RF parameters of a distributed massive MIMO system
/// made of `num_arrays` identical half-wavelength UPAs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub num_arrays: usize,
    pub rows_per_array: usize,
    pub cols_per_array: usize,
    pub num_taps: usize,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
}

impl ArrayGeometry {
    pub fn new(
        num_arrays: usize,
        rows_per_array: usize,
        cols_per_array: usize,
        num_taps: usize,
        carrier_hz: f64,
        bandwidth_hz: f64,
    ) -> Result<Self> {
        let geometry = ArrayGeometry {
            num_arrays,
            rows_per_array,
            cols_per_array,
            num_taps,
            carrier_hz,
            bandwidth_hz,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_arrays == 0
            || self.rows_per_array == 0
            || self.cols_per_array == 0
            || self.num_taps == 0
        {
            return Err(Error::Geometry(format!(
                "all dimensions must be at least 1, got {}x{}x{}x{}",
                self.num_arrays, self.rows_per_array, self.cols_per_array, self.num_taps
            )));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::Geometry(format!("bandwidth must be positive, got {}", self.bandwidth_hz)));
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(Error::Geometry(format!("carrier must be positive, got {}", self.carrier_hz)));
        }
        Ok(())
    }

    pub fn shape(&self) -> TensorShape {
        TensorShape::new(self.num_arrays, self.rows_per_array, self.cols_per_array, self.num_taps)
    }

    /// Duration of one TDL tap in seconds.
    pub fn tap_duration(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn element_spacing(&self) -> f64 {
        ELEMENT_SPACING
    }
}

/// Complex CIR taps for all antennas, shape `B × M_r × M_c × N_tap`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiTensor {
    shape: TensorShape,
    values: Vec<Complex64>,
}

impl CsiTensor {
    pub fn new(shape: TensorShape, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::Shape(format!(
                "expected {} values for {:?}, got {}",
                shape.len(),
                shape,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite(format!("CSI entry {i}")));
        }
        Ok(CsiTensor { shape, values })
    }

    pub fn zeros(shape: TensorShape) -> Self {
        CsiTensor { shape, values: vec![Complex64::new(0.0, 0.0); shape.len()] }
    }

    pub fn from_fn(shape: TensorShape, mut f: impl FnMut(usize, usize, usize, usize) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(shape.len());
        for b in 0..shape.arrays {
            for r in 0..shape.rows {
                for c in 0..shape.cols {
                    for t in 0..shape.taps {
                        values.push(f(b, r, c, t));
                    }
                }
            }
        }
        CsiTensor { shape, values }
    }

    /// Rebuilds a tensor from interleaved `(re, im)` pairs as produced by
    /// [`CsiTensor::to_interleaved`].
    pub fn from_interleaved(shape: TensorShape, data: &[f64]) -> Result<Self> {
        if data.len() != 2 * shape.len() {
            return Err(Error::Shape(format!(
                "expected {} reals for {:?}, got {}",
                2 * shape.len(),
                shape,
                data.len()
            )));
        }
        let values = data.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        CsiTensor::new(shape, values)
    }

    pub fn to_interleaved(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.values.len());
        for v in &self.values {
            out.push(v.re);
            out.push(v.im);
        }
        out
    }

    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, b: usize, r: usize, c: usize, t: usize) -> Complex64 {
        self.values[self.shape.index(b, r, c, t)]
    }

    /// Taps of one antenna.
    pub fn antenna(&self, b: usize, r: usize, c: usize) -> &[Complex64] {
        let start = self.shape.index(b, r, c, 0);
        &self.values[start..start + self.shape.taps]
    }

    /// All taps of one array, row-major over `(row, col, tap)`.
    pub fn array(&self, b: usize) -> &[Complex64] {
        let n = self.shape.antennas_per_array() * self.shape.taps;
        &self.values[b * n..(b + 1) * n]
    }

    pub fn scaled(&self, alpha: Complex64) -> CsiTensor {
        CsiTensor { shape: self.shape, values: self.values.iter().map(|v| v * alpha).collect() }
    }

    /// Multiplies every entry by `e^{j·phase}`.
    pub fn rotated(&self, phase: f64) -> CsiTensor {
        self.scaled(Complex64::from_polar(1.0, phase))
    }

    /// Squared Frobenius norm over the whole tensor.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `Σ self · conj(other)` over all entries.
    pub fn inner(&self, other: &CsiTensor) -> Complex64 {
        debug_assert_eq!(self.shape, other.shape);
        self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Datapoint {
    pub csi: CsiTensor,
    /// UE position in meters.
    pub position: [f64; 2],
}

impl Datapoint {
    pub fn new(csi: CsiTensor, position: [f64; 2]) -> Result<Self> {
        if !(position[0].is_finite() && position[1].is_finite()) {
            return Err(Error::NonFinite(format!("position {position:?}")));
        }
        Ok(Datapoint { csi, position })
    }
}

/// Position-labeled CSI measurements sharing one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiDataset {
    pub geometry: ArrayGeometry,
    pub points: Vec<Datapoint>,
    /// Linear power mapped to 0 dB, set by [`normalize_dataset_power`].
    pub power_reference: Option<f64>,
    /// Free-form provenance strings carried in the metadata sidecar.
    pub provenance: BTreeMap<String, String>,
}

impl CsiDataset {
    pub fn new(geometry: ArrayGeometry, points: Vec<Datapoint>) -> Result<Self> {
        geometry.validate()?;
        let shape = geometry.shape();
        if let Some(i) = points.iter().position(|p| p.csi.shape() != shape) {
            return Err(Error::Shape(format!(
                "datapoint {i} has shape {:?}, geometry expects {:?}",
                points[i].csi.shape(),
                shape
            )));
        }
        Ok(CsiDataset { geometry, points, power_reference: None, provenance: BTreeMap::new() })
    }

    pub fn empty(geometry: ArrayGeometry) -> Self {
        CsiDataset { geometry, points: Vec::new(), power_reference: None, provenance: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| p.position).collect()
    }

    /// Copy of the dataset restricted to `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> CsiDataset {
        CsiDataset {
            geometry: self.geometry,
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            power_reference: self.power_reference,
            provenance: self.provenance.clone(),
        }
    }

    /// `10·log10(power / power_reference)`; the reference defaults to 1.
    pub fn power_db(&self, power: f64) -> f64 {
        10.0 * (power / self.power_reference.unwrap_or(1.0)).log10()
    }
}

/// Inverse DFT of each antenna's `N_sub` subcarrier coefficients (the last
/// axis of `freq`), truncated to the first `n_tap` taps.
///
/// The inverse transform carries the `1/N_sub` factor, so a flat spectrum
/// maps to a unit impulse at tap 0. No cyclic shift is applied.
pub fn freq_to_time(freq: &CsiTensor, n_tap: usize) -> Result<CsiTensor> {
    let shape = freq.shape();
    let n_sub = shape.taps;
    if n_sub == 0 || n_tap == 0 {
        return Err(Error::Shape(format!("need at least one subcarrier and tap (N_sub={n_sub}, n_tap={n_tap})")));
    }
    if n_tap > n_sub {
        return Err(Error::TooManyTaps { n_tap, n_sub });
    }
    let ifft = FftPlanner::new().plan_fft_inverse(n_sub);
    let scale = 1.0 / n_sub as f64;
    let out_shape = TensorShape { taps: n_tap, ..shape };
    let mut out = Vec::with_capacity(out_shape.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); n_sub];
    for antenna in freq.values().chunks_exact(n_sub) {
        buf.copy_from_slice(antenna);
        ifft.process(&mut buf);
        out.extend(buf[..n_tap].iter().map(|v| v * scale));
    }
    CsiTensor::new(out_shape, out)
}

/// `‖H_b‖²_F`: total received power over all antennas and taps of array `b`.
pub fn total_rx_power(csi: &CsiTensor, b: usize) -> Result<f64> {
    let arrays = csi.shape().arrays;
    if b >= arrays {
        return Err(Error::IndexOutOfRange { index: b, len: arrays });
    }
    Ok(csi.array(b).iter().map(|v| v.norm_sqr()).sum())
}

/// Which powers are compared when picking the 0 dB reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerBasis {
    /// `‖H^(l)‖²_F` over the whole tensor.
    #[default]
    WholeTensor,
    /// `‖H^(l)_b‖²_F` per array.
    PerArray,
}

/// Maximum power over all datapoints of all given datasets, under `basis`.
pub fn power_reference<'a>(datasets: impl IntoIterator<Item = &'a CsiDataset>, basis: PowerBasis) -> Result<f64> {
    let mut max = None::<f64>;
    for ds in datasets {
        for p in &ds.points {
            let power = match basis {
                PowerBasis::WholeTensor => p.csi.norm_sqr(),
                PowerBasis::PerArray => (0..p.csi.shape().arrays)
                    .map(|b| total_rx_power(&p.csi, b))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0, f64::max),
            };
            max = Some(max.map_or(power, |m| m.max(power)));
        }
    }
    match max {
        None => Err(Error::EmptyDataset),
        Some(m) if m <= 0.0 => Err(Error::ZeroPower),
        Some(m) => Ok(m),
    }
}

/// Returns a copy of `dataset` whose `power_reference` is its maximum power,
/// so that the strongest datapoint reads exactly 0 dB.
pub fn normalize_dataset_power(dataset: &CsiDataset, basis: PowerBasis) -> Result<CsiDataset> {
    let reference = power_reference([dataset], basis)?;
    let mut out = dataset.clone();
    out.power_reference = Some(reference);
    Ok(out)
}
