//! Dataset persistence (`CSIT` binary format), the strided train/test split
//! with a spatial hole, and the affine condition scaler used for GAN inputs.
//!
//! `CSIT` layout, all little-endian:
//!
//! ```text
//! "CSIT"  u16 version
//! u32 B, u32 M_r, u32 M_c, u32 N_tap, u32 L
//! f64 carrier_hz, f64 bandwidth_hz
//! L × { f32 x, f32 y, B·M_r·M_c·N_tap × (f32 re, f32 im) }
//! ```
//!
//! CSI entries are tap-fastest, then column, row and array. Provenance
//! strings live in a JSON sidecar at `<path>.meta.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csi::{ArrayGeometry, CsiDataset, CsiTensor, Datapoint};
use crate::error::{Error, FormatError, Result};

pub const CSIT_MAGIC: [u8; 4] = *b"CSIT";
pub const CSIT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 5 * 4 + 2 * 8;

#[derive(Debug, Default, Serialize, Deserialize)]
struct Sidecar {
    provenance: BTreeMap<String, String>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Serializes `dataset` into `CSIT` bytes (payload rounded to f32).
pub fn encode_dataset(dataset: &CsiDataset) -> Vec<u8> {
    let g = &dataset.geometry;
    let record = 8 + 8 * g.shape().len();
    let mut out = Vec::with_capacity(HEADER_LEN + record * dataset.len());
    out.extend_from_slice(&CSIT_MAGIC);
    out.extend_from_slice(&CSIT_VERSION.to_le_bytes());
    for dim in [g.num_arrays, g.rows_per_array, g.cols_per_array, g.num_taps, dataset.len()] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    out.extend_from_slice(&g.carrier_hz.to_le_bytes());
    out.extend_from_slice(&g.bandwidth_hz.to_le_bytes());
    for p in &dataset.points {
        out.extend_from_slice(&(p.position[0] as f32).to_le_bytes());
        out.extend_from_slice(&(p.position[1] as f32).to_le_bytes());
        for v in p.csi.values() {
            out.extend_from_slice(&(v.re as f32).to_le_bytes());
            out.extend_from_slice(&(v.im as f32).to_le_bytes());
        }
    }
    out
}

/// Little-endian cursor that reports short reads as [`FormatError::Truncated`].
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.buf.len() - self.pos < n {
            return Err(FormatError::Truncated {
                needed: (self.pos + n) as u64,
                available: self.buf.len() as u64,
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Result<f32, FormatError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses `CSIT` bytes. Provenance is left empty.
pub fn decode_dataset(bytes: &[u8]) -> Result<CsiDataset> {
    let mut r = Reader::new(bytes);
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != CSIT_MAGIC {
        return Err(FormatError::BadMagic { expected: CSIT_MAGIC, found: magic }.into());
    }
    let version = r.u16()?;
    if version != CSIT_VERSION {
        return Err(FormatError::VersionMismatch { expected: CSIT_VERSION, found: version }.into());
    }
    let dims = [r.u32()?, r.u32()?, r.u32()?, r.u32()?];
    let count = r.u32()? as u64;
    let carrier_hz = r.f64()?;
    let bandwidth_hz = r.f64()?;
    let geometry = ArrayGeometry::new(
        dims[0] as usize,
        dims[1] as usize,
        dims[2] as usize,
        dims[3] as usize,
        carrier_hz,
        bandwidth_hz,
    )
    .map_err(|e| FormatError::Header(e.to_string()))?;
    let shape = geometry.shape();

    let record = 8 + 8 * shape.len() as u64;
    let declared = record
        .checked_mul(count)
        .ok_or_else(|| FormatError::Header(format!("record count {count} overflows")))?;
    let actual = (bytes.len() - HEADER_LEN) as u64;
    if actual < declared {
        return Err(FormatError::Truncated { needed: HEADER_LEN as u64 + declared, available: bytes.len() as u64 }.into());
    }
    if actual > declared {
        return Err(FormatError::LengthMismatch { declared, actual }.into());
    }

    let mut points = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let position = [r.f32()? as f64, r.f32()? as f64];
        let mut values = Vec::with_capacity(shape.len());
        for _ in 0..shape.len() {
            let re = r.f32()? as f64;
            let im = r.f32()? as f64;
            values.push(Complex64::new(re, im));
        }
        points.push(Datapoint::new(CsiTensor::new(shape, values)?, position)?);
    }
    CsiDataset::new(geometry, points)
}

pub fn save_dataset(dataset: &CsiDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_dataset(dataset))?;
    let sidecar = Sidecar { provenance: dataset.provenance.clone() };
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&sidecar).map_err(FormatError::from)?)?;
    Ok(())
}

/// Loads a `CSIT` file and, when present, its provenance sidecar.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<CsiDataset> {
    let path = path.as_ref();
    let mut dataset = decode_dataset(&fs::read(path)?)?;
    let meta = sidecar_path(path);
    if meta.exists() {
        let sidecar: Sidecar = serde_json::from_slice(&fs::read(meta)?).map_err(FormatError::from)?;
        dataset.provenance = sidecar.provenance;
    }
    Ok(dataset)
}

/// Strided split with a circular hole cut out of the training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub stride: usize,
    pub test_offset: usize,
    pub train_offset: usize,
    pub hole_center: [f64; 2],
    pub hole_diameter: f64,
}

impl SplitSpec {
    /// Stride 4, offsets 0/2 and a 4 m hole around `hole_center`.
    pub fn new(hole_center: [f64; 2]) -> Self {
        SplitSpec { stride: 4, test_offset: 0, train_offset: 2, hole_center, hole_diameter: 4.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::SplitSpec("stride must be at least 1".into()));
        }
        if self.test_offset >= self.stride || self.train_offset >= self.stride {
            return Err(Error::SplitSpec(format!(
                "offsets ({}, {}) must be below the stride {}",
                self.test_offset, self.train_offset, self.stride
            )));
        }
        if !(self.hole_diameter >= 0.0) {
            return Err(Error::SplitSpec(format!("hole diameter must be non-negative, got {}", self.hole_diameter)));
        }
        Ok(())
    }

    pub fn in_hole(&self, position: [f64; 2]) -> bool {
        let dx = position[0] - self.hole_center[0];
        let dy = position[1] - self.hole_center[1];
        dx.hypot(dy) <= self.hole_diameter / 2.0
    }
}

/// Index sets of a split; useful when the caller needs to know which
/// original datapoints went where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices(positions: &[[f64; 2]], spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    if spec.stride > positions.len() {
        return Err(Error::EmptySplit { stride: spec.stride, len: positions.len() });
    }
    let test = (0..positions.len()).filter(|i| i % spec.stride == spec.test_offset).collect();
    let train = if spec.train_offset == spec.test_offset {
        Vec::new()
    } else {
        (0..positions.len())
            .filter(|&i| i % spec.stride == spec.train_offset && !spec.in_hole(positions[i]))
            .collect()
    };
    Ok(SplitIndices { train, test })
}

/// Splits a trajectory-ordered dataset into `(train, test)`.
///
/// Test points are every `stride`-th datapoint starting at `test_offset`;
/// train points use `train_offset` and additionally exclude the hole disc.
/// Equal offsets would make the sets overlap, so train is empty then.
pub fn split_train_test(dataset: &CsiDataset, spec: &SplitSpec) -> Result<(CsiDataset, CsiDataset)> {
    let idx = split_indices(&dataset.positions(), spec)?;
    Ok((dataset.subset(&idx.train), dataset.subset(&idx.test)))
}

/// Per-dimension affine map of positions from the fitted `[min, max]` box to
/// `[-1, 1]`. Positions outside the box are not clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionScaler {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl ConditionScaler {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        for d in 0..2 {
            if !(min[d] < max[d]) {
                return Err(Error::DegenerateExtent { dim: d, value: min[d] });
            }
        }
        Ok(ConditionScaler { min, max })
    }

    pub fn fit(positions: &[[f64; 2]]) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in positions {
            for d in 0..2 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        ConditionScaler::new(min, max)
    }

    pub fn scale(&self, x: [f64; 2]) -> [f64; 2] {
        [0, 1].map(|d| 2.0 * (x[d] - self.min[d]) / (self.max[d] - self.min[d]) - 1.0)
    }

    pub fn unscale(&self, y: [f64; 2]) -> [f64; 2] {
        [0, 1].map(|d| (y[d] + 1.0) / 2.0 * (self.max[d] - self.min[d]) + self.min[d])
    }
}

pub fn fit_condition_scaler(train: &CsiDataset) -> Result<ConditionScaler> {
    ConditionScaler::fit(&train.positions())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csi::TensorShape;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dataset(n: usize, seed: u64) -> CsiDataset {
        let g = ArrayGeometry::new(2, 2, 2, 3, 1.272e9, 50e6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..n)
            .map(|_| {
                let csi = CsiTensor::from_fn(g.shape(), |_, _, _, _| {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                });
                Datapoint::new(csi, [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)]).unwrap()
            })
            .collect();
        CsiDataset::new(g, points).unwrap()
    }

    fn line_dataset(n: usize) -> CsiDataset {
        let g = ArrayGeometry::new(1, 1, 1, 1, 1e9, 1e6).unwrap();
        let points = (0..n)
            .map(|i| Datapoint::new(CsiTensor::zeros(TensorShape::new(1, 1, 1, 1)), [i as f64, 0.0]).unwrap())
            .collect();
        CsiDataset::new(g, points).unwrap()
    }

    fn f32_round(v: f64) -> f64 {
        v as f32 as f64
    }

    #[test]
    fn round_trip_at_f32_precision() {
        let ds = random_dataset(10, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.csit");
        let mut with_meta = ds.clone();
        with_meta.provenance.insert("source".into(), "unit test".into());
        save_dataset(&with_meta, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back.geometry, ds.geometry);
        assert_eq!(back.provenance.get("source").map(String::as_str), Some("unit test"));
        for (a, b) in ds.points.iter().zip(&back.points) {
            assert_eq!(b.position, a.position.map(f32_round));
            for (x, y) in a.csi.values().iter().zip(b.csi.values()) {
                assert_eq!(y.re, f32_round(x.re));
                assert_eq!(y.im, f32_round(x.im));
            }
        }
        // Re-encoding a loaded dataset is byte-identical.
        assert_eq!(encode_dataset(&back), fs::read(&path).unwrap());
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_dataset(&random_dataset(2, 2));
        bytes[..4].copy_from_slice(b"XXXX");
        let err = decode_dataset(&bytes).unwrap_err();
        assert!(matches!(err, Error::Format(FormatError::BadMagic { found, .. }) if &found == b"XXXX"));
    }

    #[test]
    fn version_mismatch() {
        let mut bytes = encode_dataset(&random_dataset(2, 2));
        bytes[4..6].copy_from_slice(&7u16.to_le_bytes());
        assert!(matches!(decode_dataset(&bytes), Err(Error::Format(FormatError::VersionMismatch { found: 7, .. }))));
    }

    #[test]
    fn truncated_payload() {
        let ds = random_dataset(5, 3);
        let bytes = encode_dataset(&ds);
        let record = (bytes.len() - HEADER_LEN) / 5;
        let four_records = &bytes[..HEADER_LEN + 4 * record];
        assert!(matches!(decode_dataset(four_records), Err(Error::Format(FormatError::Truncated { .. }))));
        assert!(matches!(decode_dataset(&bytes[..10]), Err(Error::Format(FormatError::Truncated { .. }))));
    }

    #[test]
    fn trailing_bytes_are_length_mismatch() {
        let mut bytes = encode_dataset(&random_dataset(3, 4));
        bytes.extend_from_slice(&[0u8; 5]);
        assert!(matches!(decode_dataset(&bytes), Err(Error::Format(FormatError::LengthMismatch { .. }))));
    }

    #[test]
    fn split_line_examples() {
        let ds = line_dataset(12);
        let mut spec = SplitSpec::new([6.0, 0.0]);
        spec.hole_diameter = 0.0;
        let idx = split_indices(&ds.positions(), &spec).unwrap();
        assert_eq!(idx.test, vec![0, 4, 8]);
        // A zero-diameter hole still excludes a point exactly at its center.
        assert_eq!(idx.train, vec![2, 10]);
        spec.hole_center = [100.0, 0.0];
        assert_eq!(split_indices(&ds.positions(), &spec).unwrap().train, vec![2, 6, 10]);
        spec.hole_center = [6.0, 0.0];
        spec.hole_diameter = 2.0;
        assert_eq!(split_indices(&ds.positions(), &spec).unwrap().train, vec![2, 10]);
        let (train, test) = split_train_test(&ds, &spec).unwrap();
        assert_eq!(train.positions(), vec![[2.0, 0.0], [10.0, 0.0]]);
        assert_eq!(test.len(), 3);
    }

    #[test]
    fn split_errors() {
        let ds = line_dataset(3);
        let spec = SplitSpec::new([0.0, 0.0]);
        assert!(matches!(split_train_test(&ds, &spec), Err(Error::EmptySplit { stride: 4, len: 3 })));
        let bad = SplitSpec { test_offset: 4, ..spec };
        assert!(matches!(bad.validate(), Err(Error::SplitSpec(_))));
    }

    #[test]
    fn split_ratio_on_grid() {
        // 50 × 40 grid over 14 m × 14 m, row-major trajectory.
        let positions: Vec<[f64; 2]> = (0..2000).map(|i| [(i % 50) as f64 * 14.0 / 49.0, (i / 50) as f64 * 14.0 / 39.0]).collect();
        let spec = SplitSpec::new([7.0, 7.0]);
        let idx = split_indices(&positions, &spec).unwrap();
        let hole_in_train = (0..2000).filter(|&i| i % 4 == 2 && spec.in_hole(positions[i])).count();
        assert_eq!(idx.train.len() + hole_in_train, 500);
        let ratio = idx.train.len() as f64 / idx.test.len() as f64;
        assert!((0.7..=1.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn scaler_examples() {
        let s = ConditionScaler::fit(&[[0.0, 0.0], [10.0, 20.0]]).unwrap();
        assert_eq!(s.scale([5.0, 10.0]), [0.0, 0.0]);
        assert_eq!(s.scale([0.0, 0.0]), [-1.0, -1.0]);
        assert_eq!(s.scale([20.0, 40.0]), [3.0, 3.0]);
        assert!(matches!(ConditionScaler::fit(&[[1.0, 0.0], [1.0, 5.0]]), Err(Error::DegenerateExtent { dim: 0, .. })));
        assert!(matches!(ConditionScaler::fit(&[]), Err(Error::EmptyDataset)));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = [rng.random_range(0.0..10.0), rng.random_range(0.0..20.0)];
            let back = s.unscale(s.scale(x));
            assert!((back[0] - x[0]).abs() < 1e-9 && (back[1] - x[1]).abs() < 1e-9);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn split_is_disjoint_and_respects_hole(
                n in 1usize..200,
                stride in 1usize..6,
                test_off in 0usize..6,
                train_off in 0usize..6,
                cx in -5.0f64..5.0,
                diam in 0.0f64..6.0,
                seed in any::<u64>(),
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let positions: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]).collect();
                let spec = SplitSpec { stride, test_offset: test_off % stride, train_offset: train_off % stride, hole_center: [cx, 0.0], hole_diameter: diam };
                match split_indices(&positions, &spec) {
                    Err(Error::EmptySplit { .. }) => prop_assert!(stride > n),
                    Err(e) => prop_assert!(false, "{e}"),
                    Ok(idx) => {
                        prop_assert!(idx.train.iter().all(|i| !idx.test.contains(i)));
                        prop_assert!(idx.test.iter().all(|i| i % stride == spec.test_offset));
                        for &i in &idx.train {
                            let p = positions[i];
                            prop_assert!((p[0] - cx).hypot(p[1]) > diam / 2.0);
                        }
                    }
                }
            }
        }
    }
}
