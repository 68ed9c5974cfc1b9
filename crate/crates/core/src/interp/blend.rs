use num_complex::Complex64;

use crate::csi::CsiTensor;
use crate::error::{Error, Result};

/// Smallest triangle area accepted by [`barycentric`], in m².
pub const MIN_TRIANGLE_AREA: f64 = 1e-9;

/// Affine coordinates of a point with respect to a triangle; they sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarycentricCoords(pub [f64; 3]);

impl BarycentricCoords {
    pub fn is_inside(&self, tol: f64) -> bool {
        self.0.iter().all(|&s| s >= -tol)
    }

    pub fn reconstruct(&self, vertices: [[f64; 2]; 3]) -> [f64; 2] {
        let mut p = [0.0; 2];
        for (s, v) in self.0.iter().zip(vertices) {
            p[0] += s * v[0];
            p[1] += s * v[1];
        }
        p
    }
}

pub fn barycentric(vertices: [[f64; 2]; 3], x: [f64; 2]) -> Result<BarycentricCoords> {
    let [a, b, c] = vertices;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    if det.abs() / 2.0 <= MIN_TRIANGLE_AREA {
        return Err(Error::DegenerateTriangle(det.abs() / 2.0));
    }
    let s1 = ((b[0] - x[0]) * (c[1] - x[1]) - (c[0] - x[0]) * (b[1] - x[1])) / det;
    let s2 = ((c[0] - x[0]) * (a[1] - x[1]) - (a[0] - x[0]) * (c[1] - x[1])) / det;
    Ok(BarycentricCoords([s1, s2, 1.0 - s1 - s2]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendOptions {
    /// Stop once an iteration lowers the objective by less than this
    /// fraction of its previous value.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BlendOptions {
    fn default() -> Self {
        BlendOptions { tol: 1e-10, max_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Blend {
    pub csi: CsiTensor,
    /// Per-vertex phase offsets `φ_i`.
    pub phases: [f64; 3],
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every half-step (H update, then φ update).
    pub history: Vec<f64>,
    /// All three vertex tensors were zero.
    pub degenerate: bool,
}

fn objective(h: [&CsiTensor; 3], s: &BarycentricCoords, phases: &[f64; 3], blend: &CsiTensor) -> f64 {
    (0..3)
        .map(|i| {
            let rot = Complex64::from_polar(1.0, phases[i]);
            let err: f64 = h[i].values().iter().zip(blend.values()).map(|(a, b)| (a - rot * b).norm_sqr()).sum();
            s.0[i] * err
        })
        .sum()
}

/// Phase-aligned barycentric blend of three vertex tensors.
///
/// Minimizes `Σ s_i ‖H_i − e^{jφ_i}·H‖²` over `H` and `φ` by alternating the
/// closed-form updates `H = Σ s_i e^{−jφ_i} H_i` and `φ_i = arg⟨H_i, H⟩`,
/// starting from `φ = 0`. The result is defined up to one global phase.
pub fn phase_aligned_blend(h: [&CsiTensor; 3], s: &BarycentricCoords, options: BlendOptions) -> Result<Blend> {
    let shape = h[0].shape();
    if h[1].shape() != shape || h[2].shape() != shape {
        return Err(Error::Shape("vertex tensors differ in shape".into()));
    }
    let sum: f64 = s.0.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || s.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Shape(format!("barycentric coordinates {:?} do not sum to 1", s.0)));
    }
    if h.iter().all(|t| t.values().iter().all(|v| v.norm_sqr() == 0.0)) {
        return Ok(Blend {
            csi: CsiTensor::zeros(shape),
            phases: [0.0; 3],
            objective: 0.0,
            iterations: 0,
            history: vec![0.0],
            degenerate: true,
        });
    }

    let mut phases = [0.0f64; 3];
    let mut history = Vec::new();
    let mut blend = CsiTensor::zeros(shape);
    let mut prev = f64::INFINITY;
    let mut iterations = 0;
    let mut current = 0.0;
    while iterations < options.max_iter {
        iterations += 1;
        let weights: [Complex64; 3] = [0, 1, 2].map(|i| Complex64::from_polar(s.0[i], -phases[i]));
        let values: Vec<Complex64> = (0..shape.len())
            .map(|k| weights[0] * h[0].values()[k] + weights[1] * h[1].values()[k] + weights[2] * h[2].values()[k])
            .collect();
        blend = CsiTensor::new(shape, values)?;
        history.push(objective(h, s, &phases, &blend));

        for i in 0..3 {
            phases[i] = h[i].inner(&blend).arg();
        }
        current = objective(h, s, &phases, &blend);
        history.push(current);

        if current <= 0.0 || prev - current < options.tol * prev {
            break;
        }
        prev = current;
    }
    Ok(Blend { csi: blend, phases, objective: current, iterations, history, degenerate: false })
}
