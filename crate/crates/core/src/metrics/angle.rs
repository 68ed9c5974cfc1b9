//! Array correlation and single-source root-MUSIC azimuth estimation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::csi::CsiTensor;
use crate::error::{Error, Result};

/// Roots this far outside the unit circle still count as "inside"; a
/// noiseless double root on the circle splits by about `sqrt(eps)`.
const UNIT_CIRCLE_SLACK: f64 = 1e-6;
/// Roots closer than this are treated as one double root.
const DOUBLE_ROOT_SEPARATION: f64 = 1e-5;

/// Column-domain correlation `R̂^(b)` of one array, `M_c × M_c` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub array: usize,
    pub size: usize,
    pub entries: Vec<Complex64>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.size + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.size).map(|i| self.get(i, i).re).sum()
    }

    pub fn scaled(&self, c: f64) -> CorrelationMatrix {
        CorrelationMatrix { entries: self.entries.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.size, self.size, &self.entries)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.to_matrix().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// `R̂_{c1,c2} = Σ_{rows} Σ_{taps} H[b,r,c1,t] · conj(H[b,r,c2,t])`.
pub fn array_correlation(csi: &CsiTensor, b: usize) -> Result<CorrelationMatrix> {
    let shape = csi.shape();
    if b >= shape.arrays {
        return Err(Error::IndexOutOfRange { index: b, len: shape.arrays });
    }
    let m = shape.cols;
    let mut entries = vec![Complex64::new(0.0, 0.0); m * m];
    for r in 0..shape.rows {
        for c1 in 0..m {
            let h1 = csi.antenna(b, r, c1);
            for c2 in c1..m {
                let h2 = csi.antenna(b, r, c2);
                let s: Complex64 = h1.iter().zip(h2).map(|(x, y)| x * y.conj()).sum();
                entries[c1 * m + c2] += s;
            }
        }
    }
    for c1 in 0..m {
        entries[c1 * m + c1].im = 0.0;
        for c2 in c1 + 1..m {
            entries[c2 * m + c1] = entries[c1 * m + c2].conj();
        }
    }
    Ok(CorrelationMatrix { array: b, size: m, entries })
}

/// Coefficients (ascending powers of `z`) of the root-MUSIC polynomial
/// `z^{M-1} · Σ_k c_k z^k`, where `c_k` sums the `k`-th diagonal of the
/// noise-subspace projector for a single source.
pub fn root_music_polynomial(corr: &CorrelationMatrix) -> Result<Vec<Complex64>> {
    let m = corr.size;
    if m < 2 {
        return Err(Error::Shape(format!("root-MUSIC needs at least 2 columns, got {m}")));
    }
    let trace = corr.trace();
    if !(trace.is_finite() && trace > 1e-200) {
        return Err(Error::NoSignal(trace));
    }
    let normalized = corr.to_matrix() / Complex64::new(trace, 0.0);
    let eig = normalized.symmetric_eigen();
    let top = (0..m).max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
    let u = eig.eigenvectors.column(top).normalize();
    // Noise projector I − u·uᴴ.
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * m - 1];
    for row in 0..m {
        for col in 0..m {
            let id = if row == col { 1.0 } else { 0.0 };
            let p = Complex64::new(id, 0.0) - u[row] * u[col].conj();
            coeffs[col + m - 1 - row] += p;
        }
    }
    Ok(coeffs)
}

/// Single-source root-MUSIC azimuth in radians, 0 at broadside.
///
/// Picks the polynomial root inside (or within numerical slack of) the unit
/// circle that lies closest to it; ties go to the larger modulus and then
/// the smaller `|arg|`. The half-wavelength phase model gives
/// `azimuth = asin(arg(z) / π)`.
pub fn root_music_azimuth(corr: &CorrelationMatrix) -> Result<f64> {
    let coeffs = root_music_polynomial(corr)?;
    let roots = polynomial_roots(&coeffs);
    let best = roots
        .iter()
        .filter(|z| z.norm() <= 1.0 + UNIT_CIRCLE_SLACK)
        .min_by(|a, b| {
            let da = (1.0 - a.norm()).abs();
            let db = (1.0 - b.norm()).abs();
            da.total_cmp(&db)
                .then(b.norm().total_cmp(&a.norm()))
                .then(a.arg().abs().total_cmp(&b.arg().abs()))
        })
        .ok_or(Error::NoSignal(corr.trace()))?;
    let best = polish_double_root(&coeffs, &roots, *best);
    let s = best.arg() / PI;
    if s.abs() > 1.0 {
        return Err(Error::AmbiguousAngle(s));
    }
    Ok(s.asin())
}

/// A noise-free signal root is double, so the computed pair is only
/// accurate to about the square root of machine precision. Refine it as a
/// simple root of the derivative.
fn polish_double_root(coeffs: &[Complex64], roots: &[Complex64], best: Complex64) -> Complex64 {
    let Some(partner) = roots.iter().filter(|&&z| z != best).min_by(|a, b| (*a - best).norm().total_cmp(&(*b - best).norm()))
    else {
        return best;
    };
    if (partner - best).norm() > DOUBLE_ROOT_SEPARATION {
        return best;
    }
    let deriv: Vec<Complex64> = coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
    let mut z = (best + partner) / 2.0;
    for _ in 0..50 {
        let (d, dd) = horner(&deriv, z);
        if dd.norm() == 0.0 {
            break;
        }
        let step = d / dd;
        z -= step;
        if step.norm() <= 1e-16 * z.norm() {
            break;
        }
    }
    if z.is_finite() && (z - best).norm() <= DOUBLE_ROOT_SEPARATION {
        z
    } else {
        best
    }
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of `Σ coeffs[k]·z^k` by Aberth–Ehrlich iteration.
///
/// Negligible leading coefficients are dropped (roots at infinity); zero
/// trailing coefficients yield exact roots at the origin.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1].norm() <= 1e-14 * scale {
        hi -= 1;
    }
    let mut lo = 0;
    while lo < hi && coeffs[lo].norm() == 0.0 {
        lo += 1;
    }
    let mut roots = vec![Complex64::new(0.0, 0.0); lo];
    let poly: Vec<Complex64> = coeffs[lo..hi].iter().map(|c| c / coeffs[hi - 1]).collect();
    let n = poly.len().saturating_sub(1);
    if n == 0 {
        return roots;
    }
    // Start on a circle whose radius is the geometric mean of root moduli.
    let radius = poly[0].norm().powf(1.0 / n as f64).max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for k in 0..n {
            let (p, dp) = horner(&poly, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                max_step = max_step.max(step.norm() / z[k].norm().max(1e-300));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    roots.extend(z);
    roots
}
