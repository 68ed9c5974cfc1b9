use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use super::mlp::{Activation, ForwardCache, Mlp, MlpGrads};
use super::spread::{moments, spread_vjp, Moments, ValueScaler};
use crate::csi::ArrayGeometry;
use crate::error::{Error, Result};

pub const GENERATOR_HIDDEN: [usize; 4] = [512, 512, 1024, 2048];
pub const CRITIC_TRUNK: [usize; 3] = [160, 100, 50];
pub const CRITIC_HEAD: [usize; 2] = [20, 10];
pub const CONDITION_DIM: usize = 2;
pub const DEFAULT_NOISE_DIM: usize = 128;

/// Hidden width after applying a width multiplier; never below 1.
pub fn scaled_width(width: usize, scale: f64) -> usize {
    ((width as f64 * scale).round() as usize).max(1)
}

fn hidden_stack(inputs: usize, hidden: &[usize], outputs: usize) -> (Vec<usize>, Vec<Activation>) {
    let mut dims = vec![inputs];
    dims.extend_from_slice(hidden);
    dims.push(outputs);
    let mut acts = vec![Activation::Relu; hidden.len()];
    acts.push(Activation::Linear);
    (dims, acts)
}

/// Flattened CSI width: real and imaginary parts of every tensor entry.
pub fn csi_width(geometry: &ArrayGeometry) -> usize {
    2 * geometry.shape().len()
}

/// `G(x, n)`: maps a scaled position and a noise vector to a flattened,
/// interleaved CSI tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub mlp: Mlp,
    pub noise_dim: usize,
    pub geometry: ArrayGeometry,
}

impl Generator {
    pub fn new(geometry: ArrayGeometry, noise_dim: usize, width_scale: f64, rng: &mut impl Rng) -> Result<Self> {
        let hidden = GENERATOR_HIDDEN.map(|w| scaled_width(w, width_scale));
        Generator::with_hidden(geometry, noise_dim, &hidden, rng)
    }

    pub fn with_hidden(geometry: ArrayGeometry, noise_dim: usize, hidden: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let (dims, acts) = hidden_stack(CONDITION_DIM + noise_dim, hidden, csi_width(&geometry));
        Generator::from_parts(Mlp::new(&dims, &acts, rng)?, noise_dim, geometry)
    }

    pub fn from_parts(mlp: Mlp, noise_dim: usize, geometry: ArrayGeometry) -> Result<Self> {
        geometry.validate()?;
        if mlp.input_dim() != CONDITION_DIM + noise_dim {
            return Err(Error::WidthMismatch { expected: CONDITION_DIM + noise_dim, got: mlp.input_dim() });
        }
        if mlp.output_dim() != csi_width(&geometry) {
            return Err(Error::WidthMismatch { expected: csi_width(&geometry), got: mlp.output_dim() });
        }
        Ok(Generator { mlp, noise_dim, geometry })
    }

    pub fn forward(&self, conditions: ArrayView2<f64>, noise: ArrayView2<f64>) -> Result<ForwardCache> {
        if conditions.ncols() != CONDITION_DIM {
            return Err(Error::WidthMismatch { expected: CONDITION_DIM, got: conditions.ncols() });
        }
        if noise.ncols() != self.noise_dim {
            return Err(Error::WidthMismatch { expected: self.noise_dim, got: noise.ncols() });
        }
        if noise.nrows() != conditions.nrows() {
            return Err(Error::Shape(format!("{} conditions but {} noise rows", conditions.nrows(), noise.nrows())));
        }
        let input = concatenate![Axis(1), conditions, noise];
        self.mlp.forward(input.view())
    }
}

/// `C(H, DS(H), x)`: a trunk compresses the flattened CSI, then the scaled
/// per-antenna delay spreads and the scaled position join before the head.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub trunk: Mlp,
    pub head: Mlp,
    pub geometry: ArrayGeometry,
}

/// Forward state of the critic on a batch.
#[derive(Debug, Clone)]
pub struct CriticForward {
    pub(crate) trunk: ForwardCache,
    pub(crate) head: ForwardCache,
    pub(crate) moments: Vec<Vec<Moments>>,
    pub(crate) x: Array2<f64>,
    pub scores: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticGrads {
    pub trunk: MlpGrads,
    pub head: MlpGrads,
}

impl CriticGrads {
    pub fn zeros_like(critic: &Critic) -> Self {
        CriticGrads { trunk: MlpGrads::zeros_like(&critic.trunk), head: MlpGrads::zeros_like(&critic.head) }
    }

    pub fn add_assign(&mut self, other: &CriticGrads) {
        self.trunk.add_assign(&other.trunk);
        self.head.add_assign(&other.head);
    }

    pub fn scale(&mut self, factor: f64) {
        self.trunk.scale(factor);
        self.head.scale(factor);
    }

    /// Same order as [`Critic::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.trunk.flatten();
        v.extend(self.head.flatten());
        v
    }
}

impl Critic {
    pub fn new(geometry: ArrayGeometry, width_scale: f64, rng: &mut impl Rng) -> Result<Self> {
        let trunk = CRITIC_TRUNK.map(|w| scaled_width(w, width_scale));
        let head = CRITIC_HEAD.map(|w| scaled_width(w, width_scale));
        Critic::with_widths(geometry, &trunk, &head, rng)
    }

    /// `trunk` lists every trunk width (all ReLU); `head` lists the hidden
    /// head widths before the single linear output.
    pub fn with_widths(geometry: ArrayGeometry, trunk: &[usize], head: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let Some(&trunk_out) = trunk.last() else {
            return Err(Error::Config("critic trunk needs at least one layer".into()));
        };
        let mut trunk_dims = vec![csi_width(&geometry)];
        trunk_dims.extend_from_slice(trunk);
        let trunk_net = Mlp::new(&trunk_dims, &vec![Activation::Relu; trunk.len()], rng)?;
        let side = geometry.shape().num_antennas() + CONDITION_DIM;
        let (dims, acts) = hidden_stack(trunk_out + side, head, 1);
        Critic::from_parts(trunk_net, Mlp::new(&dims, &acts, rng)?, geometry)
    }

    pub fn from_parts(trunk: Mlp, head: Mlp, geometry: ArrayGeometry) -> Result<Self> {
        geometry.validate()?;
        if trunk.input_dim() != csi_width(&geometry) {
            return Err(Error::WidthMismatch { expected: csi_width(&geometry), got: trunk.input_dim() });
        }
        let expected = trunk.output_dim() + geometry.shape().num_antennas() + CONDITION_DIM;
        if head.input_dim() != expected {
            return Err(Error::WidthMismatch { expected, got: head.input_dim() });
        }
        if head.output_dim() != 1 {
            return Err(Error::WidthMismatch { expected: 1, got: head.output_dim() });
        }
        Ok(Critic { trunk, head, geometry })
    }

    pub fn csi_dim(&self) -> usize {
        self.trunk.input_dim()
    }

    fn taps(&self) -> usize {
        self.geometry.num_taps
    }

    fn antennas(&self) -> usize {
        self.geometry.shape().num_antennas()
    }

    pub fn num_params(&self) -> usize {
        self.trunk.num_params() + self.head.num_params()
    }

    /// Trunk parameters, then head parameters.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.trunk.flatten();
        v.extend(self.head.flatten());
        v
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::WidthMismatch { expected: self.num_params(), got: values.len() });
        }
        let (a, b) = values.split_at(self.trunk.num_params());
        self.trunk.set_flat(a)?;
        self.head.set_flat(b)
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.trunk.param_slices_mut();
        v.extend(self.head.param_slices_mut());
        v
    }

    /// Scores a batch. Row `i` of `x` is a flattened CSI tensor and row `i`
    /// of `conditions` its scaled position; the delay-spread side input is
    /// computed from `x`.
    pub fn forward(&self, x: ArrayView2<f64>, conditions: ArrayView2<f64>, spread_scaler: &ValueScaler) -> Result<CriticForward> {
        if x.ncols() != self.csi_dim() {
            return Err(Error::WidthMismatch { expected: self.csi_dim(), got: x.ncols() });
        }
        if conditions.ncols() != CONDITION_DIM {
            return Err(Error::WidthMismatch { expected: CONDITION_DIM, got: conditions.ncols() });
        }
        if conditions.nrows() != x.nrows() {
            return Err(Error::Shape(format!("{} samples but {} conditions", x.nrows(), conditions.nrows())));
        }
        let x = x.as_standard_layout().into_owned();
        let trunk = self.trunk.forward(x.view())?;
        let taps = self.taps();
        let moments: Vec<Vec<Moments>> = x.rows().into_iter().map(|r| moments(r.as_slice().unwrap(), taps)).collect();
        let mut side = Array2::zeros((x.nrows(), self.antennas()));
        for (mut row, m) in side.rows_mut().into_iter().zip(&moments) {
            for (v, a) in row.iter_mut().zip(m) {
                *v = spread_scaler.scale(a.spread);
            }
        }
        let z = concatenate![Axis(1), trunk.output, side, conditions];
        let head = self.head.forward(z.view())?;
        let scores = head.output.column(0).to_owned();
        Ok(CriticForward { trunk, head, moments, x, scores })
    }

    /// Gradients of `Σ_i w_i·C_i`. With `with_input`, also returns the
    /// derivative with respect to each CSI row, including the path through
    /// the delay-spread side input.
    pub fn backward(
        &self,
        fwd: &CriticForward,
        weights: ArrayView1<f64>,
        spread_scaler: &ValueScaler,
        with_input: bool,
    ) -> Result<(CriticGrads, Option<Array2<f64>>)> {
        let upstream = weights.to_owned().insert_axis(Axis(1));
        let head = self.head.backward(&fwd.head, upstream.view())?;
        let t = self.trunk.output_dim();
        let a_trunk = head.input_grad.slice(s![.., ..t]);
        let trunk = self.trunk.backward(&fwd.trunk, a_trunk)?;
        let input = with_input.then(|| {
            let mut gx = trunk.input_grad.clone();
            self.add_spread_vjp(fwd, head.input_grad.view(), spread_scaler, &mut gx);
            gx
        });
        Ok((CriticGrads { trunk: trunk.grads, head: head.grads }, input))
    }

    /// Adds the delay-spread contribution of the head input adjoint `a` to
    /// the CSI gradient `gx`.
    pub(crate) fn add_spread_vjp(&self, fwd: &CriticForward, a: ArrayView2<f64>, spread_scaler: &ValueScaler, gx: &mut Array2<f64>) {
        let t = self.trunk.output_dim();
        let na = self.antennas();
        let slope = spread_scaler.slope();
        for (i, mut g) in gx.rows_mut().into_iter().enumerate() {
            let a_side: Vec<f64> = a.slice(s![i, t..t + na]).iter().map(|v| v * slope).collect();
            spread_vjp(fwd.x.row(i).as_slice().unwrap(), &fwd.moments[i], self.taps(), &a_side, g.as_slice_mut().unwrap());
        }
    }

    pub(crate) fn side_range(&self) -> std::ops::Range<usize> {
        let t = self.trunk.output_dim();
        t..t + self.antennas()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_size_widths() {
        let g = ArrayGeometry::new(4, 2, 4, 48, 1.272e9, 50e6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let gen = Generator::new(g, DEFAULT_NOISE_DIM, 1.0, &mut rng).unwrap();
        assert_eq!(gen.mlp.dims(), vec![130, 512, 512, 1024, 2048, 3072]);
        let critic = Critic::new(g, 1.0, &mut rng).unwrap();
        assert_eq!(critic.trunk.dims(), vec![3072, 160, 100, 50]);
        assert_eq!(critic.head.dims(), vec![50 + 32 + 2, 20, 10, 1]);
        assert!(critic.trunk.layers.iter().all(|l| l.activation == Activation::Relu));
        assert_eq!(critic.head.layers.last().unwrap().activation, Activation::Linear);
    }

    #[test]
    fn width_scale() {
        assert_eq!(scaled_width(512, 0.25), 128);
        assert_eq!(scaled_width(10, 0.01), 1);
        let g = ArrayGeometry::new(1, 2, 4, 16, 1.272e9, 50e6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let gen = Generator::new(g, 16, 0.25, &mut rng).unwrap();
        assert_eq!(gen.mlp.dims(), vec![18, 128, 128, 256, 512, 256]);
    }

    #[test]
    fn rejects_mismatched_parts() {
        let g = ArrayGeometry::new(1, 1, 2, 4, 1e9, 50e6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let gen = Generator::with_hidden(g, 4, &[8], &mut rng).unwrap();
        assert!(Generator::from_parts(gen.mlp.clone(), 5, g).is_err());
        let critic = Critic::with_widths(g, &[8, 4], &[3], &mut rng).unwrap();
        assert!(Critic::from_parts(critic.head.clone(), critic.trunk.clone(), g).is_err());
        let cond = Array2::zeros((2, 2));
        assert!(gen.forward(cond.view(), Array2::zeros((3, 4)).view()).is_err());
    }
}
