use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Linear => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Linear),
            _ => None,
        }
    }
}

/// Dense layer `y = act(W x + b)` with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Layer { weight: Array2::zeros((outputs, inputs)), bias: Array1::zeros(outputs), activation }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Everything the backward passes need from a batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

/// Result of a backward pass: parameter gradients summed over the batch,
/// the per-row input gradient, and each layer's pre-activation adjoint.
#[derive(Debug, Clone)]
pub struct Backward {
    pub grads: MlpGrads,
    pub input_grad: Array2<f64>,
    deltas: Vec<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<Layer>,
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        MlpGrads {
            layers: mlp.layers.iter().map(|l| Layer::zeros(l.inputs(), l.outputs(), l.activation)).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &MlpGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weight *= factor;
            l.bias *= factor;
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }
}

fn flatten_layers(layers: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend(l.weight.iter());
        out.extend(l.bias.iter());
    }
    out
}

fn relu_mask(pre: &Array2<f64>) -> Array2<f64> {
    pre.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 })
}

impl Mlp {
    /// Builds a network with the given widths (`dims[0]` inputs) and one
    /// activation per layer. Weights are uniform in `±sqrt(6/(fan_in+fan_out))`,
    /// biases zero.
    pub fn new(dims: &[usize], activations: &[Activation], rng: &mut impl Rng) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 || dims.contains(&0) {
            return Err(Error::Config(format!("invalid layer widths {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                let weight = Array2::from_shape_simple_fn((w[1], w[0]), || rng.random_range(-limit..limit));
                Layer { weight, bias: Array1::zeros(w[1]), activation }
            })
            .collect();
        Ok(Mlp { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network has no layers".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::Config(format!(
                    "layer {} takes {} inputs but the previous layer has {} outputs",
                    i + 1,
                    pair[1].inputs(),
                    pair[0].outputs()
                )));
            }
        }
        if let Some(l) = layers.iter().find(|l| l.bias.len() != l.outputs()) {
            return Err(Error::WidthMismatch { expected: l.outputs(), got: l.bias.len() });
        }
        Ok(Mlp { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::outputs)
    }

    /// Layer widths including the input width.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim()).chain(self.layers.iter().map(Layer::outputs)).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Parameters in canonical order: per layer, weights row-major then bias.
    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::WidthMismatch { expected: self.num_params(), got: values.len() });
        }
        let mut it = values.iter().copied();
        for p in self.param_slices_mut() {
            p.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        Ok(())
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    /// Batched forward pass; each row of `x` is one input.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<ForwardCache> {
        if x.ncols() != self.input_dim() {
            return Err(Error::WidthMismatch { expected: self.input_dim(), got: x.ncols() });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for l in &self.layers {
            let z = h.dot(&l.weight.t()) + &l.bias;
            let next = match l.activation {
                Activation::Relu => z.mapv(|v| v.max(0.0)),
                Activation::Linear => z.clone(),
            };
            inputs.push(h);
            pre.push(z);
            h = next;
        }
        Ok(ForwardCache { inputs, pre, output: h })
    }

    fn mask(&self, cache: &ForwardCache, l: usize) -> Option<Array2<f64>> {
        match self.layers[l].activation {
            Activation::Relu => Some(relu_mask(&cache.pre[l])),
            Activation::Linear => None,
        }
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        if cache.pre.len() != self.layers.len() {
            return Err(Error::Config("forward cache does not belong to this network".into()));
        }
        Ok(())
    }

    /// Reverse pass for the row-wise output adjoint `grad_out`. ReLU has
    /// derivative 0 at exactly 0.
    pub fn backward(&self, cache: &ForwardCache, grad_out: ArrayView2<f64>) -> Result<Backward> {
        self.check_cache(cache)?;
        if grad_out.dim() != cache.output.dim() {
            return Err(Error::WidthMismatch { expected: cache.output.ncols(), got: grad_out.ncols() });
        }
        let n = self.layers.len();
        let mut grads = Vec::with_capacity(n);
        let mut deltas = Vec::with_capacity(n);
        let mut c = grad_out.to_owned();
        for l in (0..n).rev() {
            let delta = match self.mask(cache, l) {
                Some(m) => c * m,
                None => c,
            };
            let layer = &self.layers[l];
            grads.push(Layer {
                weight: delta.t().dot(&cache.inputs[l]),
                bias: delta.sum_axis(Axis(0)),
                activation: layer.activation,
            });
            c = delta.dot(&layer.weight);
            deltas.push(delta);
        }
        grads.reverse();
        deltas.reverse();
        Ok(Backward { grads: MlpGrads { layers: grads }, input_grad: c.as_standard_layout().into_owned(), deltas })
    }

    /// Parameter derivative of `Σ_rows ⟨u, input_grad⟩`, where `input_grad`
    /// is the result of [`Mlp::backward`], with activation patterns frozen.
    ///
    /// Pushes `u` forward through the linearized network; each weight
    /// receives `δᵀ h` where `h` is the pushed adjoint entering its layer.
    /// Returns the gradients and the pushed adjoint at the output, which is
    /// the derivative with respect to the output adjoint that seeded the
    /// backward pass. Biases do not affect the input gradient.
    pub fn input_grad_vjp(&self, cache: &ForwardCache, backward: &Backward, u: ArrayView2<f64>) -> Result<(MlpGrads, Array2<f64>)> {
        self.check_cache(cache)?;
        if u.dim() != backward.input_grad.dim() {
            return Err(Error::WidthMismatch { expected: backward.input_grad.ncols(), got: u.ncols() });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut h = u.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            grads.push(Layer {
                weight: backward.deltas[l].t().dot(&h),
                bias: Array1::zeros(layer.outputs()),
                activation: layer.activation,
            });
            let f = h.dot(&layer.weight.t());
            h = match self.mask(cache, l) {
                Some(m) => f * m,
                None => f,
            };
        }
        Ok((MlpGrads { layers: grads }, h))
    }
}
