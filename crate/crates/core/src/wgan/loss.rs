use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};

use super::mlp::MlpGrads;
use super::network::{Critic, CriticGrads, Generator};
use super::spread::{spread_jvp, ValueScaler};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Penalty {
    /// `(‖∇_x C‖ − 1)²` per sample.
    pub values: Array1<f64>,
    pub grad_norms: Array1<f64>,
    /// Gradient of the mean penalty with respect to the critic parameters.
    pub grads: CriticGrads,
}

/// Row-wise `mix·real + (1 − mix)·fake`.
pub fn interpolate_samples(real: ArrayView2<f64>, fake: ArrayView2<f64>, mix: ArrayView1<f64>) -> Result<Array2<f64>> {
    if real.dim() != fake.dim() || mix.len() != real.nrows() {
        return Err(Error::Shape("real, fake and mix batches differ in size".into()));
    }
    let mut out = fake.to_owned();
    Zip::from(out.rows_mut()).and(real.rows()).and(&mix).for_each(|mut o, r, &e| {
        Zip::from(&mut o).and(&r).for_each(|o, &r| *o = e * r + (1.0 - e) * *o);
    });
    Ok(out)
}

/// Gradient penalty at the points `x` (already interpolated between real and
/// fake samples).
///
/// The parameter gradient is exact for the frozen activation pattern: the
/// input gradient `g = J_trunkᵀ a_t + J_DSᵀ a_s` is linear in the head input
/// adjoint `a`, so its sensitivity follows by pushing `∂P/∂g` forward
/// through the trunk (and the delay-spread Jacobian) and then through the
/// head. With `through_spread` false the delay-spread side input is treated
/// as a constant of the sample.
pub fn gradient_penalty(
    critic: &Critic,
    x: ArrayView2<f64>,
    conditions: ArrayView2<f64>,
    spread_scaler: &ValueScaler,
    through_spread: bool,
) -> Result<Penalty> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let fwd = critic.forward(x, conditions, spread_scaler)?;
    let head_back = critic.head.backward(&fwd.head, Array2::ones((n, 1)).view())?;
    let t = critic.trunk.output_dim();
    let trunk_back = critic.trunk.backward(&fwd.trunk, head_back.input_grad.slice(s![.., ..t]))?;
    let mut g = trunk_back.input_grad.clone();
    if through_spread {
        critic.add_spread_vjp(&fwd, head_back.input_grad.view(), spread_scaler, &mut g);
    }

    let mut values = Array1::zeros(n);
    let mut grad_norms = Array1::zeros(n);
    let mut u = Array2::zeros(g.dim());
    for (i, row) in g.rows().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        grad_norms[i] = norm;
        values[i] = (norm - 1.0).powi(2);
        if norm > 0.0 {
            let k = 2.0 * (norm - 1.0) / norm / n as f64;
            u.row_mut(i).assign(&(&row * k));
        }
    }

    let (trunk_grads, a_trunk) = critic.trunk.input_grad_vjp(&fwd.trunk, &trunk_back, u.view())?;
    let mut a = Array2::zeros(head_back.input_grad.dim());
    a.slice_mut(s![.., ..t]).assign(&a_trunk);
    if through_spread {
        let side = critic.side_range();
        let slope = spread_scaler.slope();
        let taps = critic.geometry.num_taps;
        for i in 0..n {
            let jvp = spread_jvp(fwd.x.row(i).as_slice().unwrap(), &fwd.moments[i], taps, u.row(i).as_slice().unwrap());
            for (dst, v) in a.slice_mut(s![i, side.clone()]).iter_mut().zip(jvp) {
                *dst = slope * v;
            }
        }
    }
    let (head_grads, _) = critic.head.input_grad_vjp(&fwd.head, &head_back, a.view())?;
    Ok(Penalty { values, grad_norms, grads: CriticGrads { trunk: trunk_grads, head: head_grads } })
}

#[derive(Debug, Clone)]
pub struct CriticLoss {
    /// `mean C(fake) − mean C(real) + λ·mean penalty`.
    pub loss: f64,
    pub real_score: f64,
    pub fake_score: f64,
    pub penalty: f64,
    pub grads: CriticGrads,
}

/// Critic objective on given real and fake batches sharing `conditions`.
#[allow(clippy::too_many_arguments)]
pub fn critic_loss_on(
    critic: &Critic,
    real: ArrayView2<f64>,
    fake: ArrayView2<f64>,
    conditions: ArrayView2<f64>,
    mix: ArrayView1<f64>,
    lambda: f64,
    spread_scaler: &ValueScaler,
    through_spread: bool,
) -> Result<CriticLoss> {
    let n = real.nrows();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    if fake.dim() != real.dim() {
        return Err(Error::Shape("real and fake batches differ in size".into()));
    }
    let both = concatenate![Axis(0), real, fake];
    let both_cond = concatenate![Axis(0), conditions, conditions];
    let fwd = critic.forward(both.view(), both_cond.view(), spread_scaler)?;
    let real_score = fwd.scores.slice(s![..n]).sum() / n as f64;
    let fake_score = fwd.scores.slice(s![n..]).sum() / n as f64;
    let weights = Array1::from_shape_fn(2 * n, |i| if i < n { -1.0 } else { 1.0 } / n as f64);
    let (mut grads, _) = critic.backward(&fwd, weights.view(), spread_scaler, false)?;
    let mut loss = fake_score - real_score;
    let mut penalty = 0.0;
    if lambda != 0.0 {
        let x = interpolate_samples(real, fake, mix)?;
        let mut gp = gradient_penalty(critic, x.view(), conditions, spread_scaler, through_spread)?;
        penalty = gp.values.mean().unwrap();
        loss += lambda * penalty;
        gp.grads.scale(lambda);
        grads.add_assign(&gp.grads);
    }
    Ok(CriticLoss { loss, real_score, fake_score, penalty, grads })
}

/// Critic objective with fakes drawn from `generator`; gradients are with
/// respect to the critic only.
#[allow(clippy::too_many_arguments)]
pub fn critic_loss(
    critic: &Critic,
    generator: &Generator,
    real: ArrayView2<f64>,
    conditions: ArrayView2<f64>,
    noise: ArrayView2<f64>,
    mix: ArrayView1<f64>,
    lambda: f64,
    spread_scaler: &ValueScaler,
    through_spread: bool,
) -> Result<CriticLoss> {
    if real.nrows() == 0 {
        return Err(Error::EmptyBatch);
    }
    let fake = generator.forward(conditions, noise)?.output;
    critic_loss_on(critic, real, fake.view(), conditions, mix, lambda, spread_scaler, through_spread)
}

#[derive(Debug, Clone)]
pub struct GeneratorLoss {
    /// `−mean C(G(x, n))`.
    pub loss: f64,
    pub fake_score: f64,
    pub grads: MlpGrads,
}

/// Generator objective; the chain rule runs through the critic's trunk and
/// its delay-spread side input.
pub fn generator_loss(
    critic: &Critic,
    generator: &Generator,
    conditions: ArrayView2<f64>,
    noise: ArrayView2<f64>,
    spread_scaler: &ValueScaler,
) -> Result<GeneratorLoss> {
    let n = conditions.nrows();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let gen_fwd = generator.forward(conditions, noise)?;
    let fwd = critic.forward(gen_fwd.output.view(), conditions, spread_scaler)?;
    let fake_score = fwd.scores.mean().unwrap();
    let weights = Array1::from_elem(n, -1.0 / n as f64);
    let (_, gx) = critic.backward(&fwd, weights.view(), spread_scaler, true)?;
    let back = generator.mlp.backward(&gen_fwd, gx.expect("input gradient requested").view())?;
    Ok(GeneratorLoss { loss: -fake_score, fake_score, grads: back.grads })
}
