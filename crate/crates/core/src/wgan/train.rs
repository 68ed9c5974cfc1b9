use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::checkpoint::{Checkpoint, RngState};
use super::loss::{critic_loss, generator_loss};
use super::network::{Critic, Generator, DEFAULT_NOISE_DIM};
use super::spread::{moments, ValueScaler};
use crate::csi::{ArrayGeometry, CsiDataset};
use crate::dataset::{fit_condition_scaler, ConditionScaler};
use crate::error::{Error, Result};

fn default_seed() -> u64 {
    0
}
fn default_batch_size() -> usize {
    64
}
fn default_n_critic() -> usize {
    5
}
fn default_gp_lambda() -> f64 {
    10.0
}
fn default_learning_rate() -> f64 {
    1e-4
}
fn default_beta1() -> f64 {
    0.0
}
fn default_beta2() -> f64 {
    0.9
}
fn default_adam_epsilon() -> f64 {
    1e-8
}
fn default_noise_dim() -> usize {
    DEFAULT_NOISE_DIM
}
fn default_width_scale() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

/// Training hyperparameters. Only `total_steps` is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    /// Generator updates to run in total.
    pub total_steps: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// Critic updates per generator update.
    #[serde(default = "default_n_critic")]
    pub n_critic: usize,
    #[serde(default = "default_gp_lambda")]
    pub gp_lambda: f64,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_adam_epsilon")]
    pub adam_epsilon: f64,
    #[serde(default = "default_noise_dim")]
    pub noise_dim: usize,
    /// Multiplier on the generator's hidden widths. The critic always uses
    /// its full widths; shrunk critics stop giving the generator a signal.
    #[serde(default = "default_width_scale")]
    pub width_scale: f64,
    /// Let the gradient penalty differentiate through the delay-spread side
    /// input of the critic.
    #[serde(default = "default_true")]
    pub gp_through_delay_spread: bool,
    /// Write a checkpoint every this many generator steps; 0 only at the end.
    #[serde(default)]
    pub checkpoint_every: u64,
}

impl TrainingConfig {
    pub fn new(total_steps: u64) -> Self {
        TrainingConfig {
            total_steps,
            seed: default_seed(),
            batch_size: default_batch_size(),
            n_critic: default_n_critic(),
            gp_lambda: default_gp_lambda(),
            learning_rate: default_learning_rate(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            adam_epsilon: default_adam_epsilon(),
            noise_dim: default_noise_dim(),
            width_scale: default_width_scale(),
            gp_through_delay_spread: true,
            checkpoint_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.into()));
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        if self.n_critic == 0 {
            return fail("n_critic must be positive");
        }
        if !(self.gp_lambda >= 0.0 && self.gp_lambda.is_finite()) {
            return fail("gp_lambda must be finite and non-negative");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return fail("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.adam_epsilon > 0.0) {
            return fail("adam_epsilon must be positive");
        }
        if self.noise_dim == 0 {
            return fail("noise_dim must be positive");
        }
        if !(self.width_scale > 0.0 && self.width_scale.is_finite()) {
            return fail("width_scale must be positive");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { learning_rate: self.learning_rate, beta1: self.beta1, beta2: self.beta2, epsilon: self.adam_epsilon }
    }
}

/// Networks plus the scalers fitted on the training set; everything needed
/// to sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub generator: Generator,
    pub critic: Critic,
    pub condition_scaler: ConditionScaler,
    /// Maps per-antenna RMS delay spread in taps to `[-1, 1]`.
    pub spread_scaler: ValueScaler,
}

impl Model {
    pub fn geometry(&self) -> ArrayGeometry {
        self.generator.geometry
    }
}

/// One row of the training log, written after every generator update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub step: u64,
    pub critic_loss: f64,
    pub gen_loss: f64,
    pub real_score: f64,
    pub fake_score: f64,
}

/// Flattened CSI rows and scaled positions of a dataset.
pub fn training_matrices(dataset: &CsiDataset, scaler: &ConditionScaler) -> (Array2<f64>, Array2<f64>) {
    let width = 2 * dataset.geometry.shape().len();
    let mut x = Array2::zeros((dataset.len(), width));
    let mut c = Array2::zeros((dataset.len(), 2));
    for (i, p) in dataset.points.iter().enumerate() {
        x.row_mut(i).assign(&Array1::from(p.csi.to_interleaved()));
        let s = scaler.scale(p.position);
        c[[i, 0]] = s[0];
        c[[i, 1]] = s[1];
    }
    (x, c)
}

/// Fits the delay-spread scaler on every antenna of the training set.
pub fn fit_spread_scaler(dataset: &CsiDataset) -> Result<ValueScaler> {
    let taps = dataset.geometry.num_taps;
    ValueScaler::fit(
        dataset
            .points
            .iter()
            .flat_map(|p| moments(&p.csi.to_interleaved(), taps).into_iter().map(|m| m.spread).collect::<Vec<_>>()),
    )
}

pub struct Trainer {
    config: TrainingConfig,
    model: Model,
    generator_adam: Adam,
    critic_adam: Adam,
    rng: ChaCha8Rng,
    step: u64,
    real: Array2<f64>,
    conditions: Array2<f64>,
}

impl Trainer {
    /// Fresh model. Scalers are fitted on `train`; one seeded generator
    /// drives initialization, batch selection, noise, and mixing weights.
    pub fn new(train: &CsiDataset, config: TrainingConfig) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let condition_scaler = fit_condition_scaler(train)?;
        let spread_scaler = fit_spread_scaler(train)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let generator = Generator::new(train.geometry, config.noise_dim, config.width_scale, &mut rng)?;
        let critic = Critic::new(train.geometry, 1.0, &mut rng)?;
        let (real, conditions) = training_matrices(train, &condition_scaler);
        Ok(Trainer {
            generator_adam: Adam::new(generator.mlp.num_params()),
            critic_adam: Adam::new(critic.num_params()),
            model: Model { generator, critic, condition_scaler, spread_scaler },
            config,
            rng,
            step: 0,
            real,
            conditions,
        })
    }

    /// Continues from a checkpoint on the same training set. The stored
    /// scalers are kept.
    pub fn resume(checkpoint: Checkpoint, train: &CsiDataset) -> Result<Self> {
        checkpoint.config.validate()?;
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if train.geometry.shape() != checkpoint.model.geometry().shape() {
            return Err(Error::Shape("training set geometry differs from the checkpoint".into()));
        }
        let (real, conditions) = training_matrices(train, &checkpoint.model.condition_scaler);
        Ok(Trainer {
            config: checkpoint.config,
            model: checkpoint.model,
            generator_adam: checkpoint.generator_adam,
            critic_adam: checkpoint.critic_adam,
            rng: checkpoint.rng.restore(),
            step: checkpoint.step,
            real,
            conditions,
        })
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn set_total_steps(&mut self, total_steps: u64) {
        self.config.total_steps = total_steps;
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.config.total_steps
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            step: self.step,
            model: self.model.clone(),
            generator_adam: self.generator_adam.clone(),
            critic_adam: self.critic_adam.clone(),
            rng: RngState::capture(&self.rng),
        }
    }

    fn draw_batch(&mut self) -> Vec<usize> {
        let n = self.real.nrows();
        (0..self.config.batch_size).map(|_| self.rng.random_range(0..n)).collect()
    }

    fn draw_noise(&mut self) -> Array2<f64> {
        let k = self.config.noise_dim;
        Array2::from_shape_simple_fn((self.config.batch_size, k), || self.rng.sample(StandardNormal))
    }

    /// `n_critic` critic updates followed by one generator update. A
    /// non-finite loss aborts before that update is applied and
    /// before the step counter advances.
    pub fn step(&mut self) -> Result<LogRow> {
        let next = self.step + 1;
        let adam = self.config.adam();
        let mut last = None;
        for _ in 0..self.config.n_critic {
            let idx = self.draw_batch();
            let real = self.real.select(Axis(0), &idx);
            let cond = self.conditions.select(Axis(0), &idx);
            let noise = self.draw_noise();
            let mix = Array1::from_shape_simple_fn(self.config.batch_size, || self.rng.random::<f64>());
            let out = critic_loss(
                &self.model.critic,
                &self.model.generator,
                real.view(),
                cond.view(),
                noise.view(),
                mix.view(),
                self.config.gp_lambda,
                &self.model.spread_scaler,
                self.config.gp_through_delay_spread,
            )?;
            if !out.loss.is_finite() {
                return Err(Error::NanLoss { step: next });
            }
            self.critic_adam.step(&adam, self.model.critic.param_slices_mut(), &out.grads.flatten());
            last = Some(out);
        }
        let critic = last.expect("n_critic is positive");

        let idx = self.draw_batch();
        let cond = self.conditions.select(Axis(0), &idx);
        let noise = self.draw_noise();
        let gen = generator_loss(&self.model.critic, &self.model.generator, cond.view(), noise.view(), &self.model.spread_scaler)?;
        if !gen.loss.is_finite() {
            return Err(Error::NanLoss { step: next });
        }
        self.generator_adam.step(&adam, self.model.generator.mlp.param_slices_mut(), &gen.grads.flatten());
        self.step = next;
        Ok(LogRow {
            step: next,
            critic_loss: critic.loss,
            gen_loss: gen.loss,
            real_score: critic.real_score,
            fake_score: critic.fake_score,
        })
    }

    /// Steps until `total_steps`, handing every log row to `on_step`.
    pub fn run(&mut self, mut on_step: impl FnMut(&Trainer, &LogRow) -> Result<()>) -> Result<()> {
        while !self.is_done() {
            let row = self.step()?;
            on_step(self, &row)?;
        }
        Ok(())
    }
}

/// Trains from scratch and returns the final checkpoint with the log.
pub fn train(train: &CsiDataset, config: TrainingConfig) -> Result<(Checkpoint, Vec<LogRow>)> {
    let mut trainer = Trainer::new(train, config)?;
    let mut log = Vec::new();
    trainer.run(|_, row| {
        log.push(*row);
        Ok(())
    })?;
    Ok((trainer.checkpoint(), log))
}
