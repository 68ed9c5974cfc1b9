use serde::{Deserialize, Serialize};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

/// Adam moment estimates over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(num_params: usize) -> Self {
        Adam { t: 0, m: vec![0.0; num_params], v: vec![0.0; num_params] }
    }

    /// One bias-corrected update. `params` and `grads` are matching slices
    /// whose concatenation has `self.m.len()` entries.
    pub fn step(&mut self, config: &AdamConfig, params: Vec<&mut [f64]>, grads: &[f64]) {
        assert_eq!(grads.len(), self.m.len(), "gradient length");
        self.t += 1;
        let t = self.t as f64;
        let c1 = 1.0 - config.beta1.powf(t);
        let c2 = 1.0 - config.beta2.powf(t);
        let mut k = 0;
        for p in params {
            for theta in p.iter_mut() {
                let g = grads[k];
                let m = config.beta1 * self.m[k] + (1.0 - config.beta1) * g;
                let v = config.beta2 * self.v[k] + (1.0 - config.beta2) * g * g;
                self.m[k] = m;
                self.v[k] = v;
                *theta -= config.learning_rate * (m / c1) / ((v / c2).sqrt() + config.epsilon);
                k += 1;
            }
        }
        assert_eq!(k, grads.len(), "parameter length");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig { learning_rate: 1e-2, beta1: 0.0, beta2: 0.9, epsilon: 1e-8 };
        let mut adam = Adam::new(3);
        let mut p = vec![1.0, 2.0, 3.0];
        adam.step(&cfg, vec![&mut p[..]], &[0.5, -4.0, 0.0]);
        assert!((p[0] - (1.0 - 1e-2)).abs() < 1e-9);
        assert!((p[1] - (2.0 + 1e-2)).abs() < 1e-9);
        assert_eq!(p[2], 3.0);
        assert_eq!(adam.t, 1);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let cfg = AdamConfig { learning_rate: 0.05, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 };
        let mut adam = Adam::new(2);
        let mut p = vec![3.0, -2.0];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.0), 2.0 * (p[1] + 0.5)];
            let (a, b) = p.split_at_mut(1);
            adam.step(&cfg, vec![a, b], &g);
        }
        assert!((p[0] - 1.0).abs() < 1e-3 && (p[1] + 0.5).abs() < 1e-3);
    }
}
