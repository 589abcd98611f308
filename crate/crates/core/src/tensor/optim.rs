use serde::{Deserialize, Serialize};

use super::param::Parameter;
use crate::error::{BgnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    /// L2 coefficient, added to the gradient as `weight_decay * value`.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            weight_decay: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn adam(learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            weight_decay,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        // lr = 0 is accepted so that a frozen run is expressible.
        let ok = self.learning_rate >= 0.0
            && self.learning_rate.is_finite()
            && self.weight_decay >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(BgnnError::Validation(format!(
                "invalid optimizer config {self:?}"
            )))
        }
    }
}

/// One Adam update on every parameter, then zeroes the gradients.
pub fn adam_step(params: &mut [&mut Parameter], cfg: &OptimizerConfig) {
    for p in params.iter_mut() {
        p.step_count += 1;
        let t = p.step_count as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        let Parameter {
            value,
            grad,
            adam_m,
            adam_v,
            ..
        } = &mut **p;
        let iter = value
            .as_mut_slice()
            .iter_mut()
            .zip(grad.as_mut_slice().iter_mut())
            .zip(adam_m.as_mut_slice().iter_mut())
            .zip(adam_v.as_mut_slice().iter_mut());
        for (((w, g), m), v) in iter {
            let gt = *g + cfg.weight_decay * *w;
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * gt;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * gt * gt;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            *g = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;

    #[test]
    fn zero_grad_no_decay_is_fixed_point() {
        let mut p = Parameter::new(Matrix::from_rows(&[[1.5, -2.0]]).unwrap());
        adam_step(&mut [&mut p], &OptimizerConfig::adam(0.01, 0.0));
        assert_eq!(p.value.as_slice(), &[1.5, -2.0]);
        assert_eq!(p.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = Parameter::new(Matrix::filled(1, 1, 0.0));
        p.grad.fill(1.0);
        adam_step(&mut [&mut p], &OptimizerConfig::adam(0.001, 0.0));
        approx::assert_abs_diff_eq!(p.value.get(0, 0), -0.001, epsilon = 1e-9);
        assert_eq!(p.grad.get(0, 0), 0.0);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut p = Parameter::new(Matrix::filled(2, 2, 0.3));
        p.grad.fill(5.0);
        adam_step(&mut [&mut p], &OptimizerConfig::adam(0.0, 0.1));
        assert!(p.value.as_slice().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn converges_on_convex_quadratic() {
        let target = [0.7, -1.3, 2.0];
        let mut p = Parameter::new(Matrix::zeros(1, 3));
        let cfg = OptimizerConfig::adam(0.05, 0.0);
        for _ in 0..200 {
            for (j, t) in target.iter().enumerate() {
                let w = p.value.get(0, j);
                p.grad.set(0, j, 2.0 * (w - t));
            }
            adam_step(&mut [&mut p], &cfg);
        }
        for (j, t) in target.iter().enumerate() {
            assert!(
                (p.value.get(0, j) - t).abs() < 1e-3,
                "coord {j}: {}",
                p.value.get(0, j)
            );
        }
    }

    #[test]
    fn rejects_bad_betas() {
        let c = OptimizerConfig {
            beta1: 1.0,
            ..OptimizerConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
