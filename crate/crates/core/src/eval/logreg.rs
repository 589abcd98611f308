use serde::{Deserialize, Serialize};

use crate::error::{BgnnError, Result};
use crate::graph::LabelVector;
use crate::rng::rng_for;
use crate::tensor::{
    adam_step, softmax_cross_entropy, softmax_rows, Matrix, OptimizerConfig, Parameter,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogRegConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            learning_rate: 0.01,
            weight_decay: 1e-4,
            seed: 0,
        }
    }
}

impl LogRegConfig {
    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig::adam(self.learning_rate, self.weight_decay)
    }
}

/// Multinomial logistic regression. `weights` is `(d + 1) x C`; the last row
/// is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub weights: Matrix,
    pub num_classes: usize,
}

fn with_intercept(x: &Matrix) -> Matrix {
    let (n, d) = x.shape();
    Matrix::from_fn(n, d + 1, |i, j| if j < d { x.get(i, j) } else { 1.0 })
}

impl ClassifierModel {
    pub fn logits(&self, features: &Matrix) -> Result<Matrix> {
        with_intercept(features).matmul(&self.weights)
    }

    pub fn predict_proba(&self, features: &Matrix) -> Result<Matrix> {
        Ok(softmax_rows(&self.logits(features)?))
    }

    /// Arg-max class per row; ties go to the lower class index.
    pub fn predict(&self, features: &Matrix) -> Result<Vec<usize>> {
        let z = self.logits(features)?;
        Ok(z.row_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (j, &v)| {
                        if v > best.1 {
                            (j, v)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect())
    }
}

fn labels_at(labels: &LabelVector, idx: &[usize]) -> Result<Vec<usize>> {
    idx.iter()
        .map(|&i| {
            labels
                .get(i)
                .ok_or_else(|| BgnnError::Validation(format!("node {i} is unlabelled")))
        })
        .collect()
}

fn accuracy(model: &ClassifierModel, x: &Matrix, y: &[usize]) -> Result<f64> {
    let p = model.predict(x)?;
    Ok(p.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len().max(1) as f64)
}

/// Mini-batch Adam on the mean cross-entropy with L2. Starts from zero weights
/// and returns the epoch with the best validation accuracy (the earliest on
/// ties; the last epoch when `val_idx` is empty).
pub fn logreg_train(
    features: &Matrix,
    labels: &LabelVector,
    train_idx: &[usize],
    val_idx: &[usize],
    cfg: &LogRegConfig,
) -> Result<ClassifierModel> {
    use rand::seq::SliceRandom;
    if train_idx.is_empty() {
        return Err(BgnnError::EmptyBatch("logistic regression training set"));
    }
    if !features.is_finite() {
        return Err(BgnnError::NonFinite("classifier features".into()));
    }
    let c = labels.num_classes();
    let x_train = with_intercept(&features.select_rows(train_idx));
    let y_train = labels_at(labels, train_idx)?;
    let x_val = features.select_rows(val_idx);
    let y_val = labels_at(labels, val_idx)?;
    let opt = cfg.optimizer();
    let mut w = Parameter::new(Matrix::zeros(features.cols() + 1, c));
    let mut rng = rng_for(cfg.seed, "logreg");
    let mut order: Vec<usize> = (0..train_idx.len()).collect();
    let mut best: Option<(f64, Matrix)> = None;
    let bs = cfg.batch_size.max(1);
    for _ in 0..cfg.epochs.max(1) {
        order.shuffle(&mut rng);
        for chunk in order.chunks(bs) {
            let xb = x_train.select_rows(chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| y_train[i]).collect();
            let (loss, g) = softmax_cross_entropy(&xb.matmul(&w.value)?, &yb)?;
            if !loss.is_finite() {
                return Err(BgnnError::NonFinite(format!("classifier loss {loss}")));
            }
            w.accumulate_grad(&xb.t_matmul(&g)?)?;
            adam_step(&mut [&mut w], &opt);
        }
        if !val_idx.is_empty() {
            let model = ClassifierModel {
                weights: w.value.clone(),
                num_classes: c,
            };
            let acc = accuracy(&model, &x_val, &y_val)?;
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, model.weights));
            }
        }
    }
    Ok(ClassifierModel {
        weights: best.map_or(w.value, |(_, m)| m),
        num_classes: c,
    })
}
