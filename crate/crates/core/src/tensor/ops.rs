//! Forward/backward pairs for the dense layer types the model uses.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::param::Parameter;
use crate::error::{BgnnError, Result};

/// `input · W (+ b)`
pub fn linear_forward(
    input: &Matrix,
    weight: &Parameter,
    bias: Option<&Parameter>,
) -> Result<Matrix> {
    let mut out = input.matmul(&weight.value)?;
    if let Some(b) = bias {
        if b.shape() != (1, out.cols()) {
            return Err(BgnnError::shape(
                "linear_forward",
                format!("bias {:?} for output width {}", b.shape(), out.cols()),
            ));
        }
        out.add_row_broadcast(b.value.as_slice());
    }
    Ok(out)
}

/// Accumulates `dW = inputᵀ·g` (and `db = Σ rows of g`) and returns `dInput = g·Wᵀ`.
pub fn linear_backward(
    input: &Matrix,
    grad_out: &Matrix,
    weight: &mut Parameter,
    bias: Option<&mut Parameter>,
) -> Result<Matrix> {
    let dw = input.t_matmul(grad_out)?;
    weight.accumulate_grad(&dw)?;
    if let Some(b) = bias {
        let db = Matrix::new(1, grad_out.cols(), grad_out.column_sums())?;
        b.accumulate_grad(&db)?;
    }
    grad_out.matmul_t(&weight.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    LeakyRelu(f64),
}

impl Activation {
    pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

    pub fn leaky_relu() -> Self {
        Activation::LeakyRelu(Self::DEFAULT_LEAKY_SLOPE)
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu(s) => {
                if x > 0.0 {
                    x
                } else {
                    s * x
                }
            }
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    #[inline]
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(s) => {
                if x > 0.0 {
                    1.0
                } else {
                    s
                }
            }
        }
    }

    pub fn forward(self, pre: &Matrix) -> Matrix {
        pre.map(|x| self.apply(x))
    }

    pub fn backward(self, pre: &Matrix, out: &Matrix, grad_out: &Matrix) -> Result<Matrix> {
        if pre.shape() != grad_out.shape() || out.shape() != grad_out.shape() {
            return Err(BgnnError::shape(
                "activation backward",
                format!("{:?}/{:?}/{:?}", pre.shape(), out.shape(), grad_out.shape()),
            ));
        }
        let data = pre
            .as_slice()
            .iter()
            .zip(out.as_slice())
            .zip(grad_out.as_slice())
            .map(|((&x, &y), &g)| g * self.derivative(x, y))
            .collect();
        Matrix::new(pre.rows(), pre.cols(), data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted-dropout mask: kept entries carry `1 / keep_prob`, dropped ones 0.
/// `None` means identity (eval mode or `keep_prob == 1`).
#[derive(Debug, Clone)]
pub struct DropoutMask {
    pub keep_prob: f64,
    pub mask: Option<Matrix>,
}

impl DropoutMask {
    pub fn identity() -> Self {
        Self {
            keep_prob: 1.0,
            mask: None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        keep_prob: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Self> {
        if !(keep_prob > 0.0 && keep_prob <= 1.0) {
            return Err(BgnnError::Validation(format!(
                "dropout keep_prob must be in (0, 1], got {keep_prob}"
            )));
        }
        if mode == Mode::Eval || keep_prob == 1.0 {
            return Ok(Self {
                keep_prob,
                mask: None,
            });
        }
        let scale = 1.0 / keep_prob;
        let mask = Matrix::from_fn(rows, cols, |_, _| {
            if rng.random::<f64>() < keep_prob {
                scale
            } else {
                0.0
            }
        });
        Ok(Self {
            keep_prob,
            mask: Some(mask),
        })
    }

    pub fn apply(&self, input: &Matrix) -> Result<Matrix> {
        match &self.mask {
            None => Ok(input.clone()),
            Some(m) => input.zip_map(m, |x, k| x * k),
        }
    }

    /// The mask is linear, so the backward pass applies it again.
    pub fn backward(&self, grad: &Matrix) -> Result<Matrix> {
        self.apply(grad)
    }
}

pub fn dropout_apply<R: Rng + ?Sized>(
    input: &Matrix,
    keep_prob: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Matrix, DropoutMask)> {
    let mask = DropoutMask::sample(input.rows(), input.cols(), keep_prob, mode, rng)?;
    Ok((mask.apply(input)?, mask))
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy on logits and its gradient `(σ(z) - t) / n`.
///
/// Uses `max(z, 0) - z·t + ln(1 + e^{-|z|})`, finite for any finite logit.
pub fn bce_with_logits(logits: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if logits.len() != targets.len() {
        return Err(BgnnError::shape(
            "bce_with_logits",
            format!("{} logits vs {} targets", logits.len(), targets.len()),
        ));
    }
    if logits.is_empty() {
        return Err(BgnnError::EmptyBatch("bce_with_logits"));
    }
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (&z, &t) in logits.iter().zip(targets) {
        loss += z.max(0.0) - z * t + (-z.abs()).exp().ln_1p();
        grad.push((sigmoid(z) - t) / n);
    }
    Ok((loss / n, grad))
}

/// Mean softmax cross-entropy over rows and its gradient w.r.t. the logits.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    if logits.rows() != labels.len() {
        return Err(BgnnError::shape(
            "softmax_cross_entropy",
            format!("{} rows vs {} labels", logits.rows(), labels.len()),
        ));
    }
    if labels.is_empty() {
        return Err(BgnnError::EmptyBatch("softmax_cross_entropy"));
    }
    let n = labels.len() as f64;
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|z| (z - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[y];
        let g = grad.row_mut(i);
        for (j, z) in row.iter().enumerate() {
            g[j] = ((z - log_z).exp() - if j == y { 1.0 } else { 0.0 }) / n;
        }
    }
    Ok((loss / n, grad))
}

pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            s += *v;
        }
        row.iter_mut().for_each(|v| *v /= s);
    }
    out
}
