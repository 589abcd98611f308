use rand::Rng;

use crate::error::{BgnnError, Result};
use crate::graph::NormalizedIncidence;
use crate::tensor::{
    glorot_uniform, spmm_transpose, spmm_with, Activation, DropoutMask, Matrix, MemoryTracker,
    Mode, Parameter,
};

/// One message-passing step from the opposite partition:
/// `out = act(B̂ · dropout(H_other) · W + b)`.
///
/// The product is evaluated as `B̂ · (H W)` so the sparse part costs
/// `nnz(B̂) · out_dim` multiply-adds.
#[derive(Debug)]
pub struct IdmpLayer {
    pub weight: Parameter,
    pub bias: Option<Parameter>,
    pub activation: Activation,
    pub dropout_keep: f64,
    /// Row-parallel sparse product; results are identical either way.
    pub parallel: bool,
}

/// Values kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct IdmpForward {
    pub input: Matrix,
    pub mask: DropoutMask,
    pub pre: Matrix,
    pub output: Matrix,
}

impl IdmpLayer {
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        dropout_keep: f64,
        with_bias: bool,
        rng: &mut R,
        tracker: Option<&MemoryTracker>,
    ) -> Result<Self> {
        let w = glorot_uniform(in_dim, out_dim, rng);
        let b = Matrix::zeros(1, out_dim);
        let (weight, bias) = match tracker {
            Some(t) => (
                Parameter::tracked(w, t)?,
                with_bias.then(|| Parameter::tracked(b, t)).transpose()?,
            ),
            None => (Parameter::new(w), with_bias.then(|| Parameter::new(b))),
        };
        Ok(Self {
            weight,
            bias,
            activation: Activation::Tanh,
            dropout_keep,
            parallel: false,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape().0
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape().1
    }

    pub fn param_bytes(&self) -> usize {
        let (r, c) = self.weight.shape();
        Parameter::footprint_bytes(r, c)
            + self
                .bias
                .as_ref()
                .map_or(0, |b| Parameter::footprint_bytes(1, b.shape().1))
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut v = vec![&mut self.weight];
        if let Some(b) = self.bias.as_mut() {
            v.push(b);
        }
        v
    }

    pub fn forward<R: Rng + ?Sized>(
        &self,
        b_hat: &NormalizedIncidence,
        h_other: &Matrix,
        mode: Mode,
        rng: &mut R,
    ) -> Result<IdmpForward> {
        if b_hat.num_cols() != h_other.rows() || h_other.cols() != self.in_dim() {
            return Err(BgnnError::shape(
                "idmp_forward",
                format!(
                    "B̂ {}x{}, H {:?}, W {:?}",
                    b_hat.num_rows(),
                    b_hat.num_cols(),
                    h_other.shape(),
                    self.weight.shape()
                ),
            ));
        }
        let mask =
            DropoutMask::sample(h_other.rows(), h_other.cols(), self.dropout_keep, mode, rng)?;
        let input = mask.apply(h_other)?;
        let projected = input.matmul(&self.weight.value)?;
        let mut pre = spmm_with(b_hat, &projected, self.parallel)?;
        if let Some(b) = &self.bias {
            pre.add_row_broadcast(b.value.as_slice());
        }
        let output = self.activation.forward(&pre);
        Ok(IdmpForward {
            input,
            mask,
            pre,
            output,
        })
    }

    /// Accumulates parameter gradients. Returns the gradient with respect to
    /// `h_other` when `want_input_grad` is set.
    pub fn backward(
        &mut self,
        b_hat: &NormalizedIncidence,
        fwd: &IdmpForward,
        grad_out: &Matrix,
        want_input_grad: bool,
    ) -> Result<Option<Matrix>> {
        let g_pre = self.activation.backward(&fwd.pre, &fwd.output, grad_out)?;
        if let Some(b) = self.bias.as_mut() {
            b.accumulate_grad(&Matrix::new(1, g_pre.cols(), g_pre.column_sums())?)?;
        }
        let g_projected = spmm_transpose(b_hat, &g_pre)?;
        self.weight
            .accumulate_grad(&fwd.input.t_matmul(&g_projected)?)?;
        if !want_input_grad {
            return Ok(None);
        }
        let g_input = g_projected.matmul_t(&self.weight.value)?;
        Ok(Some(fwd.mask.backward(&g_input)?))
    }
}

/// `act(B̂ · H · W + b)` with dropout in train mode.
pub fn idmp_forward<R: Rng + ?Sized>(
    b_hat: &NormalizedIncidence,
    h_other: &Matrix,
    layer: &IdmpLayer,
    mode: Mode,
    rng: &mut R,
) -> Result<Matrix> {
    Ok(layer.forward(b_hat, h_other, mode, rng)?.output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn layer_with(w: Matrix, bias: Option<Vec<f64>>) -> IdmpLayer {
        IdmpLayer {
            weight: Parameter::new(w),
            bias: bias.map(|b| Parameter::new(Matrix::new(1, b.len(), b).unwrap())),
            activation: Activation::Tanh,
            dropout_keep: 1.0,
            parallel: false,
        }
    }

    #[test]
    fn single_edge() {
        let b = NormalizedIncidence::from_edges(1, 1, [(0, 0)]);
        let h = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let l = layer_with(Matrix::identity(2), None);
        let out = idmp_forward(&b, &h, &l, Mode::Eval, &mut seeded(0)).unwrap();
        assert_eq!(out.row(0), &[1f64.tanh(), 0.0]);
    }

    #[test]
    fn isolated_row_is_activation_of_bias() {
        let b = NormalizedIncidence::from_edges(2, 1, [(0, 0)]);
        let h = Matrix::from_rows(&[[3.0, -1.0]]).unwrap();
        let l = layer_with(Matrix::identity(2), Some(vec![0.5, -0.25]));
        let out = idmp_forward(&b, &h, &l, Mode::Eval, &mut seeded(0)).unwrap();
        assert_eq!(out.row(1), &[0.5f64.tanh(), (-0.25f64).tanh()]);
    }

    #[test]
    fn shape_mismatch() {
        let b = NormalizedIncidence::from_edges(1, 2, [(0, 0)]);
        let l = layer_with(Matrix::identity(2), None);
        assert!(l
            .forward(&b, &Matrix::zeros(3, 2), Mode::Eval, &mut seeded(0))
            .is_err());
        assert!(l
            .forward(&b, &Matrix::zeros(2, 3), Mode::Eval, &mut seeded(0))
            .is_err());
    }
}
