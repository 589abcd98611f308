use rand::Rng;

use crate::error::{BgnnError, Result};
use crate::tensor::{
    glorot_uniform, linear_backward, linear_forward, Activation, Matrix, MemoryTracker, Parameter,
};

/// Two dense layers, `act2(act1(x W1 + b1) W2 + b2)`. Shared by the
/// discriminator (one logit, identity output) and the MLP aligner.
#[derive(Debug)]
pub struct TwoLayer {
    pub w1: Parameter,
    pub b1: Parameter,
    pub w2: Parameter,
    pub b2: Parameter,
    pub hidden_activation: Activation,
    pub output_activation: Option<Activation>,
}

#[derive(Debug, Clone)]
pub struct TwoLayerForward {
    pub input: Matrix,
    pub pre1: Matrix,
    pub act1: Matrix,
    pub pre2: Matrix,
    pub output: Matrix,
}

fn param(m: Matrix, tracker: Option<&MemoryTracker>) -> Result<Parameter> {
    match tracker {
        Some(t) => Parameter::tracked(m, t),
        None => Ok(Parameter::new(m)),
    }
}

impl TwoLayer {
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        hidden_activation: Activation,
        output_activation: Option<Activation>,
        rng: &mut R,
        tracker: Option<&MemoryTracker>,
    ) -> Result<Self> {
        Ok(Self {
            w1: param(glorot_uniform(in_dim, hidden, rng), tracker)?,
            b1: param(Matrix::zeros(1, hidden), tracker)?,
            w2: param(glorot_uniform(hidden, out_dim, rng), tracker)?,
            b2: param(Matrix::zeros(1, out_dim), tracker)?,
            hidden_activation,
            output_activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.w1.shape().0
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.shape().1
    }

    pub fn out_dim(&self) -> usize {
        self.w2.shape().1
    }

    pub fn param_bytes(&self) -> usize {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .iter()
            .map(|p| Parameter::footprint_bytes(p.shape().0, p.shape().1))
            .sum()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn forward(&self, input: &Matrix) -> Result<TwoLayerForward> {
        if input.cols() != self.in_dim() {
            return Err(BgnnError::shape(
                "two_layer_forward",
                format!(
                    "input width {} for layer width {}",
                    input.cols(),
                    self.in_dim()
                ),
            ));
        }
        let pre1 = linear_forward(input, &self.w1, Some(&self.b1))?;
        let act1 = self.hidden_activation.forward(&pre1);
        let pre2 = linear_forward(&act1, &self.w2, Some(&self.b2))?;
        let output = match self.output_activation {
            Some(a) => a.forward(&pre2),
            None => pre2.clone(),
        };
        Ok(TwoLayerForward {
            input: input.clone(),
            pre1,
            act1,
            pre2,
            output,
        })
    }

    /// Backward pass. Parameter gradients are accumulated only when
    /// `update_params` is set; the input gradient is always returned.
    pub fn backward(
        &mut self,
        fwd: &TwoLayerForward,
        grad_out: &Matrix,
        update_params: bool,
    ) -> Result<Matrix> {
        let g_pre2 = match self.output_activation {
            Some(a) => a.backward(&fwd.pre2, &fwd.output, grad_out)?,
            None => grad_out.clone(),
        };
        let g_act1 = if update_params {
            linear_backward(&fwd.act1, &g_pre2, &mut self.w2, Some(&mut self.b2))?
        } else {
            g_pre2.matmul_t(&self.w2.value)?
        };
        let g_pre1 = self
            .hidden_activation
            .backward(&fwd.pre1, &fwd.act1, &g_act1)?;
        if update_params {
            linear_backward(&fwd.input, &g_pre1, &mut self.w1, Some(&mut self.b1))
        } else {
            g_pre1.matmul_t(&self.w1.value)
        }
    }
}

/// Binary source classifier: hidden layer with leaky ReLU, one logit out.
/// `sigmoid(logit)` is the probability that a row came from the aggregated
/// (source) side rather than the partition's own (target) side.
#[derive(Debug)]
pub struct Discriminator {
    pub net: TwoLayer,
}

impl Discriminator {
    pub const DEFAULT_HIDDEN: usize = 32;

    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
        tracker: Option<&MemoryTracker>,
    ) -> Result<Self> {
        Ok(Self {
            net: TwoLayer::new(
                in_dim,
                hidden_dim,
                1,
                Activation::leaky_relu(),
                None,
                rng,
                tracker,
            )?,
        })
    }

    pub fn hidden_dim(&self) -> usize {
        self.net.hidden_dim()
    }

    pub fn logits(&self, batch: &Matrix) -> Result<Vec<f64>> {
        Ok(self.net.forward(batch)?.output.into_vec())
    }
}

pub fn discriminator_logit(disc: &Discriminator, batch: &Matrix) -> Result<Vec<f64>> {
    disc.logits(batch)
}

/// Maps an aggregated representation back onto the target space, with ReLU
/// hidden units and a tanh output so values stay in `[-1, 1]`.
#[derive(Debug)]
pub struct MlpAligner {
    pub net: TwoLayer,
}

impl MlpAligner {
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        hidden_dim: usize,
        out_dim: usize,
        rng: &mut R,
        tracker: Option<&MemoryTracker>,
    ) -> Result<Self> {
        Ok(Self {
            net: TwoLayer::new(
                in_dim,
                hidden_dim,
                out_dim,
                Activation::Relu,
                Some(Activation::Tanh),
                rng,
                tracker,
            )?,
        })
    }

    pub fn apply(&self, batch: &Matrix) -> Result<Matrix> {
        Ok(self.net.forward(batch)?.output)
    }
}
