use rand::Rng;

use super::matrix::Matrix;
use super::memory::{MemoryGuard, MemoryKind, MemoryTracker};
use crate::error::{BgnnError, Result};

/// A trainable matrix with its gradient buffer and Adam moments.
#[derive(Debug)]
pub struct Parameter {
    pub value: Matrix,
    pub grad: Matrix,
    pub adam_m: Matrix,
    pub adam_v: Matrix,
    pub step_count: u64,
    _guard: Option<MemoryGuard>,
}

impl Parameter {
    pub fn new(value: Matrix) -> Self {
        let (r, c) = value.shape();
        Self {
            value,
            grad: Matrix::zeros(r, c),
            adam_m: Matrix::zeros(r, c),
            adam_v: Matrix::zeros(r, c),
            step_count: 0,
            _guard: None,
        }
    }

    /// Like [`Parameter::new`], with all four buffers accounted in `tracker`.
    pub fn tracked(value: Matrix, tracker: &MemoryTracker) -> Result<Self> {
        let (r, c) = value.shape();
        let guard = tracker.reserve(MemoryKind::Parameter, Self::footprint_bytes(r, c))?;
        let mut p = Self::new(value);
        p._guard = Some(guard);
        Ok(p)
    }

    /// Bytes held by a `rows x cols` parameter: value, gradient and two moments.
    pub const fn footprint_bytes(rows: usize, cols: usize) -> usize {
        4 * rows * cols * std::mem::size_of::<f64>()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn accumulate_grad(&mut self, g: &Matrix) -> Result<()> {
        self.grad.add_scaled(g, 1.0).map_err(|_| {
            BgnnError::shape(
                "accumulate_grad",
                format!("{:?} vs {:?}", self.shape(), g.shape()),
            )
        })
    }
}

/// Glorot/Xavier uniform initialisation: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Matrix {
    let a = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
    Matrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-a..=a))
}
