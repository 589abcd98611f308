//! Alignment objectives: the adversarial discriminator/generator pair and the
//! MLP reconstruction variant.

use rand::Rng;

use super::dense::{Discriminator, MlpAligner};
use super::idmp::{IdmpForward, IdmpLayer};
use crate::error::{BgnnError, Result};
use crate::graph::NormalizedIncidence;
use crate::tensor::{adam_step, bce_with_logits, Matrix, Mode, OptimizerConfig};

fn non_empty(m: &Matrix, what: &'static str) -> Result<()> {
    if m.rows() == 0 {
        Err(BgnnError::EmptyBatch(what))
    } else {
        Ok(())
    }
}

fn finite(loss: f64, what: &str) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(BgnnError::NonFinite(format!("{what} loss is {loss}")))
    }
}

/// Discriminator loss: mean of the two per-side BCE terms with labels
/// target → 0 and source → 1. Equals ln 2 for a discriminator that cannot
/// tell the sides apart.
pub fn discriminator_loss(disc: &Discriminator, target: &Matrix, source: &Matrix) -> Result<f64> {
    non_empty(target, "discriminator target batch")?;
    non_empty(source, "discriminator source batch")?;
    let zt = disc.logits(target)?;
    let zs = disc.logits(source)?;
    let (lt, _) = bce_with_logits(&zt, &vec![0.0; zt.len()])?;
    let (ls, _) = bce_with_logits(&zs, &vec![1.0; zs.len()])?;
    Ok(0.5 * (lt + ls))
}

/// One optimizer step on the discriminator. `source` is a detached copy of
/// the aggregated rows; nothing flows back into the message-passing layer.
/// Returns the loss before the update.
pub fn discriminator_step(
    disc: &mut Discriminator,
    target: &Matrix,
    source: &Matrix,
    opt: &OptimizerConfig,
) -> Result<f64> {
    non_empty(target, "discriminator target batch")?;
    non_empty(source, "discriminator source batch")?;
    let mut total = 0.0;
    for (batch, label) in [(target, 0.0), (source, 1.0)] {
        let fwd = disc.net.forward(batch)?;
        let z = fwd.output.as_slice();
        let (loss, grad) = bce_with_logits(z, &vec![label; z.len()])?;
        total += 0.5 * loss;
        let g = Matrix::new(z.len(), 1, grad.iter().map(|g| 0.5 * g).collect())?;
        disc.net.backward(&fwd, &g, true)?;
    }
    finite(total, "discriminator")?;
    adam_step(&mut disc.net.params_mut(), opt);
    Ok(total)
}

/// Generator loss `-log P(source = 0 | h)` averaged over rows.
pub fn generator_loss(disc: &Discriminator, source: &Matrix) -> Result<f64> {
    non_empty(source, "generator batch")?;
    let z = disc.logits(source)?;
    Ok(bce_with_logits(&z, &vec![0.0; z.len()])?.0)
}

/// Generator step reusing a forward pass already computed with the current
/// layer weights. The discriminator is frozen: its gradients are not touched.
pub fn generator_step_from(
    disc: &mut Discriminator,
    layer: &mut IdmpLayer,
    b_hat: &NormalizedIncidence,
    fwd: &IdmpForward,
    opt: &OptimizerConfig,
) -> Result<f64> {
    non_empty(&fwd.output, "generator batch")?;
    let dfwd = disc.net.forward(&fwd.output)?;
    let z = dfwd.output.as_slice();
    let (loss, grad) = bce_with_logits(z, &vec![0.0; z.len()])?;
    finite(loss, "generator")?;
    let g = Matrix::new(z.len(), 1, grad)?;
    let g_h = disc.net.backward(&dfwd, &g, false)?;
    layer.backward(b_hat, fwd, &g_h, false)?;
    adam_step(&mut layer.params_mut(), opt);
    Ok(loss)
}

/// Regenerates the source rows in train mode and takes one generator step.
pub fn generator_step<R: Rng + ?Sized>(
    disc: &mut Discriminator,
    layer: &mut IdmpLayer,
    b_hat: &NormalizedIncidence,
    h_other: &Matrix,
    opt: &OptimizerConfig,
    rng: &mut R,
) -> Result<f64> {
    let fwd = layer.forward(b_hat, h_other, Mode::Train, rng)?;
    generator_step_from(disc, layer, b_hat, &fwd, opt)
}

/// `(1/B) ‖MLP(h) − target‖_F²`.
pub fn mlp_loss(aligner: &MlpAligner, source: &Matrix, target: &Matrix) -> Result<f64> {
    non_empty(source, "mlp batch")?;
    let y = aligner.apply(source)?;
    let diff = y.sub(target)?;
    Ok(diff.as_slice().iter().map(|d| d * d).sum::<f64>() / source.rows() as f64)
}

/// Joint step on the aligner and the message-passing layer.
pub fn mlp_step_from(
    aligner: &mut MlpAligner,
    layer: &mut IdmpLayer,
    b_hat: &NormalizedIncidence,
    fwd: &IdmpForward,
    target: &Matrix,
    opt: &OptimizerConfig,
) -> Result<f64> {
    non_empty(&fwd.output, "mlp batch")?;
    if target.shape() != (fwd.output.rows(), aligner.net.out_dim()) {
        return Err(BgnnError::shape(
            "mlp_step",
            format!(
                "target {:?} for aligner output width {}",
                target.shape(),
                aligner.net.out_dim()
            ),
        ));
    }
    let n = fwd.output.rows() as f64;
    let afwd = aligner.net.forward(&fwd.output)?;
    let diff = afwd.output.sub(target)?;
    let loss = finite(
        diff.as_slice().iter().map(|d| d * d).sum::<f64>() / n,
        "mlp",
    )?;
    let g = diff.map(|d| 2.0 * d / n);
    let g_h = aligner.net.backward(&afwd, &g, true)?;
    layer.backward(b_hat, fwd, &g_h, false)?;
    let mut params = aligner.net.params_mut();
    params.extend(layer.params_mut());
    adam_step(&mut params, opt);
    Ok(loss)
}

pub fn mlp_step<R: Rng + ?Sized>(
    aligner: &mut MlpAligner,
    layer: &mut IdmpLayer,
    b_hat: &NormalizedIncidence,
    h_other: &Matrix,
    target: &Matrix,
    opt: &OptimizerConfig,
    rng: &mut R,
) -> Result<f64> {
    let fwd = layer.forward(b_hat, h_other, Mode::Train, rng)?;
    mlp_step_from(aligner, layer, b_hat, &fwd, target, opt)
}

/// First-two-moment distance `‖μ_a − μ_b‖₂ + ‖Σ_a − Σ_b‖_F`.
pub fn alignment_distance(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.cols() != b.cols() {
        return Err(BgnnError::shape(
            "alignment_distance",
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    let mean = a
        .column_means()
        .iter()
        .zip(b.column_means())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let cov = a.covariance()?.sub(&b.covariance()?)?.frobenius_norm();
    Ok(mean + cov)
}
