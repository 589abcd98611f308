//! Cascaded training next to an end-to-end stack of the same layers, measured
//! with the same memory accounting.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cascade::{train_cascade_with, CascadeOptions, IdaVariant, TrainConfig};
use crate::error::{BgnnError, Result};
use crate::graph::{rescale_columns, BipartiteDataset, Direction, NormalizedIncidence};
use crate::layers::{alignment_target, Discriminator, IdmpForward, IdmpLayer, MlpAligner};
use crate::rng::{derive_seed, rng_for};
use crate::tensor::{
    adam_step, bce_with_logits, Matrix, MemoryGuard, MemoryKind, MemoryTracker, Mode, Parameter,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRun {
    pub mode: String,
    pub completed: bool,
    /// Set when a reservation was refused by the memory budget.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oom: Option<String>,
    pub peak_param_bytes: usize,
    pub peak_live_bytes: usize,
    #[serde(skip)]
    pub wall_ms: f64,
}

impl ModeRun {
    fn finish(
        mode: &str,
        outcome: Result<()>,
        tracker: &MemoryTracker,
        start: Instant,
    ) -> Result<Self> {
        let oom = match outcome {
            Ok(()) => None,
            Err(e @ BgnnError::BudgetExceeded { .. }) => Some(e.to_string()),
            Err(e) => return Err(e),
        };
        Ok(Self {
            mode: mode.into(),
            completed: oom.is_none(),
            oom,
            peak_param_bytes: tracker.peak_param_bytes(),
            peak_live_bytes: tracker.peak_total_bytes(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    pub fn status(&self) -> &'static str {
        if self.completed {
            "completed"
        } else {
            "OOM-at-budget"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub depth_k: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub budget_bytes: Option<usize>,
    pub cascaded: ModeRun,
    pub end_to_end: ModeRun,
}

impl ModeComparison {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "K = {}, budget = {}\n{:<12}  {:>14}  {:>14}  {:>10}  status\n",
            self.depth_k,
            self.budget_bytes
                .map_or("none".to_string(), |b| b.to_string()),
            "mode",
            "peak_params",
            "peak_live",
            "wall_ms"
        );
        for r in [&self.cascaded, &self.end_to_end] {
            s.push_str(&format!(
                "{:<12}  {:>14}  {:>14}  {:>10.1}  {}\n",
                r.mode,
                r.peak_param_bytes,
                r.peak_live_bytes,
                r.wall_ms,
                r.status()
            ));
        }
        s
    }
}

fn tracker_for(budget: Option<usize>) -> MemoryTracker {
    budget.map_or_else(MemoryTracker::new, MemoryTracker::with_budget)
}

/// Runs both training modes, each under its own tracker with the same
/// optional budget. A refused reservation is reported as OOM, not an error.
pub fn compare_training_modes(
    dataset: &BipartiteDataset,
    config: &TrainConfig,
    budget: Option<usize>,
) -> Result<ModeComparison> {
    config.validate()?;
    let tracker = tracker_for(budget);
    let start = Instant::now();
    let options = CascadeOptions {
        tracker: tracker.clone(),
        ..CascadeOptions::default()
    };
    let outcome = train_cascade_with(dataset, config, &options).map(|_| ());
    let cascaded = ModeRun::finish("cascaded", outcome, &tracker, start)?;

    let tracker = tracker_for(budget);
    let start = Instant::now();
    let outcome = train_end_to_end(dataset, config, &tracker).map(|_| ());
    let end_to_end = ModeRun::finish("end-to-end", outcome, &tracker, start)?;
    Ok(ModeComparison {
        depth_k: config.depth_k,
        budget_bytes: budget,
        cascaded,
        end_to_end,
    })
}

enum Head {
    Adversarial(Discriminator),
    Mlp(MlpAligner),
}

/// One direction of the end-to-end stack.
struct Tower {
    layers: Vec<IdmpLayer>,
    head: Head,
    target: Matrix,
}

fn guard(tracker: &MemoryTracker, ms: &[&Matrix]) -> Result<MemoryGuard> {
    tracker.reserve(
        MemoryKind::Activation,
        ms.iter().map(|m| m.byte_size()).sum(),
    )
}

/// End-to-end skeleton: `K` message-passing layers per direction, each
/// layer's output concatenated onto the running representation
/// (`H^k = [H^(k-1) ‖ IDMP(H_other^(k-1))]`), and one alignment head on the
/// last aggregate. Each epoch is a single full-graph step whose gradient runs
/// back through every layer of both directions, so all parameters and all
/// activations are live together. Returns the final `(H_u, H_v)`.
pub fn train_end_to_end(
    dataset: &BipartiteDataset,
    config: &TrainConfig,
    tracker: &MemoryTracker,
) -> Result<(Matrix, Matrix)> {
    config.validate()?;
    let k_max = config.depth_k;
    let d = config.encoder_output_dim;
    let b = [
        dataset.incidence(Direction::UFromV),
        dataset.incidence(Direction::VFromU),
    ];
    let h0 = [
        rescale_columns(dataset.features_u()),
        rescale_columns(dataset.features_v()),
    ];
    let _inputs = guard(tracker, &[&h0[0], &h0[1]])?;
    let mut init = rng_for(config.seed, "end_to_end/init");
    let mut dropout = rng_for(config.seed, "end_to_end/dropout");

    let mut towers = Vec::with_capacity(2);
    for side in 0..2 {
        let other = 1 - side;
        let mut layers = Vec::with_capacity(k_max);
        for k in 0..k_max {
            let width = h0[other].cols() + k * d;
            let mut l = IdmpLayer::new(
                width,
                d,
                config.dropout_keep,
                config.use_bias,
                &mut init,
                Some(tracker),
            )?;
            l.parallel = config.parallel_spmm;
            layers.push(l);
        }
        let (head, target) = match config.ida_variant {
            IdaVariant::Adversarial => (
                Head::Adversarial(Discriminator::new(
                    d,
                    config.disc_hidden_dim,
                    &mut init,
                    Some(tracker),
                )?),
                alignment_target(
                    &h0[side],
                    d,
                    derive_seed(config.seed, &format!("end_to_end/target/{side}")),
                )?,
            ),
            IdaVariant::Mlp => (
                Head::Mlp(MlpAligner::new(
                    d,
                    config.decoder_hidden_dim,
                    h0[side].cols(),
                    &mut init,
                    Some(tracker),
                )?),
                h0[side].clone(),
            ),
        };
        towers.push(Tower {
            layers,
            head,
            target,
        });
    }
    let _targets = guard(tracker, &[&towers[0].target, &towers[1].target])?;
    let opt = config.optimizer();

    for _ in 0..config.epochs_per_depth {
        // forward through all depths, keeping every activation
        let mut reps: Vec<[Matrix; 2]> = vec![h0.clone()];
        let mut fwds: Vec<[IdmpForward; 2]> = Vec::with_capacity(k_max);
        let mut guards = Vec::new();
        for k in 0..k_max {
            let prev = &reps[k];
            let f_u = towers[0].layers[k].forward(&b[0], &prev[1], Mode::Train, &mut dropout)?;
            let f_v = towers[1].layers[k].forward(&b[1], &prev[0], Mode::Train, &mut dropout)?;
            let next = [prev[0].hcat(&f_u.output)?, prev[1].hcat(&f_v.output)?];
            guards.push(guard(
                tracker,
                &[
                    &f_u.input,
                    &f_u.pre,
                    &f_u.output,
                    &f_v.input,
                    &f_v.pre,
                    &f_v.output,
                ],
            )?);
            guards.push(guard(tracker, &[&next[0], &next[1]])?);
            fwds.push([f_u, f_v]);
            reps.push(next);
        }

        // heads: gradient of the alignment loss with respect to the last aggregate
        let mut g_last = Vec::with_capacity(2);
        for (side, tower) in towers.iter_mut().enumerate() {
            let out = &fwds[k_max - 1][side].output;
            let g = match &mut tower.head {
                Head::Adversarial(disc) => {
                    crate::layers::discriminator_step(disc, &tower.target, out, &opt)?;
                    let dfwd = disc.net.forward(out)?;
                    let z = dfwd.output.as_slice();
                    let (loss, g) = bce_with_logits(z, &vec![0.0; z.len()])?;
                    if !loss.is_finite() {
                        return Err(BgnnError::NonFinite(format!(
                            "end-to-end generator loss {loss}"
                        )));
                    }
                    disc.net
                        .backward(&dfwd, &Matrix::new(z.len(), 1, g)?, false)?
                }
                Head::Mlp(aligner) => {
                    let afwd = aligner.net.forward(out)?;
                    let n = out.rows() as f64;
                    let diff = afwd.output.sub(&tower.target)?;
                    let g = aligner
                        .net
                        .backward(&afwd, &diff.map(|x| 2.0 * x / n), true)?;
                    adam_step(&mut aligner.net.params_mut(), &opt);
                    g
                }
            };
            g_last.push(g);
        }

        // backward through the stack; each direction's input gradient lands on
        // the other direction's running representation
        let width = |side: usize, k: usize| h0[side].cols() + k * d;
        let mut g_rep: [Matrix; 2] = [0, 1].map(|side| {
            let mut g = Matrix::zeros(reps[k_max][side].rows(), width(side, k_max));
            let lo = width(side, k_max - 1);
            for i in 0..g.rows() {
                g.row_mut(i)[lo..].copy_from_slice(g_last[side].row(i));
            }
            g
        });
        for k in (0..k_max).rev() {
            let mut carried = [
                g_rep[0].column_slice(0, width(0, k)),
                g_rep[1].column_slice(0, width(1, k)),
            ];
            for side in 0..2 {
                let g_agg = g_rep[side].column_slice(width(side, k), width(side, k + 1));
                let g_in =
                    towers[side].layers[k].backward(&b[side], &fwds[k][side], &g_agg, k > 0)?;
                if let Some(g_in) = g_in {
                    carried[1 - side].add_scaled(&g_in, 1.0)?;
                }
            }
            g_rep = carried;
        }
        let mut params: Vec<&mut Parameter> = towers
            .iter_mut()
            .flat_map(|t| t.layers.iter_mut().flat_map(IdmpLayer::params_mut))
            .collect();
        adam_step(&mut params, &opt);
        drop(guards);
    }

    // eval-mode pass for the final representations
    let mut rep = h0.clone();
    for k in 0..k_max {
        let a_u = eval_layer(&towers[0].layers[k], &b[0], &rep[1])?;
        let a_v = eval_layer(&towers[1].layers[k], &b[1], &rep[0])?;
        rep = [rep[0].hcat(&a_u)?, rep[1].hcat(&a_v)?];
    }
    let [h_u, h_v] = rep;
    Ok((h_u, h_v))
}

fn eval_layer(layer: &IdmpLayer, b_hat: &NormalizedIncidence, h: &Matrix) -> Result<Matrix> {
    Ok(layer
        .forward(b_hat, h, Mode::Eval, &mut rng_for(0, "unused"))?
        .output)
}
