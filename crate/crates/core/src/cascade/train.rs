use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use super::checkpoint::{CheckpointStore, EmbeddingCheckpoint};
use super::config::{DirectionSchedule, FuseMode, IdaVariant, TrainConfig};
use super::trace::{DepthSummary, TraceRecord, TrainingTrace};
use crate::error::{BgnnError, Result};
use crate::graph::{rescale_columns, BipartiteDataset, Direction, NormalizedIncidence, Partition};
use crate::layers::{
    alignment_distance, alignment_target, discriminator_step, generator_step_from, mlp_step_from,
    Discriminator, IdmpLayer, MlpAligner,
};
use crate::rng::{derive_seed, rng_for};
use crate::tensor::{Matrix, MemoryGuard, MemoryKind, MemoryTracker, Mode};

/// Shuffles `0..n` and cuts it into consecutive batches of `batch_size`. A
/// trailing batch of one row is merged into the previous batch.
pub fn sample_batches<R: Rng + ?Sized>(
    n: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if batch_size < 2 {
        return Err(BgnnError::Validation(format!(
            "batch_size must be at least 2, got {batch_size}"
        )));
    }
    if n < 2 {
        return Err(BgnnError::Validation(format!(
            "need at least 2 rows to batch, got {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut batches: Vec<Vec<usize>> = idx.chunks(batch_size).map(<[usize]>::to_vec).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() < 2) {
        let tail = batches.pop().unwrap();
        batches.last_mut().unwrap().extend(tail);
    }
    Ok(batches)
}

/// Representations and incidences a depth trains on.
#[derive(Debug, Clone, Copy)]
pub struct DepthInput<'a> {
    pub h_u: &'a Matrix,
    pub h_v: &'a Matrix,
    pub b_u: &'a NormalizedIncidence,
    pub b_v: &'a NormalizedIncidence,
}

impl<'a> DepthInput<'a> {
    fn side(&self, p: Partition) -> (&'a NormalizedIncidence, &'a Matrix, &'a Matrix) {
        match p {
            Partition::U => (self.b_u, self.h_u, self.h_v),
            Partition::V => (self.b_v, self.h_v, self.h_u),
        }
    }
}

#[derive(Debug)]
pub struct DepthOutput {
    pub h_u: Matrix,
    pub h_v: Matrix,
    pub trace: TrainingTrace,
}

enum Aligner {
    Adversarial(Discriminator),
    Mlp(MlpAligner),
}

/// The trainable state for one direction of one depth.
struct Side {
    partition: Partition,
    layer: IdmpLayer,
    aligner: Aligner,
    /// What the aligner pulls the aggregate towards.
    target: Matrix,
    /// Encoder-width view of the partition, used for the distance diagnostic.
    view: Matrix,
    _guards: Vec<MemoryGuard>,
}

impl Side {
    fn param_bytes(&self) -> usize {
        self.layer.param_bytes()
            + match &self.aligner {
                Aligner::Adversarial(d) => d.net.param_bytes(),
                Aligner::Mlp(m) => m.net.param_bytes(),
            }
    }
}

fn activation_guard(tracker: &MemoryTracker, ms: &[&Matrix]) -> Result<MemoryGuard> {
    tracker.reserve(
        MemoryKind::Activation,
        ms.iter().map(|m| m.byte_size()).sum(),
    )
}

fn build_side<R: Rng + ?Sized>(
    partition: Partition,
    input: &DepthInput,
    depth: usize,
    config: &TrainConfig,
    rng: &mut R,
    tracker: &MemoryTracker,
) -> Result<Side> {
    let (_, h_self, h_other) = input.side(partition);
    let d = config.encoder_output_dim;
    let mut layer = IdmpLayer::new(
        h_other.cols(),
        d,
        config.dropout_keep,
        config.use_bias,
        rng,
        Some(tracker),
    )?;
    layer.parallel = config.parallel_spmm;
    let view_seed = derive_seed(
        config.seed,
        &format!("depth{depth}/target/{}", partition.name()),
    );
    let view = alignment_target(h_self, d, view_seed)?;
    let (aligner, target) = match config.ida_variant {
        IdaVariant::Adversarial => (
            Aligner::Adversarial(Discriminator::new(
                d,
                config.disc_hidden_dim,
                rng,
                Some(tracker),
            )?),
            view.clone(),
        ),
        IdaVariant::Mlp => (
            Aligner::Mlp(MlpAligner::new(
                d,
                config.decoder_hidden_dim,
                h_self.cols(),
                rng,
                Some(tracker),
            )?),
            h_self.clone(),
        ),
    };
    let guards = vec![activation_guard(tracker, &[&view, &target])?];
    Ok(Side {
        partition,
        layer,
        aligner,
        target,
        view,
        _guards: guards,
    })
}

fn full_aggregate<R: Rng + ?Sized>(side: &Side, input: &DepthInput, rng: &mut R) -> Result<Matrix> {
    let (b_hat, _, h_other) = input.side(side.partition);
    Ok(side.layer.forward(b_hat, h_other, Mode::Eval, rng)?.output)
}

fn side_alignment<R: Rng + ?Sized>(side: &Side, input: &DepthInput, rng: &mut R) -> Result<f64> {
    alignment_distance(&full_aggregate(side, input, rng)?, &side.view)
}

fn plateaued(history: &[f64], window: usize, tol: f64) -> bool {
    if history.len() < 2 * window {
        return false;
    }
    let n = history.len();
    let last: f64 = history[n - window..].iter().sum::<f64>() / window as f64;
    let prev: f64 = history[n - 2 * window..n - window].iter().sum::<f64>() / window as f64;
    (last - prev).abs() <= tol * prev.abs().max(1e-12)
}

/// One depth's training state, stepped an epoch at a time. [`train_depth`]
/// drives it to completion; benchmarks time individual epochs.
pub struct DepthTrainer<'a> {
    input: DepthInput<'a>,
    depth: usize,
    config: &'a TrainConfig,
    tracker: &'a MemoryTracker,
    sides: [Side; 2],
    sample_rng: crate::rng::Rng,
    dropout_rng: crate::rng::Rng,
    opt: crate::tensor::OptimizerConfig,
    initial: [f64; 2],
    param_bytes: usize,
    trace: TrainingTrace,
    history: Vec<f64>,
    epoch: usize,
}

impl<'a> DepthTrainer<'a> {
    /// Fresh message-passing layers and aligners for both directions.
    pub fn new(
        input: DepthInput<'a>,
        depth: usize,
        config: &'a TrainConfig,
        tracker: &'a MemoryTracker,
    ) -> Result<Self> {
        config.validate()?;
        let (m, n) = (input.h_u.rows(), input.h_v.rows());
        if input.b_u.num_rows() != m
            || input.b_u.num_cols() != n
            || input.b_v.num_rows() != n
            || input.b_v.num_cols() != m
        {
            return Err(BgnnError::shape(
                "train_depth",
                format!("H_u {m} rows, H_v {n} rows, incidences do not match"),
            ));
        }
        if !input.h_u.is_finite() || !input.h_v.is_finite() {
            return Err(BgnnError::NonFinite(format!(
                "depth {depth} input representations"
            )));
        }
        let mut init_rng = rng_for(config.seed, &format!("depth{depth}/init"));
        let sample_rng = rng_for(config.seed, &format!("depth{depth}/sample"));
        let mut dropout_rng = rng_for(config.seed, &format!("depth{depth}/dropout"));
        let sides = [
            build_side(Partition::U, &input, depth, config, &mut init_rng, tracker)?,
            build_side(Partition::V, &input, depth, config, &mut init_rng, tracker)?,
        ];
        let param_bytes = sides.iter().map(Side::param_bytes).sum();
        let initial = [
            side_alignment(&sides[0], &input, &mut dropout_rng)?,
            side_alignment(&sides[1], &input, &mut dropout_rng)?,
        ];
        Ok(Self {
            input,
            depth,
            config,
            tracker,
            sides,
            sample_rng,
            dropout_rng,
            opt: config.optimizer(),
            initial,
            param_bytes,
            trace: TrainingTrace::default(),
            history: Vec::new(),
            epoch: 0,
        })
    }

    pub fn epochs_run(&self) -> usize {
        self.epoch
    }

    /// Whether the epoch budget (and the plateau gate, when enabled) says stop.
    pub fn done(&self) -> bool {
        let c = self.config;
        self.epoch >= c.epochs_per_depth
            && (!c.plateau_gate
                || self.epoch >= c.max_epochs_per_depth
                || plateaued(&self.history, c.plateau_window, c.plateau_tolerance))
    }

    /// One pass over the rows of the direction(s) scheduled for the next epoch.
    pub fn run_epoch(&mut self) -> Result<()> {
        self.epoch += 1;
        let (depth, epoch) = (self.depth, self.epoch);
        let which: &[usize] = match self.config.direction_schedule {
            DirectionSchedule::EpochAlternating => {
                if epoch % 2 == 1 {
                    &[0]
                } else {
                    &[1]
                }
            }
            DirectionSchedule::BothEachEpoch => &[0, 1],
        };
        let mut batch_no = 0;
        for &s in which {
            let side = &mut self.sides[s];
            let (b_hat, _, h_other) = self.input.side(side.partition);
            let batches = sample_batches(
                b_hat.num_rows(),
                self.config.batch_size,
                &mut self.sample_rng,
            )?;
            let last = batches.len() - 1;
            for (bi, rows) in batches.iter().enumerate() {
                let start = Instant::now();
                batch_no += 1;
                let q = b_hat.query_rows(rows);
                let h_nbr = h_other.select_rows(&q.neighbors);
                let fwd =
                    side.layer
                        .forward(&q.local, &h_nbr, Mode::Train, &mut self.dropout_rng)?;
                let _batch_guard =
                    activation_guard(self.tracker, &[&h_nbr, &fwd.input, &fwd.pre, &fwd.output])?;
                let target = side.target.select_rows(rows);
                let mut rec = TraceRecord {
                    depth,
                    epoch,
                    batch: batch_no,
                    partition: side.partition,
                    batch_rows: rows.len(),
                    disc_loss: None,
                    gen_loss: None,
                    mlp_loss: None,
                    alignment: None,
                    live_param_bytes: self.tracker.live_param_bytes(),
                    wall_ms: 0.0,
                };
                let loss = match &mut side.aligner {
                    Aligner::Adversarial(disc) => {
                        let mut dl = 0.0;
                        for _ in 0..self.config.d_steps_per_g_step {
                            dl = discriminator_step(disc, &target, &fwd.output, &self.opt)?;
                        }
                        let gl =
                            generator_step_from(disc, &mut side.layer, &q.local, &fwd, &self.opt)?;
                        rec.disc_loss = Some(dl);
                        rec.gen_loss = Some(gl);
                        gl
                    }
                    Aligner::Mlp(aligner) => {
                        let l = mlp_step_from(
                            aligner,
                            &mut side.layer,
                            &q.local,
                            &fwd,
                            &target,
                            &self.opt,
                        )?;
                        rec.mlp_loss = Some(l);
                        l
                    }
                };
                if !loss.is_finite() {
                    return Err(BgnnError::NonFinite(format!(
                        "depth {depth} epoch {epoch} batch {batch_no}: loss {loss}"
                    )));
                }
                self.history.push(loss);
                if bi == last {
                    rec.alignment = Some(side_alignment(side, &self.input, &mut self.dropout_rng)?);
                }
                rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
                self.trace.records.push(rec);
            }
            log::debug!(
                "depth {depth} epoch {epoch} {}: last loss {:.5}",
                side.partition.name(),
                self.history.last().copied().unwrap_or(f64::NAN)
            );
        }
        Ok(())
    }

    /// Eval-mode pass over the whole graph for the next representations. All
    /// parameters are dropped (and released from the tracker) here.
    pub fn finish(mut self) -> Result<DepthOutput> {
        let agg_u = full_aggregate(&self.sides[0], &self.input, &mut self.dropout_rng)?;
        let agg_v = full_aggregate(&self.sides[1], &self.input, &mut self.dropout_rng)?;
        let final_u = alignment_distance(&agg_u, &self.sides[0].view)?;
        let final_v = alignment_distance(&agg_v, &self.sides[1].view)?;
        let Self {
            input,
            depth,
            config,
            sides,
            initial,
            param_bytes,
            mut trace,
            epoch,
            ..
        } = self;
        drop(sides);
        let (h_u, h_v) = match config.fuse_mode {
            FuseMode::AlignedOnly => (agg_u, agg_v),
            FuseMode::ConcatInput => (input.h_u.hcat(&agg_u)?, input.h_v.hcat(&agg_v)?),
        };
        trace.depths.push(DepthSummary {
            depth,
            epochs: epoch,
            param_bytes,
            initial_alignment_u: initial[0],
            final_alignment_u: final_u,
            initial_alignment_v: initial[1],
            final_alignment_v: final_v,
            output_dim_u: h_u.cols(),
            output_dim_v: h_v.cols(),
        });
        Ok(DepthOutput { h_u, h_v, trace })
    }
}

/// Trains one depth to completion: mini-batch alignment for the configured
/// epochs, then an eval-mode pass over the whole graph.
pub fn train_depth(
    input: &DepthInput,
    depth: usize,
    config: &TrainConfig,
    tracker: &MemoryTracker,
) -> Result<DepthOutput> {
    let mut trainer = DepthTrainer::new(*input, depth, config, tracker)?;
    while !trainer.done() {
        trainer.run_epoch()?;
    }
    trainer.finish()
}

/// Parameter bytes a depth allocates, from the layer shapes alone.
pub fn depth_param_bytes(in_u: usize, in_v: usize, config: &TrainConfig) -> usize {
    use crate::tensor::Parameter;
    let d = config.encoder_output_dim;
    let bias = |w: usize| {
        if config.use_bias {
            Parameter::footprint_bytes(1, w)
        } else {
            0
        }
    };
    let two_layer = |i: usize, h: usize, o: usize| {
        Parameter::footprint_bytes(i, h)
            + Parameter::footprint_bytes(1, h)
            + Parameter::footprint_bytes(h, o)
            + Parameter::footprint_bytes(1, o)
    };
    // the U side aggregates V rows (width in_v) and aligns to U (width in_u)
    let side = |other: usize, own: usize| {
        Parameter::footprint_bytes(other, d)
            + bias(d)
            + match config.ida_variant {
                IdaVariant::Adversarial => two_layer(d, config.disc_hidden_dim, 1),
                IdaVariant::Mlp => two_layer(d, config.decoder_hidden_dim, own),
            }
    };
    side(in_v, in_u) + side(in_u, in_v)
}

#[derive(Debug, Clone, Default)]
pub struct CascadeOptions {
    pub store: CheckpointStore,
    pub tracker: MemoryTracker,
    /// Return every depth's embeddings, not only the last.
    pub keep_depths: bool,
}

#[derive(Debug)]
pub struct CascadeOutput {
    pub z_u: Matrix,
    pub z_v: Matrix,
    pub trace: TrainingTrace,
    pub depth_embeddings: Vec<EmbeddingCheckpoint>,
    pub peak_param_bytes: usize,
    pub peak_total_bytes: usize,
}

pub fn train_cascade(dataset: &BipartiteDataset, config: &TrainConfig) -> Result<CascadeOutput> {
    train_cascade_with(dataset, config, &CascadeOptions::default())
}

/// Trains depths `1..=K` one after another. Each depth starts from the
/// previous depth's checkpoint; only one depth's parameters exist at a time.
pub fn train_cascade_with(
    dataset: &BipartiteDataset,
    config: &TrainConfig,
    options: &CascadeOptions,
) -> Result<CascadeOutput> {
    config.validate()?;
    let tracker = &options.tracker;
    let digest = config.digest();
    let b_u = dataset.incidence(Direction::UFromV);
    let b_v = dataset.incidence(Direction::VFromU);
    let mut h_u = rescale_columns(dataset.features_u());
    let mut h_v = rescale_columns(dataset.features_v());
    let mut trace = TrainingTrace::default();
    let mut kept = Vec::new();
    for depth in 1..=config.depth_k {
        let _inputs = activation_guard(tracker, &[&h_u, &h_v])?;
        let input = DepthInput {
            h_u: &h_u,
            h_v: &h_v,
            b_u: &b_u,
            b_v: &b_v,
        };
        let out = train_depth(&input, depth, config, tracker)?;
        trace.extend(out.trace);
        let mut ckpt = EmbeddingCheckpoint {
            depth,
            h_u: out.h_u,
            h_v: out.h_v,
            config_hash: digest.clone(),
        };
        ckpt.validate(dataset.num_u(), dataset.num_v())?;
        if let CheckpointStore::Dir(dir) = &options.store {
            ckpt.save(dir)?;
            ckpt = EmbeddingCheckpoint::load(dir, depth)?;
        }
        if options.keep_depths {
            kept.push(ckpt.clone());
        }
        h_u = ckpt.h_u;
        h_v = ckpt.h_v;
        log::info!(
            "depth {depth}/{} done: H_u {:?}, H_v {:?}",
            config.depth_k,
            h_u.shape(),
            h_v.shape()
        );
    }
    Ok(CascadeOutput {
        z_u: h_u,
        z_v: h_v,
        trace,
        depth_embeddings: kept,
        peak_param_bytes: tracker.peak_param_bytes(),
        peak_total_bytes: tracker.peak_total_bytes(),
    })
}
