use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cascade::{DepthInput, DepthTrainer, DirectionSchedule, TrainConfig};
use crate::error::{BgnnError, Result};
use crate::graph::{rescale_columns, BipartiteDataset, Direction};
use crate::tensor::{spmm_macs, MemoryTracker};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub num_edges: usize,
    pub epoch_wall_ms: f64,
    pub flop_count: u64,
    pub peak_live_bytes: usize,
}

/// Aggregation multiply-adds in one epoch over both directions:
/// `nnz(B̂_u)·d + nnz(B̂_v)·d`. Every row is visited once per epoch, so the
/// per-batch counts add up to the full-graph count.
pub fn epoch_flops(dataset: &BipartiteDataset, encoder_dim: usize) -> u64 {
    spmm_macs(&dataset.incidence(Direction::UFromV), encoder_dim)
        + spmm_macs(&dataset.incidence(Direction::VFromU), encoder_dim)
}

/// Median wall time of `timed` depth-1 epochs (both directions each epoch)
/// after `warmup` untimed ones.
pub fn time_epochs(
    dataset: &BipartiteDataset,
    config: &TrainConfig,
    warmup: usize,
    timed: usize,
) -> Result<BenchRecord> {
    if timed == 0 {
        return Err(BgnnError::Validation(
            "at least one timed epoch is required".into(),
        ));
    }
    let cfg = TrainConfig {
        direction_schedule: DirectionSchedule::BothEachEpoch,
        plateau_gate: false,
        epochs_per_depth: warmup + timed,
        ..config.clone()
    };
    let tracker = MemoryTracker::new();
    let b_u = dataset.incidence(Direction::UFromV);
    let b_v = dataset.incidence(Direction::VFromU);
    let h_u = rescale_columns(dataset.features_u());
    let h_v = rescale_columns(dataset.features_v());
    let input = DepthInput {
        h_u: &h_u,
        h_v: &h_v,
        b_u: &b_u,
        b_v: &b_v,
    };
    let mut trainer = DepthTrainer::new(input, 1, &cfg, &tracker)?;
    for _ in 0..warmup {
        trainer.run_epoch()?;
    }
    let mut times = Vec::with_capacity(timed);
    for _ in 0..timed {
        let start = Instant::now();
        trainer.run_epoch()?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    let median = if times.len() % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    };
    Ok(BenchRecord {
        num_edges: dataset.num_edges(),
        epoch_wall_ms: median,
        flop_count: epoch_flops(dataset, cfg.encoder_output_dim),
        peak_live_bytes: tracker.peak_total_bytes(),
    })
}

/// Least squares `y = slope·x + intercept` and its R². R² is 1 when `y`
/// has no variance and the fit is exact.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    (slope, intercept, r2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    /// Wall milliseconds per edge.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub threads: usize,
}

impl BenchReport {
    pub fn new(mut records: Vec<BenchRecord>, threads: usize) -> Self {
        records.sort_by_key(|r| r.num_edges);
        let xs: Vec<f64> = records.iter().map(|r| r.num_edges as f64).collect();
        let ys: Vec<f64> = records.iter().map(|r| r.epoch_wall_ms).collect();
        let (slope, intercept, r_squared) = fit_line(&xs, &ys);
        Self {
            records,
            slope,
            intercept,
            r_squared,
            threads,
        }
    }

    /// Whether `flop_count / num_edges` is the same for every non-empty run.
    pub fn flops_linear(&self) -> bool {
        let mut ratios = self
            .records
            .iter()
            .filter(|r| r.num_edges > 0)
            .map(|r| (r.flop_count, r.num_edges as u64));
        match ratios.next() {
            None => true,
            Some((f0, e0)) => ratios.all(|(f, e)| f * e0 == f0 * e),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:>10}  {:>12}  {:>14}  {:>14}\n",
            "edges", "epoch_ms", "flops", "peak_bytes"
        );
        for r in &self.records {
            let _ = writeln!(
                s,
                "{:>10}  {:>12.3}  {:>14}  {:>14}",
                r.num_edges, r.epoch_wall_ms, r.flop_count, r.peak_live_bytes
            );
        }
        let _ = writeln!(
            s,
            "fit: wall_ms = {:.6e} * edges + {:.3}  (R^2 = {:.4}, threads = {})",
            self.slope, self.intercept, self.r_squared, self.threads
        );
        s
    }

    /// One JSON object per record.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("plain record"));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| BgnnError::io(path, e))
    }

    /// Two columns, `edges,wall_ms`, with a header row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| BgnnError::io(path, e))?;
        let mut body = String::from("edges,wall_ms\n");
        for r in &self.records {
            let _ = writeln!(body, "{},{}", r.num_edges, r.epoch_wall_ms);
        }
        f.write_all(body.as_bytes())
            .map_err(|e| BgnnError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::FeatureMatrix;

    #[test]
    fn exact_line() {
        let (s, b, r2) = fit_line(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((s - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        assert!(fit_line(&[1.0], &[1.0]).0.is_nan());
    }

    #[test]
    fn hand_counted_flops() {
        // U0–V0, U0–V1, U1–V1: nnz 3 each way
        let ds = BipartiteDataset::new(
            vec![(0, 0), (0, 1), (1, 1)],
            FeatureMatrix::zeros(2, 2),
            FeatureMatrix::zeros(2, 3),
            None,
            None,
        )
        .unwrap();
        assert_eq!(epoch_flops(&ds, 4), 24);
    }

    #[test]
    fn report_sorted_and_linear() {
        let rec = |e: usize, ms: f64| BenchRecord {
            num_edges: e,
            epoch_wall_ms: ms,
            flop_count: 48 * e as u64,
            peak_live_bytes: 0,
        };
        let r = BenchReport::new(vec![rec(100, 2.0), rec(10, 0.2)], 1);
        assert_eq!(r.records[0].num_edges, 10);
        assert!(r.flops_linear());
        assert!(r.to_text().contains("R^2"));
    }
}
