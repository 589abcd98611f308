use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BgnnError, Result};
use crate::graph::Partition;

/// One mini-batch of training. `wall_ms` is kept out of the JSON form so that
/// traces of identical runs are byte-identical; see [`TrainingTrace::write_timing`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub depth: usize,
    pub epoch: usize,
    pub batch: usize,
    pub partition: Partition,
    pub batch_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub disc_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gen_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mlp_loss: Option<f64>,
    /// Full-partition alignment distance, filled on the last batch of an epoch.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alignment: Option<f64>,
    pub live_param_bytes: usize,
    #[serde(skip)]
    pub wall_ms: f64,
}

/// Per-depth summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSummary {
    pub depth: usize,
    pub epochs: usize,
    pub param_bytes: usize,
    pub initial_alignment_u: f64,
    pub final_alignment_u: f64,
    pub initial_alignment_v: f64,
    pub final_alignment_v: f64,
    pub output_dim_u: usize,
    pub output_dim_v: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub records: Vec<TraceRecord>,
    pub depths: Vec<DepthSummary>,
}

impl TrainingTrace {
    pub fn extend(&mut self, other: TrainingTrace) {
        self.records.extend(other.records);
        self.depths.extend(other.depths);
    }

    /// `(depth, epoch, batch)` strictly increasing.
    pub fn is_ordered(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| (w[0].depth, w[0].epoch, w[0].batch) < (w[1].depth, w[1].epoch, w[1].batch))
    }

    /// One JSON object per batch.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace record serializes"));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| BgnnError::io(path, e))
    }

    /// `depth,epoch,batch,wall_ms` lines.
    pub fn write_timing(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| BgnnError::io(path, e))?;
        let mut body = String::from("depth,epoch,batch,wall_ms\n");
        for r in &self.records {
            body.push_str(&format!(
                "{},{},{},{:.3}\n",
                r.depth, r.epoch, r.batch, r.wall_ms
            ));
        }
        f.write_all(body.as_bytes())
            .map_err(|e| BgnnError::io(path, e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Vec<TraceRecord>> {
        let text = std::fs::read_to_string(path).map_err(|e| BgnnError::io(path, e))?;
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| BgnnError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: e.to_string(),
                })
            })
            .collect()
    }
}
