use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{BgnnError, Result};
use crate::graph::{load_embeddings, save_embeddings};
use crate::tensor::Matrix;

/// Embeddings produced by one depth, handed to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCheckpoint {
    pub depth: usize,
    pub h_u: Matrix,
    pub h_v: Matrix,
    pub config_hash: String,
}

impl EmbeddingCheckpoint {
    pub fn paths(dir: &Path, depth: usize) -> (PathBuf, PathBuf, PathBuf) {
        (
            dir.join(format!("depth{depth}_h_u.txt")),
            dir.join(format!("depth{depth}_h_v.txt")),
            dir.join(format!("depth{depth}.meta")),
        )
    }

    pub fn validate(&self, num_u: usize, num_v: usize) -> Result<()> {
        if self.h_u.rows() != num_u || self.h_v.rows() != num_v {
            return Err(BgnnError::Validation(format!(
                "checkpoint depth {} has {}/{} rows, dataset has {num_u}/{num_v}",
                self.depth,
                self.h_u.rows(),
                self.h_v.rows()
            )));
        }
        if !self.h_u.is_finite() || !self.h_v.is_finite() {
            return Err(BgnnError::NonFinite(format!(
                "checkpoint depth {}",
                self.depth
            )));
        }
        Ok(())
    }

    /// Writes both matrices plus a `key=value` sidecar.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| BgnnError::io(dir, e))?;
        let (pu, pv, pm) = Self::paths(dir, self.depth);
        save_embeddings(&self.h_u, &pu)?;
        save_embeddings(&self.h_v, &pv)?;
        let meta = format!(
            "depth={}\nconfig_digest={}\nrows_u={}\ncols_u={}\nrows_v={}\ncols_v={}\n",
            self.depth,
            self.config_hash,
            self.h_u.rows(),
            self.h_u.cols(),
            self.h_v.rows(),
            self.h_v.cols()
        );
        std::fs::write(&pm, meta).map_err(|e| BgnnError::io(&pm, e))
    }

    pub fn load(dir: &Path, depth: usize) -> Result<Self> {
        let (pu, pv, pm) = Self::paths(dir, depth);
        let meta = read_meta(&pm)?;
        let get = |k: &str| {
            meta.get(k).cloned().ok_or_else(|| BgnnError::Parse {
                path: pm.clone(),
                line: 0,
                msg: format!("missing key `{k}`"),
            })
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|_| BgnnError::Parse {
                path: pm.clone(),
                line: 0,
                msg: format!("`{k}` is not a count"),
            })
        };
        let h_u = load_embeddings(&pu)?;
        let h_v = load_embeddings(&pv)?;
        if num("depth")? != depth
            || h_u.shape() != (num("rows_u")?, num("cols_u")?)
            || h_v.shape() != (num("rows_v")?, num("cols_v")?)
        {
            return Err(BgnnError::Validation(format!(
                "{}: metadata disagrees with the stored matrices",
                pm.display()
            )));
        }
        Ok(Self {
            depth,
            h_u,
            h_v,
            config_hash: get("config_digest")?,
        })
    }
}

pub fn read_meta(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| BgnnError::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| BgnnError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: "expected `key=value`".into(),
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Where depth outputs go between depths.
#[derive(Debug, Clone, Default)]
pub enum CheckpointStore {
    /// Kept in memory only.
    #[default]
    Memory,
    /// Written to the directory and read back before the next depth.
    Dir(PathBuf),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = EmbeddingCheckpoint {
            depth: 2,
            h_u: Matrix::from_fn(3, 2, |i, j| i as f64 - 0.1 * j as f64),
            h_v: Matrix::from_fn(4, 2, |i, j| (i * j) as f64 / 7.0),
            config_hash: "abc".into(),
        };
        c.save(dir.path()).unwrap();
        assert_eq!(EmbeddingCheckpoint::load(dir.path(), 2).unwrap(), c);
        assert!(EmbeddingCheckpoint::load(dir.path(), 1).is_err());
    }
}
