use serde::{Deserialize, Serialize};

use super::dataset::BipartiteDataset;
use crate::error::{BgnnError, Result};
use crate::tensor::Matrix;

/// Row-normalised incidence `D⁻¹B` in CSR layout.
///
/// Each row with at least one edge averages uniformly over its neighbours;
/// zero-degree rows are kept as empty rows so indices stay stable.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedIncidence {
    num_rows: usize,
    num_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `B̂_u`: `M x N`, rows are U nodes averaging over their V neighbours.
    UFromV,
    /// `B̂_v`: `N x M`.
    VFromU,
}

/// The rows of one mini-batch together with their neighbourhood: `local` keeps
/// the batch rows of `B̂` with columns renumbered into `neighbors`.
#[derive(Debug, Clone)]
pub struct BatchQuery {
    pub rows: Vec<usize>,
    pub neighbors: Vec<usize>,
    pub local: NormalizedIncidence,
}

impl NormalizedIncidence {
    /// Builds `D⁻¹B` from `(row, col)` pairs. Duplicate pairs count once.
    ///
    /// Panics if an index is out of range; datasets are validated before this.
    pub fn from_edges(
        num_rows: usize,
        num_cols: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_rows];
        for (r, c) in edges {
            assert!(r < num_rows && c < num_cols, "edge ({r}, {c}) out of range");
            adj[r].push(c);
        }
        let mut row_offsets = Vec::with_capacity(num_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for mut nbrs in adj {
            nbrs.sort_unstable();
            nbrs.dedup();
            let w = if nbrs.is_empty() {
                0.0
            } else {
                1.0 / nbrs.len() as f64
            };
            values.extend(std::iter::repeat_n(w, nbrs.len()));
            col_indices.extend(nbrs);
            row_offsets.push(col_indices.len());
        }
        Self {
            num_rows,
            num_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[a..b], &self.values[a..b])
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.num_rows)
            .map(|i| self.row(i).1.iter().sum())
            .collect()
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.num_rows, self.num_cols);
        for i in 0..self.num_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m.set(i, j, v);
            }
        }
        m
    }

    /// Sparsity pattern as `(row, col)` pairs in row-major order.
    pub fn pattern(&self) -> Vec<(usize, usize)> {
        (0..self.num_rows)
            .flat_map(|i| self.row(i).0.iter().map(move |&j| (i, j)))
            .collect()
    }

    /// The QUERY step of a mini-batch: keeps `rows` (in the given order) and
    /// renumbers their neighbour columns into a sorted, deduplicated list.
    pub fn query_rows(&self, rows: &[usize]) -> BatchQuery {
        let mut neighbors: Vec<usize> = rows
            .iter()
            .flat_map(|&r| self.row(r).0.iter().copied())
            .collect();
        neighbors.sort_unstable();
        neighbors.dedup();
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for &r in rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                // neighbors is sorted and contains c
                col_indices.push(neighbors.binary_search(&c).unwrap());
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        let local = NormalizedIncidence {
            num_rows: rows.len(),
            num_cols: neighbors.len(),
            row_offsets,
            col_indices,
            values,
        };
        BatchQuery {
            rows: rows.to_vec(),
            neighbors,
            local,
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.row_offsets.len() != self.num_rows + 1
            || self.row_offsets.first() != Some(&0)
            || self.row_offsets.last() != Some(&self.col_indices.len())
            || self.values.len() != self.col_indices.len()
        {
            return Err(BgnnError::Validation("malformed CSR offsets".into()));
        }
        for i in 0..self.num_rows {
            if self.row_offsets[i] > self.row_offsets[i + 1] {
                return Err(BgnnError::Validation(format!(
                    "row offsets decrease at {i}"
                )));
            }
            let (cols, vals) = self.row(i);
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(BgnnError::Validation(format!(
                    "row {i} columns not strictly increasing"
                )));
            }
            if cols.iter().any(|&c| c >= self.num_cols) {
                return Err(BgnnError::Validation(format!(
                    "row {i} has a column out of range"
                )));
            }
            if !cols.is_empty() {
                let s: f64 = vals.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(BgnnError::Validation(format!("row {i} sums to {s}")));
                }
            }
        }
        Ok(())
    }
}

/// `B̂_u` (`UFromV`) or `B̂_v` (`VFromU`) for a dataset.
pub fn normalize_incidence(
    dataset: &BipartiteDataset,
    direction: Direction,
) -> NormalizedIncidence {
    match direction {
        Direction::UFromV => NormalizedIncidence::from_edges(
            dataset.num_u(),
            dataset.num_v(),
            dataset.edges().iter().copied(),
        ),
        Direction::VFromU => NormalizedIncidence::from_edges(
            dataset.num_v(),
            dataset.num_u(),
            dataset.edges().iter().map(|&(u, v)| (v, u)),
        ),
    }
}
