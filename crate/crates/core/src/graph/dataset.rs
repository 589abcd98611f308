use serde::{Deserialize, Serialize};

use super::incidence::{normalize_incidence, Direction, NormalizedIncidence};
use crate::error::{BgnnError, Result};
use crate::tensor::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    U,
    V,
}

impl Partition {
    pub fn other(self) -> Self {
        match self {
            Partition::U => Partition::V,
            Partition::V => Partition::U,
        }
    }

    /// Direction of the incidence that aggregates into this partition.
    pub fn incoming(self) -> Direction {
        match self {
            Partition::U => Direction::UFromV,
            Partition::V => Direction::VFromU,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Partition::U => "u",
            Partition::V => "v",
        }
    }
}

/// Per-node class labels; `None` marks an unlabeled node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    values: Vec<Option<usize>>,
    num_classes: usize,
}

impl LabelVector {
    pub fn new(values: Vec<Option<usize>>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(BgnnError::Validation(format!(
                "a label vector needs at least 2 classes, got {num_classes}"
            )));
        }
        if let Some((i, c)) = values
            .iter()
            .enumerate()
            .find_map(|(i, v)| v.filter(|&c| c >= num_classes).map(|c| (i, c)))
        {
            return Err(BgnnError::Validation(format!(
                "label {c} of node {i} outside [0, {num_classes})"
            )));
        }
        Ok(Self {
            values,
            num_classes,
        })
    }

    /// Fully labeled vector; the class count is `max + 1` (at least 2).
    pub fn from_dense(values: &[usize]) -> Result<Self> {
        let k = values.iter().max().map_or(2, |m| (m + 1).max(2));
        Self::new(values.iter().map(|&v| Some(v)).collect(), k)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, i: usize) -> Option<usize> {
        self.values[i]
    }

    pub fn values(&self) -> &[Option<usize>] {
        &self.values
    }

    /// Indices of labeled nodes, ascending.
    pub fn labeled_indices(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|_| i))
            .collect()
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            values: idx.iter().map(|&i| self.values[i]).collect(),
            num_classes: self.num_classes,
        }
    }
}

/// A bipartite graph `G = (U, V, E)` with distinct feature spaces per side.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteDataset {
    num_u: usize,
    num_v: usize,
    edges: Vec<(usize, usize)>,
    features_u: FeatureMatrix,
    features_v: FeatureMatrix,
    labels_u: Option<LabelVector>,
    labels_v: Option<LabelVector>,
}

impl BipartiteDataset {
    /// Validates and builds a dataset. Duplicate edges are an error here; use
    /// [`BipartiteDataset::dedup_edges`] first for raw input.
    pub fn new(
        edges: Vec<(usize, usize)>,
        features_u: FeatureMatrix,
        features_v: FeatureMatrix,
        labels_u: Option<LabelVector>,
        labels_v: Option<LabelVector>,
    ) -> Result<Self> {
        let num_u = features_u.rows();
        let num_v = features_v.rows();
        for (k, &(u, v)) in edges.iter().enumerate() {
            if u >= num_u || v >= num_v {
                return Err(BgnnError::Validation(format!(
                    "edge {k} = ({u}, {v}) out of range for M={num_u}, N={num_v}"
                )));
            }
        }
        let mut sorted = edges.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(BgnnError::Validation(
                "edge list contains duplicates".into(),
            ));
        }
        if !features_u.is_finite() || !features_v.is_finite() {
            return Err(BgnnError::Validation(
                "features contain non-finite values".into(),
            ));
        }
        for (name, labels, n) in [("u", &labels_u, num_u), ("v", &labels_v, num_v)] {
            if let Some(l) = labels {
                if l.len() != n {
                    return Err(BgnnError::Validation(format!(
                        "labels_{name} has {} entries for {n} nodes",
                        l.len()
                    )));
                }
            }
        }
        Ok(Self {
            num_u,
            num_v,
            edges,
            features_u,
            features_v,
            labels_u,
            labels_v,
        })
    }

    /// Removes repeated pairs, keeping first occurrences in order. Returns the
    /// number removed.
    pub fn dedup_edges(edges: &mut Vec<(usize, usize)>) -> usize {
        let before = edges.len();
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        edges.retain(|e| seen.insert(*e));
        before - edges.len()
    }

    pub fn num_u(&self) -> usize {
        self.num_u
    }

    pub fn num_v(&self) -> usize {
        self.num_v
    }

    pub fn num_nodes(&self, p: Partition) -> usize {
        match p {
            Partition::U => self.num_u,
            Partition::V => self.num_v,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features_u(&self) -> &FeatureMatrix {
        &self.features_u
    }

    pub fn features_v(&self) -> &FeatureMatrix {
        &self.features_v
    }

    pub fn features(&self, p: Partition) -> &FeatureMatrix {
        match p {
            Partition::U => &self.features_u,
            Partition::V => &self.features_v,
        }
    }

    pub fn labels_u(&self) -> Option<&LabelVector> {
        self.labels_u.as_ref()
    }

    pub fn labels_v(&self) -> Option<&LabelVector> {
        self.labels_v.as_ref()
    }

    pub fn labels(&self, p: Partition) -> Option<&LabelVector> {
        match p {
            Partition::U => self.labels_u.as_ref(),
            Partition::V => self.labels_v.as_ref(),
        }
    }

    pub fn incidence(&self, direction: Direction) -> NormalizedIncidence {
        normalize_incidence(self, direction)
    }

    pub fn degrees(&self, p: Partition) -> Vec<usize> {
        let mut d = vec![0; self.num_nodes(p)];
        for &(u, v) in &self.edges {
            d[match p {
                Partition::U => u,
                Partition::V => v,
            }] += 1;
        }
        d
    }
}

/// Divides each column by its largest absolute value, so every entry lands in
/// `[-1, 1]` while zeros stay zero (sparse inputs stay sparse). All-zero
/// columns are left as they are.
pub fn rescale_columns(m: &FeatureMatrix) -> FeatureMatrix {
    let cols = m.cols();
    let mut peak = vec![0.0f64; cols];
    for r in m.row_iter() {
        for (p, v) in peak.iter_mut().zip(r) {
            *p = p.max(v.abs());
        }
    }
    let mut out = m.clone();
    for i in 0..out.rows() {
        for (v, &p) in out.row_mut(i).iter_mut().zip(&peak) {
            if p > 0.0 {
                *v /= p;
            }
        }
    }
    out
}
