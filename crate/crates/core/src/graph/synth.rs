//! Turns a homogeneous labelled citation graph into a bipartite dataset.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::dataset::{BipartiteDataset, LabelVector};
use crate::error::{BgnnError, Result};
use crate::rng::rng_for;
use crate::tensor::FeatureMatrix;

/// A synthesized dataset plus, for each side, the original node index of
/// every new index (`remap_u[new] = original`).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedBipartite {
    pub dataset: BipartiteDataset,
    pub remap_u: Vec<usize>,
    pub remap_v: Vec<usize>,
}

/// Splits every class in two halves (seeded shuffle, extra node of an odd
/// class goes to U), keeps only U–V citations, drops isolated nodes and
/// truncates V's features to the first `v_feature_keep` columns.
///
/// Citations are undirected: `(a, b)` and `(b, a)` give the same edge.
/// Unlabelled nodes are split as one more group.
pub fn synthesize_bipartite(
    citation_edges: &[(usize, usize)],
    features: &FeatureMatrix,
    labels: &LabelVector,
    v_feature_keep: usize,
    seed: u64,
) -> Result<SynthesizedBipartite> {
    let n = features.rows();
    if labels.len() != n {
        return Err(BgnnError::Validation(format!(
            "{} labels for {n} feature rows",
            labels.len()
        )));
    }
    if v_feature_keep > features.cols() {
        return Err(BgnnError::Validation(format!(
            "v_feature_keep {v_feature_keep} exceeds {} feature columns",
            features.cols()
        )));
    }
    if let Some(&(a, b)) = citation_edges.iter().find(|&&(a, b)| a >= n || b >= n) {
        return Err(BgnnError::Validation(format!(
            "citation ({a}, {b}) out of range for {n} nodes"
        )));
    }

    let mut groups: BTreeMap<Option<usize>, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.values().iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let mut rng = rng_for(seed, "synth/split");
    let mut in_u = vec![false; n];
    for (class, mut members) in groups {
        if members.len() < 2 {
            log::warn!("class {class:?} has a single node; it goes to U");
        }
        members.shuffle(&mut rng);
        let take = members.len().div_ceil(2);
        for &i in &members[..take] {
            in_u[i] = true;
        }
    }

    let mut pairs: Vec<(usize, usize)> = citation_edges
        .iter()
        .filter_map(|&(a, b)| match (in_u[a], in_u[b]) {
            (true, false) => Some((a, b)),
            (false, true) => Some((b, a)),
            _ => None,
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    if pairs.is_empty() {
        return Err(BgnnError::Validation(
            "no citation crosses the U/V split; every node would be isolated".into(),
        ));
    }

    let mut touched = vec![false; n];
    for &(a, b) in &pairs {
        touched[a] = true;
        touched[b] = true;
    }
    let remap_u: Vec<usize> = (0..n).filter(|&i| in_u[i] && touched[i]).collect();
    let remap_v: Vec<usize> = (0..n).filter(|&i| !in_u[i] && touched[i]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (k, &i) in remap_u.iter().enumerate() {
        new_index[i] = k;
    }
    for (k, &i) in remap_v.iter().enumerate() {
        new_index[i] = k;
    }
    let mut edges: Vec<(usize, usize)> = pairs
        .iter()
        .map(|&(a, b)| (new_index[a], new_index[b]))
        .collect();
    edges.sort_unstable();

    let features_u = features.select_rows(&remap_u);
    let features_v = features
        .select_rows(&remap_v)
        .column_slice(0, v_feature_keep);
    let labels_u = labels.select(&remap_u);
    let labels_v = labels.select(&remap_v);
    let dataset = BipartiteDataset::new(
        edges,
        features_u,
        features_v,
        Some(labels_u),
        Some(labels_v),
    )?;
    Ok(SynthesizedBipartite {
        dataset,
        remap_u,
        remap_v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;

    #[test]
    fn minimal_split() {
        let f = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let l = LabelVector::new(vec![Some(0), Some(0)], 2).unwrap();
        let s = synthesize_bipartite(&[(0, 1)], &f, &l, 1, 3).unwrap();
        assert_eq!(
            (s.dataset.num_u(), s.dataset.num_v(), s.dataset.num_edges()),
            (1, 1, 1)
        );
        assert_eq!(s.dataset.features_v().cols(), 1);
        assert_eq!(s.remap_u.len() + s.remap_v.len(), 2);
    }

    #[test]
    fn no_crossing_edges_is_an_error() {
        // singleton classes all land in U
        let f = Matrix::zeros(3, 2);
        let l = LabelVector::new(vec![Some(0), Some(1), Some(2)], 3).unwrap();
        assert!(synthesize_bipartite(&[(0, 1), (1, 2)], &f, &l, 2, 0).is_err());
    }

    #[test]
    fn rejects_too_many_kept_features() {
        let f = Matrix::zeros(2, 2);
        let l = LabelVector::new(vec![Some(0), Some(0)], 2).unwrap();
        assert!(synthesize_bipartite(&[(0, 1)], &f, &l, 3, 0).is_err());
    }
}
