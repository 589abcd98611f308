use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{BgnnError, Result};
use crate::graph::LabelVector;
use crate::rng::rng_for;

/// Train/validation/test proportions. The validation set is carved out of the
/// training share: `train_frac = 0.8`, `val_frac_of_train = 0.3` gives
/// 56/24/20 percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac_of_train: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.8,
            val_frac_of_train: 0.3,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_frac > 0.0 && self.train_frac < 1.0)
            || !(0.0..1.0).contains(&self.val_frac_of_train)
        {
            return Err(BgnnError::Validation(format!("invalid split {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle of the labelled nodes, cut into train/val/test. Every class
/// that has labelled nodes must keep at least one of them in `train`.
pub fn split_nodes(labels: &LabelVector, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let mut idx = labels.labeled_indices();
    if idx.len() < 2 {
        return Err(BgnnError::Validation(format!(
            "{} labelled node(s); cannot split",
            idx.len()
        )));
    }
    idx.shuffle(&mut rng_for(spec.seed, "split"));
    let n = idx.len();
    let n_train_all = ((n as f64 * spec.train_frac).round() as usize).clamp(1, n - 1);
    let n_val =
        ((n_train_all as f64 * spec.val_frac_of_train).round() as usize).min(n_train_all - 1);
    let test = idx[n_train_all..].to_vec();
    let val = idx[n_train_all - n_val..n_train_all].to_vec();
    let train = idx[..n_train_all - n_val].to_vec();

    let present: BTreeSet<usize> = idx.iter().filter_map(|&i| labels.get(i)).collect();
    let in_train: BTreeSet<usize> = train.iter().filter_map(|&i| labels.get(i)).collect();
    if let Some(c) = present.difference(&in_train).next() {
        return Err(BgnnError::Validation(format!(
            "class {c} has no training node under split seed {}",
            spec.seed
        )));
    }
    Ok(Split { train, val, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sizes() {
        let l = LabelVector::from_dense(&(0..100).map(|i| i % 4).collect::<Vec<_>>()).unwrap();
        let s = split_nodes(&l, &SplitSpec::default()).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (56, 24, 20));
        let mut all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.val)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(s, split_nodes(&l, &SplitSpec::default()).unwrap());
    }

    #[test]
    fn unlabelled_nodes_are_skipped() {
        let v = (0..40).map(|i| (i % 2 == 0).then_some(i % 4 / 2)).collect();
        let l = LabelVector::new(v, 2).unwrap();
        let s = split_nodes(&l, &SplitSpec::default()).unwrap();
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 20);
        assert!(s
            .train
            .iter()
            .chain(&s.val)
            .chain(&s.test)
            .all(|i| i % 2 == 0));
    }

    #[test]
    fn single_class_is_fine() {
        let l = LabelVector::new(vec![Some(1); 10], 3).unwrap();
        assert!(split_nodes(&l, &SplitSpec::default()).is_ok());
    }

    #[test]
    fn starved_class_is_an_error() {
        // one node of class 1 among many; some seed puts it outside train
        let mut v = vec![Some(0); 30];
        v[7] = Some(1);
        let l = LabelVector::new(v, 2).unwrap();
        let errs = (0..50)
            .filter(|&s| split_nodes(&l, &SplitSpec::default().with_seed(s)).is_err())
            .count();
        assert!(errs > 0 && errs < 50);
    }
}
