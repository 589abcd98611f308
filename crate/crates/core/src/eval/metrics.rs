use serde::{Deserialize, Serialize};

use crate::error::{BgnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    pub micro: f64,
    pub macro_: f64,
    /// F1 of class 1, reported for two-class problems.
    pub binary: Option<f64>,
}

/// Micro, macro and (two classes only) binary F1.
///
/// Macro averages over all `num_classes`; a class with no true positives,
/// false positives or false negatives contributes 0.
pub fn f1_scores(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<F1Scores> {
    if pred.len() != truth.len() {
        return Err(BgnnError::shape(
            "f1_scores",
            format!("{} predictions vs {} labels", pred.len(), truth.len()),
        ));
    }
    if let Some(&c) = pred.iter().chain(truth).find(|&&c| c >= num_classes) {
        return Err(BgnnError::Validation(format!(
            "class {c} outside [0, {num_classes})"
        )));
    }
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fneg = vec![0usize; num_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let f1 = |tp: usize, fp: usize, fn_: usize| {
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let per_class: Vec<f64> = (0..num_classes)
        .map(|c| f1(tp[c], fp[c], fneg[c]))
        .collect();
    let (stp, sfp, sfn) = (tp.iter().sum(), fp.iter().sum(), fneg.iter().sum());
    Ok(F1Scores {
        micro: f1(stp, sfp, sfn),
        macro_: per_class.iter().sum::<f64>() / num_classes.max(1) as f64,
        binary: (num_classes == 2).then(|| per_class[1]),
    })
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed() {
        let s = f1_scores(&[0, 1, 0, 1], &[0, 0, 1, 1], 2).unwrap();
        assert!((s.micro - 0.5).abs() < 1e-12);
        assert!((s.macro_ - 0.5).abs() < 1e-12);
        assert_eq!(s.binary, Some(0.5));
        let s = f1_scores(&[2, 0, 1], &[2, 0, 1], 3).unwrap();
        assert_eq!((s.micro, s.macro_, s.binary), (1.0, 1.0, None));
    }

    #[test]
    fn absent_class_counts_as_zero() {
        let s = f1_scores(&[0, 1], &[0, 1], 3).unwrap();
        assert!((s.macro_ - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.micro, 1.0);
    }

    #[test]
    fn errors() {
        assert!(f1_scores(&[0], &[0, 1], 2).is_err());
        assert!(f1_scores(&[2], &[0], 2).is_err());
    }

    #[test]
    fn mean_std_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
    }
}
