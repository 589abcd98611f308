//! Numeric check of the domain-transfer bound
//! `L_u ≤ (1 + ε) · L_{v→u} + d` on finite embedding spaces.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BgnnError, Result};
use crate::tensor::Matrix;

/// A finite embedding space `H` with two marginals over it and, per point,
/// the ground-truth label distribution and the classifier's predictions
/// trained on either domain. Conditionals are `|H| x |Y|` row-stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInstance {
    pub p_u: Vec<f64>,
    pub p_vu: Vec<f64>,
    pub pred_u: Matrix,
    pub pred_vu: Matrix,
    pub truth: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub eps: f64,
    pub d: f64,
    pub loss_u: f64,
    pub loss_vu: f64,
}

/// Total variation: half the L1 distance.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

impl BoundInstance {
    pub fn validate(&self) -> Result<()> {
        let h = self.p_u.len();
        let shape_ok = self.p_vu.len() == h
            && self.pred_u.rows() == h
            && self.pred_vu.shape() == self.pred_u.shape()
            && self.truth.shape() == self.pred_u.shape();
        if !shape_ok || h == 0 {
            return Err(BgnnError::shape(
                "transfer-bound instance",
                "inconsistent sizes",
            ));
        }
        for (name, p) in [("p_u", &self.p_u), ("p_vu", &self.p_vu)] {
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > 1e-12 || p.iter().any(|&x| x < 0.0) {
                return Err(BgnnError::Precondition(format!(
                    "{name} is not a distribution (sum {s})"
                )));
            }
        }
        if self.p_vu.iter().any(|&x| x <= 0.0) {
            return Err(BgnnError::Precondition(
                "p_vu(h) must be positive for every h".into(),
            ));
        }
        for (name, m) in [
            ("pred_u", &self.pred_u),
            ("pred_vu", &self.pred_vu),
            ("truth", &self.truth),
        ] {
            for (i, r) in m.row_iter().enumerate() {
                let s: f64 = r.iter().sum();
                if (s - 1.0).abs() > 1e-12 || r.iter().any(|&x| x < 0.0) {
                    return Err(BgnnError::Precondition(format!(
                        "{name} row {i} sums to {s}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// A random instance with `|H| = h`, `|Y| = y`; every probability is
    /// strictly positive.
    pub fn random<R: Rng + ?Sized>(h: usize, y: usize, rng: &mut R) -> Self {
        let mut simplex = |n: usize| {
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let cond = |simplex: &mut dyn FnMut(usize) -> Vec<f64>| {
            let rows: Vec<Vec<f64>> = (0..h).map(|_| simplex(y)).collect();
            Matrix::from_rows(&rows).expect("rectangular")
        };
        let p_u = simplex(h);
        let p_vu = simplex(h);
        let pred_u = cond(&mut simplex);
        let pred_vu = cond(&mut simplex);
        let truth = cond(&mut simplex);
        Self {
            p_u: renormalize(p_u),
            p_vu: renormalize(p_vu),
            pred_u: renormalize_rows(pred_u),
            pred_vu: renormalize_rows(pred_vu),
            truth: renormalize_rows(truth),
        }
    }
}

// Division by the sum can leave the total one ulp off; push the residue into
// the largest entry so validation at 1e-12 is never borderline.
fn renormalize(mut p: Vec<f64>) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    let k = (0..p.len())
        .max_by(|&a, &b| p[a].total_cmp(&p[b]))
        .unwrap_or(0);
    if let Some(x) = p.get_mut(k) {
        *x += 1.0 - s;
    }
    p
}

fn renormalize_rows(m: Matrix) -> Matrix {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| renormalize(r.to_vec())).collect();
    Matrix::from_rows(&rows).expect("rectangular")
}

/// Exact losses, measured `ε = max_h |p_u − p_vu| / p_vu` and
/// `d = max_h TV(pred_u, pred_vu)`, and whether the bound holds (up to
/// `1e-12` of floating-point slack).
pub fn verify_transfer_bound(inst: &BoundInstance) -> Result<BoundCheck> {
    inst.validate()?;
    let n = inst.p_u.len();
    let dist = |m: &Matrix, i: usize| total_variation(m.row(i), inst.truth.row(i));
    let loss_u: f64 = (0..n).map(|i| inst.p_u[i] * dist(&inst.pred_u, i)).sum();
    let loss_vu: f64 = (0..n).map(|i| inst.p_vu[i] * dist(&inst.pred_vu, i)).sum();
    let eps = (0..n)
        .map(|i| (inst.p_u[i] - inst.p_vu[i]).abs() / inst.p_vu[i])
        .fold(0.0, f64::max);
    let d = (0..n)
        .map(|i| total_variation(inst.pred_u.row(i), inst.pred_vu.row(i)))
        .fold(0.0, f64::max);
    let rhs = (1.0 + eps) * loss_vu + d;
    Ok(BoundCheck {
        lhs: loss_u,
        rhs,
        holds: loss_u <= rhs + 1e-12,
        eps,
        d,
        loss_u,
        loss_vu,
    })
}
