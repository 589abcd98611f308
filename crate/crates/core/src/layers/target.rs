//! The alignment target: a fixed `dim`-wide view of a partition's own
//! representation, so it can be compared with the aggregated rows.

use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::graph::rescale_columns;
use crate::rng::rng_for;
use crate::tensor::Matrix;

/// How a representation is brought to the encoder width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetView {
    Identity,
    /// Leading principal components, rescaled per column to `[-1, 1]`.
    Principal,
    /// Extra zero columns.
    Padded,
}

impl TargetView {
    pub fn for_widths(current: usize, dim: usize) -> Self {
        match current.cmp(&dim) {
            std::cmp::Ordering::Equal => TargetView::Identity,
            std::cmp::Ordering::Greater => TargetView::Principal,
            std::cmp::Ordering::Less => TargetView::Padded,
        }
    }
}

/// Projects `h` to `dim` columns (see [`TargetView`]).
pub fn alignment_target(h: &Matrix, dim: usize, seed: u64) -> Result<Matrix> {
    match TargetView::for_widths(h.cols(), dim) {
        TargetView::Identity => Ok(h.clone()),
        TargetView::Padded => h.hcat(&Matrix::zeros(h.rows(), dim - h.cols())),
        TargetView::Principal => Ok(rescale_columns(&principal_scores(h, dim, seed))),
    }
}

/// Scores of the rows of `h` on its top `k` principal axes, via a seeded
/// randomized range finder with two power iterations. Columns beyond the
/// numerical rank are zero.
pub fn principal_scores(h: &Matrix, k: usize, seed: u64) -> Matrix {
    let (n, p) = h.shape();
    let means = h.column_means();
    let mut x = h.clone();
    for i in 0..n {
        for (v, m) in x.row_mut(i).iter_mut().zip(&means) {
            *v -= m;
        }
    }
    let l = (k + 10).min(p).min(n);
    let mut out = Matrix::zeros(n, k);
    if l == 0 {
        return out;
    }
    let mut rng = rng_for(seed, "target/pca");
    let omega = Matrix::from_fn(p, l, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(&x.matmul(&omega).expect("shapes"));
    for _ in 0..2 {
        let z = orthonormalize(&x.t_matmul(&q).expect("shapes"));
        q = orthonormalize(&x.matmul(&z).expect("shapes"));
    }
    // X ≈ Q B with B = QᵀX; eigenvectors of B Bᵀ give the left singular vectors
    let b = q.t_matmul(&x).expect("shapes");
    let gram = b.matmul_t(&b).expect("shapes");
    let (vals, vecs) = symmetric_eigen(&gram);
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let qu = q.matmul(&vecs).expect("shapes");
    for (c, &e) in order.iter().take(k).enumerate() {
        let s = vals[e].max(0.0).sqrt();
        if s <= 1e-12 {
            continue;
        }
        for i in 0..n {
            out.set(i, c, qu.get(i, e) * s);
        }
    }
    out
}

/// Modified Gram–Schmidt on columns, applied twice for stability.
/// Columns that vanish are left as zeros.
fn orthonormalize(m: &Matrix) -> Matrix {
    let (n, c) = m.shape();
    let mut cols: Vec<Vec<f64>> = (0..c)
        .map(|j| (0..n).map(|i| m.get(i, j)).collect())
        .collect();
    for _ in 0..2 {
        for j in 0..c {
            for k in 0..j {
                let dot: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                let (head, tail) = cols.split_at_mut(j);
                for (a, b) in tail[0].iter_mut().zip(&head[k]) {
                    *a -= dot * b;
                }
            }
            let norm = cols[j].iter().map(|a| a * a).sum::<f64>().sqrt();
            let inv = if norm > 1e-10 { 1.0 / norm } else { 0.0 };
            cols[j].iter_mut().for_each(|a| *a *= inv);
        }
    }
    Matrix::from_fn(n, c, |i, j| cols[j][i])
}

/// Cyclic Jacobi eigen-decomposition of a small symmetric matrix. Returns
/// eigenvalues and the matrix whose columns are the eigenvectors.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m.get(k, p), m.get(k, q));
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let (mpk, mqk) = (m.get(p, k), m.get(q, k));
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let (vkp, vkq) = (v.get(k, p), v.get(k, q));
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    ((0..n).map(|i| m.get(i, i)).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_reconstructs() {
        let a = Matrix::from_rows(&[[4.0, 1.0, 0.5], [1.0, 3.0, -0.2], [0.5, -0.2, 1.0]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&a);
        for (k, &lam) in vals.iter().enumerate() {
            let col = Matrix::from_fn(3, 1, |i, _| vecs.get(i, k));
            let av = a.matmul(&col).unwrap();
            for i in 0..3 {
                assert!((av.get(i, 0) - lam * col.get(i, 0)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn principal_axis_of_a_line() {
        // points along (1, 2, 0) plus tiny noise in the third coordinate
        let h = Matrix::from_fn(50, 3, |i, j| {
            let t = i as f64 - 25.0;
            [t, 2.0 * t, 1e-3 * ((i % 3) as f64)][j]
        });
        let s = principal_scores(&h, 1, 9);
        let norm = (5.0f64).sqrt();
        for i in 0..50 {
            let expect = (i as f64 - 25.0 + 0.5) * norm;
            assert!((s.get(i, 0).abs() - expect.abs()).abs() < 1e-2, "{i}");
        }
    }

    #[test]
    fn views_have_requested_width() {
        let h = rescale_columns(&Matrix::from_fn(30, 8, |i, j| ((i * j) % 7) as f64));
        for d in [4, 8, 12] {
            let t = alignment_target(&h, d, 1).unwrap();
            assert_eq!(t.shape(), (30, d));
            assert!(t.as_slice().iter().all(|v| v.abs() <= 1.0 + 1e-12));
        }
    }
}
