//! Sparse (CSR) × dense products.

use rayon::prelude::*;

use super::matrix::Matrix;
use crate::error::{BgnnError, Result};
use crate::graph::NormalizedIncidence;

/// `sparse · dense`. Rows of `sparse` without entries produce zero rows.
pub fn spmm(sparse: &NormalizedIncidence, dense: &Matrix) -> Result<Matrix> {
    spmm_with(sparse, dense, false)
}

/// Row-parallel variant. Each output row is computed by one thread in a fixed
/// order, so results are bitwise identical to the sequential path.
pub fn spmm_with(sparse: &NormalizedIncidence, dense: &Matrix, parallel: bool) -> Result<Matrix> {
    if sparse.num_cols() != dense.rows() {
        return Err(BgnnError::shape(
            "spmm",
            format!(
                "sparse {}x{} times dense {:?}",
                sparse.num_rows(),
                sparse.num_cols(),
                dense.shape()
            ),
        ));
    }
    let d = dense.cols();
    let mut out = Matrix::zeros(sparse.num_rows(), d);
    if d == 0 {
        return Ok(out);
    }
    let fill = |(i, out_row): (usize, &mut [f64])| {
        let (cols, vals) = sparse.row(i);
        for (&j, &w) in cols.iter().zip(vals) {
            for (o, &x) in out_row.iter_mut().zip(dense.row(j)) {
                *o += w * x;
            }
        }
    };
    if parallel {
        out.as_mut_slice()
            .par_chunks_mut(d)
            .enumerate()
            .for_each(fill);
    } else {
        out.as_mut_slice().chunks_mut(d).enumerate().for_each(fill);
    }
    Ok(out)
}

/// `sparseᵀ · dense`, the adjoint used in backward passes.
pub fn spmm_transpose(sparse: &NormalizedIncidence, dense: &Matrix) -> Result<Matrix> {
    if sparse.num_rows() != dense.rows() {
        return Err(BgnnError::shape(
            "spmm_transpose",
            format!(
                "sparse {}x{} (transposed) times dense {:?}",
                sparse.num_rows(),
                sparse.num_cols(),
                dense.shape()
            ),
        ));
    }
    let d = dense.cols();
    let mut out = Matrix::zeros(sparse.num_cols(), d);
    for i in 0..sparse.num_rows() {
        let (cols, vals) = sparse.row(i);
        let src = dense.row(i);
        for (&j, &w) in cols.iter().zip(vals) {
            for (o, &x) in out.row_mut(j).iter_mut().zip(src) {
                *o += w * x;
            }
        }
    }
    Ok(out)
}

/// Multiply-adds performed by `spmm(sparse, dense)` with `dense` of width `d`.
pub fn spmm_macs(sparse: &NormalizedIncidence, d: usize) -> u64 {
    sparse.nnz() as u64 * d as u64
}
