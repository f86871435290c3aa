//! Compact Householder QR of a single p x r block (p >= r).
//!
//! Reflectors are kept, never the explicit Q. The R diagonal is made
//! nonnegative by absorbing a sign flip per column into the implicit Q,
//! which makes the factorization of a full-rank block unique and lets
//! different blocking schemes be compared entrywise.

use crate::error::{dim_mismatch, invalid, Result};
use crate::matrix::DenseMatrix;

/// QR factors of one block: Householder reflectors plus r x r triangular R.
#[derive(Debug, Clone)]
pub struct BlockQr {
    rows: usize,
    cols: usize,
    /// Column j holds the unnormalized reflector v_j in rows j..p, zeros above.
    reflectors: DenseMatrix,
    /// tau_j = 2 / (v_j . v_j); zero marks an identity reflector.
    taus: Vec<f64>,
    /// Per-column sign absorbed into Q so that diag(R) >= 0.
    signs: Vec<f64>,
    r: DenseMatrix,
}

/// Householder factorization of a dense p x r block with p >= r.
pub fn householder_qr(block: &DenseMatrix) -> Result<BlockQr> {
    let p = block.rows();
    let r = block.cols();
    if p < r {
        return Err(invalid(format!(
            "block must be tall: rows {p} < cols {r}"
        )));
    }
    let mut work = block.clone();
    let mut reflectors = DenseMatrix::zeros(p, r);
    let mut taus = vec![0.0; r];

    for j in 0..r {
        // Norm of the trailing column x = work[j.., j].
        let mut norm_sq = 0.0;
        for i in j..p {
            let x = work.get(i, j);
            norm_sq += x * x;
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            continue; // zero column: identity reflector, R entry 0
        }
        let alpha = work.get(j, j);
        let beta = if alpha >= 0.0 { -norm } else { norm };
        // v = x - beta e1, stored unnormalized.
        let mut v_dot = 0.0;
        for i in j..p {
            let v = if i == j {
                work.get(j, j) - beta
            } else {
                work.get(i, j)
            };
            reflectors.set(i, j, v);
            v_dot += v * v;
        }
        if v_dot == 0.0 {
            continue; // column already beta e1
        }
        let tau = 2.0 / v_dot;
        taus[j] = tau;

        // Apply H_j = I - tau v v^T to the trailing columns.
        work.set(j, j, beta);
        for i in j + 1..p {
            work.set(i, j, 0.0);
        }
        for c in j + 1..r {
            let mut dot = 0.0;
            for i in j..p {
                dot += reflectors.get(i, j) * work.get(i, c);
            }
            let scale = tau * dot;
            for i in j..p {
                let updated = work.get(i, c) - scale * reflectors.get(i, j);
                work.set(i, c, updated);
            }
        }
    }

    // Absorb signs so diag(R) >= 0.
    let mut signs = vec![1.0; r];
    let mut r_mat = DenseMatrix::zeros(r, r);
    for j in 0..r {
        if work.get(j, j) < 0.0 {
            signs[j] = -1.0;
        }
        for c in j..r {
            r_mat.set(j, c, signs[j] * work.get(j, c));
        }
    }

    Ok(BlockQr {
        rows: p,
        cols: r,
        reflectors,
        taus,
        signs,
        r: r_mat,
    })
}

impl BlockQr {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The r x r upper-triangular factor with nonnegative diagonal.
    pub fn r_factor(&self) -> &DenseMatrix {
        &self.r
    }

    /// Q^T X for the thin Q (result is r x m).
    pub fn apply_qt(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.rows {
            return Err(dim_mismatch(
                format!("{} rows", self.rows),
                format!("{} rows", x.rows()),
            ));
        }
        let mut work = x.clone();
        for j in 0..self.cols {
            self.reflect(&mut work, j);
        }
        let mut out = work.row_slice(0, self.cols);
        for j in 0..self.cols {
            if self.signs[j] < 0.0 {
                for v in out.row_mut(j) {
                    *v = -*v;
                }
            }
        }
        Ok(out)
    }

    /// Q Y for the thin Q (result is p x m).
    pub fn apply_q(&self, y: &DenseMatrix) -> Result<DenseMatrix> {
        if y.rows() != self.cols {
            return Err(dim_mismatch(
                format!("{} rows", self.cols),
                format!("{} rows", y.rows()),
            ));
        }
        let m = y.cols();
        let mut work = DenseMatrix::zeros(self.rows, m);
        for j in 0..self.cols {
            let sign = self.signs[j];
            for c in 0..m {
                work.set(j, c, sign * y.get(j, c));
            }
        }
        for j in (0..self.cols).rev() {
            self.reflect(&mut work, j);
        }
        Ok(work)
    }

    /// Applies the (symmetric) reflector H_j in place.
    fn reflect(&self, work: &mut DenseMatrix, j: usize) {
        let tau = self.taus[j];
        if tau == 0.0 {
            return;
        }
        let m = work.cols();
        for c in 0..m {
            let mut dot = 0.0;
            for i in j..self.rows {
                dot += self.reflectors.get(i, j) * work.get(i, c);
            }
            let scale = tau * dot;
            for i in j..self.rows {
                let updated = work.get(i, c) - scale * self.reflectors.get(i, j);
                work.set(i, c, updated);
            }
        }
    }
}
