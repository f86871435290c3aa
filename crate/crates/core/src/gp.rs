//! Gaussian-process computations on a low-rank-plus-nugget covariance.
//!
//! With K ~ U diag(lambda) U^T and a strictly positive nugget sigma^2, the
//! Woodbury identity and the matrix determinant lemma turn every solve and
//! log-likelihood into O(n r) work, which is the payoff of the sketched
//! factorization.

use crate::error::{dim_mismatch, invalid, Result};
use crate::lowrank::LowRankFactor;
use crate::matrix::DenseMatrix;

/// Zero-mean Gaussian model with covariance U diag(lambda) U^T + sigma^2 I.
pub struct GpModel {
    factor: LowRankFactor,
    nugget: f64,
}

impl GpModel {
    /// `nugget` must be strictly positive; a zero nugget would make the
    /// surrogate covariance singular whenever rank < n.
    pub fn new(factor: LowRankFactor, nugget: f64) -> Result<Self> {
        if !(nugget > 0.0) {
            return Err(invalid(format!(
                "nugget must be strictly positive, got {nugget}"
            )));
        }
        Ok(Self { factor, nugget })
    }

    pub fn n(&self) -> usize {
        self.factor.n()
    }

    pub fn rank(&self) -> usize {
        self.factor.rank()
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    pub fn factor(&self) -> &LowRankFactor {
        &self.factor
    }

    /// (U diag(lambda) U^T + sigma^2 I)^{-1} B via the Woodbury identity:
    /// sigma^{-2} B - sigma^{-2} U diag(lambda_i / (lambda_i + sigma^2)) U^T B.
    pub fn woodbury_solve(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.rows() != self.n() {
            return Err(dim_mismatch(
                format!("{} rows", self.n()),
                format!("{} rows", b.rows()),
            ));
        }
        let u = self.factor.u();
        let mut ut_b = u.transpose_matmul(b)?;
        for (i, &lambda) in self.factor.lambda().iter().enumerate() {
            let gain = lambda / (lambda + self.nugget);
            for v in ut_b.row_mut(i) {
                *v *= gain;
            }
        }
        let correction = u.matmul(&ut_b)?;
        let mut out = b.sub(&correction)?;
        out.scale(1.0 / self.nugget);
        Ok(out)
    }

    /// Log density of y under N(0, U diag(lambda) U^T + sigma^2 I).
    ///
    /// The determinant comes from the matrix determinant lemma:
    /// log det = sum_i log(lambda_i + sigma^2) + (n - r) log sigma^2.
    pub fn log_likelihood(&self, y: &[f64]) -> Result<f64> {
        let n = self.n();
        if y.len() != n {
            return Err(dim_mismatch(
                format!("length {n}"),
                format!("length {}", y.len()),
            ));
        }
        let y_col = DenseMatrix::from_vec(n, 1, y.to_vec())?;
        let solved = self.woodbury_solve(&y_col)?;
        let quad: f64 = (0..n).map(|i| y[i] * solved.get(i, 0)).sum();
        let log_det: f64 = self
            .factor
            .lambda()
            .iter()
            .map(|&l| (l + self.nugget).ln())
            .sum::<f64>()
            + (n - self.rank()) as f64 * self.nugget.ln();
        let two_pi = 2.0 * std::f64::consts::PI;
        Ok(-0.5 * (n as f64 * two_pi.ln() + log_det + quad))
    }

    /// Posterior mean at test points: cross_cov * (K + sigma^2 I)^{-1} y.
    pub fn predict_mean(&self, cross_cov: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if cross_cov.cols() != n {
            return Err(dim_mismatch(
                format!("{n} columns"),
                format!("{} columns", cross_cov.cols()),
            ));
        }
        if y.len() != n {
            return Err(dim_mismatch(
                format!("length {n}"),
                format!("length {}", y.len()),
            ));
        }
        let y_col = DenseMatrix::from_vec(n, 1, y.to_vec())?;
        let solved = self.woodbury_solve(&y_col)?;
        let mean = cross_cov.matmul(&solved)?;
        Ok((0..mean.rows()).map(|i| mean.get(i, 0)).collect())
    }
}
