//! Low-rank measurement apparatus: dense symmetric eigensolver, spectral
//! truncation, condition numbers, randomized range finding and the
//! projection / conditioning diagnostics built on top of it.

use crate::error::{invalid, Error, Result};
use crate::matrix::{DenseMatrix, SymMatrix};
use crate::parallel::Workers;
use crate::transforms::{self, RowSource, SketchKind};
use crate::tsqr::{self, Scheme, TallMatrix, TsqrFactors};

/// Full spectral decomposition K = U D U^T, eigenvalues nonincreasing.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DenseMatrix,
}

impl EigenDecomposition {
    /// Nonincreasing eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors; column i pairs with eigenvalue i.
    pub fn eigenvectors(&self) -> &DenseMatrix {
        &self.eigenvectors
    }
}

/// Rank-r factor K ~ U diag(lambda) U^T.
#[derive(Debug, Clone)]
pub struct LowRankFactor {
    u: DenseMatrix,
    lambda: Vec<f64>,
}

impl LowRankFactor {
    pub fn new(u: DenseMatrix, lambda: Vec<f64>) -> Result<Self> {
        if u.cols() != lambda.len() {
            return Err(invalid(format!(
                "factor has {} columns but {} eigenvalues",
                u.cols(),
                lambda.len()
            )));
        }
        Ok(Self { u, lambda })
    }

    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn n(&self) -> usize {
        self.u.rows()
    }

    /// Orthonormal n x r basis.
    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    /// Nonincreasing eigenvalue estimates.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Materializes U diag(lambda) U^T.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut scaled = self.u.clone();
        for i in 0..scaled.rows() {
            let row = scaled.row_mut(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v *= self.lambda[j];
            }
        }
        scaled
            .matmul(&self.u.transpose())
            .expect("shapes agree by construction")
    }
}

/// Desk-scale guard for the dense eigensolver.
pub const JACOBI_MAX_ORDER: usize = 4096;
const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_RTOL: f64 = 1e-12;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps the upper triangle in fixed row order until the off-diagonal
/// Frobenius norm falls below 1e-12 ||K||_F, then sorts eigenpairs by
/// decreasing eigenvalue. Rotation order is fixed, so the result is
/// deterministic.
pub fn jacobi_eig(k: &SymMatrix) -> Result<EigenDecomposition> {
    let n = k.order();
    if n > JACOBI_MAX_ORDER {
        return Err(invalid(format!(
            "matrix order {n} exceeds the eigensolver guard {JACOBI_MAX_ORDER}"
        )));
    }
    let mut a = k.to_dense();
    let mut v = DenseMatrix::identity(n);
    let norm = k.frobenius_norm();
    let threshold = JACOBI_RTOL * norm;

    let mut off = off_diagonal_norm(&a);
    let mut sweeps = 0;
    while off > threshold && norm > 0.0 {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::ConvergenceFailure {
                what: "Jacobi eigensolver",
                iterations: sweeps,
                residual: off,
            });
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    let new_p = c * aip - s * aiq;
                    let new_q = s * aip + c * aiq;
                    a.set(i, p, new_p);
                    a.set(p, i, new_p);
                    a.set(i, q, new_q);
                    a.set(q, i, new_q);
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&a);
    }

    // Sort eigenpairs by decreasing eigenvalue.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(j, j)
            .partial_cmp(&a.get(i, i))
            .expect("eigenvalues are finite")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, j| v.get(i, order[j]));
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let x = a.get(i, j);
                acc += x * x;
            }
        }
    }
    acc.sqrt()
}

/// Errors of the rank-m truncation, straight from the retained spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationError {
    /// ||K - K_m||_2 = d(m+1, m+1) (0 when m = n).
    pub spectral: f64,
    /// ||K - K_m||_F = sqrt(sum_{j>m} d(j,j)^2).
    pub frobenius: f64,
}

/// Best rank-m approximation: keep the top-m eigenpairs.
pub fn truncate(e: &EigenDecomposition, m: usize) -> Result<(LowRankFactor, TruncationError)> {
    let n = e.eigenvalues.len();
    if m == 0 || m > n {
        return Err(invalid(format!("rank must satisfy 1 <= m <= {n}, got {m}")));
    }
    let u = DenseMatrix::from_fn(n, m, |i, j| e.eigenvectors.get(i, j));
    let lambda = e.eigenvalues[..m].to_vec();
    let spectral = if m == n { 0.0 } else { e.eigenvalues[m] };
    let frobenius = e.eigenvalues[m..]
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    Ok((
        LowRankFactor::new(u, lambda)?,
        TruncationError {
            spectral,
            frobenius,
        },
    ))
}

/// Condition number of the rank-m truncation: d(1,1)/d(m,m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionNumber {
    pub value: f64,
    /// Set when d(m,m) <= 0 in floating point; `value` is then +inf.
    pub infinite: bool,
}

pub fn condition_number(eigenvalues: &[f64], m: usize) -> Result<ConditionNumber> {
    if m == 0 || m > eigenvalues.len() {
        return Err(invalid(format!(
            "effective rank must satisfy 1 <= m <= {}, got {m}",
            eigenvalues.len()
        )));
    }
    let largest = eigenvalues[0];
    let smallest = eigenvalues[m - 1];
    if smallest <= 0.0 {
        return Ok(ConditionNumber {
            value: f64::INFINITY,
            infinite: true,
        });
    }
    Ok(ConditionNumber {
        value: largest / smallest,
        infinite: false,
    })
}

/// Result of randomized range finding: the sketched matrix K Omega and the
/// implicit orthonormal basis of its column space.
pub struct RangeFind {
    pub q: TsqrFactors,
    pub k_omega: TallMatrix,
}

/// Orthonormal basis for the column space of K Omega.
pub fn range_finder(
    k: &SymMatrix,
    r: usize,
    sketch: SketchKind,
    seed: u64,
    num_blocks: usize,
    scheme: Scheme,
    workers: &Workers,
) -> Result<RangeFind> {
    let k_omega = TallMatrix::new(transforms::apply_sketch_kind(k, sketch, r, seed, workers)?)?;
    let q = tsqr::tsqr_factor(&k_omega, num_blocks, scheme, workers)?;
    Ok(RangeFind { q, k_omega })
}

/// Matrix norm choice for projection error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Frobenius,
    Spectral,
}

const POWER_ITER_RTOL: f64 = 1e-8;
const POWER_ITER_MAX: usize = 10_000;

/// Projection error ||K - Q Q^T K|| in the requested norm.
///
/// The spectral norm comes from power iteration on M^T M with the fixed
/// all-ones start vector.
pub fn projection_error(k: &SymMatrix, q: &TsqrFactors, norm: NormKind) -> Result<f64> {
    let k_dense = k.to_dense();
    let qt_k = q.apply_qt(&k_dense)?;
    let projected = q.apply_q(&qt_k)?;
    let m = k_dense.sub(&projected)?;
    match norm {
        NormKind::Frobenius => Ok(m.frobenius_norm()),
        NormKind::Spectral => spectral_norm(&m),
    }
}

/// Largest singular value via power iteration on M^T M.
fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    let n = m.cols();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut estimate = 0.0f64;
    for _ in 0..POWER_ITER_MAX {
        // w = M^T (M v)
        let mv = mat_vec(m, &v);
        let w = mat_t_vec(m, &mv);
        let w_norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if w_norm == 0.0 {
            return Ok(0.0);
        }
        let next = w_norm; // Rayleigh quotient with unit v: v^T M^T M v -> ||w||
        let converged = (next - estimate).abs() <= POWER_ITER_RTOL * next;
        estimate = next;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / w_norm;
        }
        if converged {
            return Ok(estimate.sqrt());
        }
    }
    Err(Error::ConvergenceFailure {
        what: "power iteration",
        iterations: POWER_ITER_MAX,
        residual: estimate,
    })
}

fn mat_vec(m: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|i| m.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn mat_t_vec(m: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        let vi = v[i];
        if vi == 0.0 {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(m.row(i)) {
            *o += vi * x;
        }
    }
    out
}

/// Condition number of the sketched linear system K_hat R^{-1}.
///
/// In exact arithmetic K_hat R^{-1} is the orthonormal Q, so the result is
/// 1; the measured deviation is the numerical-stability diagnostic. The
/// ratio comes from the extreme eigenvalues of X^T X with X = K_hat R^{-1}.
pub fn sketched_system_condition(k_omega: &TallMatrix, final_r: &DenseMatrix) -> Result<f64> {
    let x = tsqr::back_substitute_right(final_r, k_omega.as_dense())?;
    let gram = x.transpose_matmul(&x)?;
    let gram_sym = SymMatrix::symmetrize(&gram)?;
    let eig = jacobi_eig(&gram_sym)?;
    let largest = eig.eigenvalues()[0];
    let smallest = *eig.eigenvalues().last().expect("nonempty spectrum");
    if smallest <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((largest / smallest).sqrt())
}

/// Rank-r spectral factor from the sketched range: B = Q^T K Q is
/// eigendecomposed and rotated back through Q.
pub fn randomized_lowrank(
    k: &SymMatrix,
    r: usize,
    sketch: SketchKind,
    seed: u64,
    num_blocks: usize,
    scheme: Scheme,
    workers: &Workers,
) -> Result<LowRankFactor> {
    randomized_lowrank_rows(k, r, sketch, seed, num_blocks, scheme, workers)
}

/// [`randomized_lowrank`] over any symmetric row source, so large matrices
/// can stay implicit. The caller guarantees symmetry of the rows.
pub fn randomized_lowrank_rows<S: RowSource>(
    k: &S,
    r: usize,
    sketch: SketchKind,
    seed: u64,
    num_blocks: usize,
    scheme: Scheme,
    workers: &Workers,
) -> Result<LowRankFactor> {
    let n = k.nrows();
    if k.ncols() != n {
        return Err(invalid("row source must be square"));
    }
    let k_omega = TallMatrix::new(transforms::apply_sketch_kind(k, sketch, r, seed, workers)?)?;
    let f = tsqr::tsqr_factor(&k_omega, num_blocks, scheme, workers)?;
    let q = f.apply_q(&DenseMatrix::identity(r))?;
    // K Q streamed row by row.
    let kq_rows = workers.map_indexed(n, |i| {
        let mut buf = vec![0.0; n];
        k.fill_row(i, &mut buf);
        let mut out = vec![0.0; r];
        for (j, &x) in buf.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (o, &qv) in out.iter_mut().zip(q.row(j)) {
                *o += x * qv;
            }
        }
        out
    });
    let kq = DenseMatrix::from_rows(&kq_rows)?;
    let b = q.transpose_matmul(&kq)?;
    let b_sym = SymMatrix::symmetrize(&b)?;
    let eig = jacobi_eig(&b_sym)?;
    let u = q.matmul(eig.eigenvectors())?;
    LowRankFactor::new(u, eig.eigenvalues().to_vec())
}
