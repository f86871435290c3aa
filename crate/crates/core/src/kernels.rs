//! Covariance kernels, evaluation grids and Gram matrices, plus synthetic
//! positive definite matrices with a planted spectrum for controlled
//! experiments.

use rand_distr::StandardNormal;

use rand::Rng;

use crate::error::{dim_mismatch, invalid, Result};
use crate::matrix::{DenseMatrix, SymMatrix};
use crate::rng;
use crate::special::{bessel_k, gamma};
use crate::transforms::RowSource;
use crate::tsqr::householder_qr;

/// Kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    SquaredExponential,
    Matern,
}

/// Parameterized stationary covariance function.
///
/// Squared exponential: C(x, y) = theta1 exp(-theta2 ||x - y||^2).
/// Matern: C(x, y) = theta1 (1 / (Gamma(nu) 2^{nu-1})) z^nu K_nu(z) with
/// z = 2 sqrt(nu) ||x - y|| / theta2 (the Handcock-Stein scaling; at
/// nu = 1/2 it is exp(-sqrt(2) r / theta2), and nu -> inf approaches the
/// squared exponential with rate 1/theta2^2). Both satisfy C(x, x) = theta1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    kind: KernelKind,
    theta1: f64,
    theta2: f64,
    nu: Option<f64>,
}

impl KernelSpec {
    pub fn squared_exponential(theta1: f64, theta2: f64) -> Result<Self> {
        if theta1 <= 0.0 || theta2 <= 0.0 {
            return Err(invalid("kernel parameters theta1, theta2 must be positive"));
        }
        Ok(Self {
            kind: KernelKind::SquaredExponential,
            theta1,
            theta2,
            nu: None,
        })
    }

    pub fn matern(theta1: f64, theta2: f64, nu: f64) -> Result<Self> {
        if theta1 <= 0.0 || theta2 <= 0.0 {
            return Err(invalid("kernel parameters theta1, theta2 must be positive"));
        }
        if nu <= 0.0 {
            return Err(invalid("Matern smoothness nu must be positive"));
        }
        Ok(Self {
            kind: KernelKind::Matern,
            theta1,
            theta2,
            nu: Some(nu),
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }
    pub fn theta1(&self) -> f64 {
        self.theta1
    }
    pub fn theta2(&self) -> f64 {
        self.theta2
    }
    pub fn nu(&self) -> Option<f64> {
        self.nu
    }

    /// Kernel value at distance `dist >= 0`.
    pub fn eval_at_distance(&self, dist: f64) -> f64 {
        match self.kind {
            KernelKind::SquaredExponential => self.theta1 * (-self.theta2 * dist * dist).exp(),
            KernelKind::Matern => {
                if dist == 0.0 {
                    return self.theta1; // limit of z^nu K_nu(z) as z -> 0
                }
                let nu = self.nu.expect("validated at construction");
                let z = 2.0 * nu.sqrt() * dist / self.theta2;
                let prefactor = 1.0 / (gamma(nu) * 2.0_f64.powf(nu - 1.0));
                self.theta1 * prefactor * z.powf(nu) * bessel_k(nu, z)
            }
        }
    }
}

/// Finite set of d-dimensional evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    n: usize,
    dim: usize,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("point set must contain at least one point"));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(invalid("points must have dimension at least 1"));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(invalid("all points must share the same dimension"));
        }
        let n = points.len();
        let mut coords = Vec::with_capacity(n * dim);
        for p in &points {
            coords.extend_from_slice(p);
        }
        Ok(Self { coords, n, dim })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// n equispaced one-dimensional points spanning [a, b] inclusive.
pub fn equispaced_grid(n: usize, a: f64, b: f64) -> Result<PointSet> {
    if n < 2 {
        return Err(invalid(format!("grid needs at least 2 points, got {n}")));
    }
    if !(a < b) {
        return Err(invalid(format!("grid interval is empty: a={a}, b={b}")));
    }
    let step = (b - a) / (n - 1) as f64;
    let points = (0..n).map(|i| vec![a + i as f64 * step]).collect();
    PointSet::new(points)
}

/// Kernel evaluation at a pair of points.
pub fn eval_kernel(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(dim_mismatch(
            format!("{}-dimensional point", x.len()),
            format!("{}-dimensional point", y.len()),
        ));
    }
    let dist = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(spec.eval_at_distance(dist))
}

/// Dense Gram matrix k(i, j) = C(x_i, x_j). Upper triangle is computed and
/// mirrored, so the result is symmetric bit for bit.
pub fn gram_matrix(spec: &KernelSpec, pts: &PointSet) -> SymMatrix {
    SymMatrix::from_fn(pts.len(), |i, j| {
        if i == j {
            spec.theta1()
        } else {
            eval_kernel(spec, pts.point(i), pts.point(j)).expect("points share a dimension")
        }
    })
}

/// Synthetic PSD matrix with planted spectrum lambda1 * exp(-lambda2 * i),
/// i = 1..n, conjugated by a seeded random orthonormal basis.
///
/// Returns the matrix and the planted eigenvalues in decreasing order.
pub fn synthetic_psd(
    n: usize,
    lambda1: f64,
    lambda2: f64,
    seed: u64,
) -> Result<(SymMatrix, Vec<f64>)> {
    if n < 2 {
        return Err(invalid(format!("order must be at least 2, got {n}")));
    }
    if lambda1 <= 0.0 || lambda2 < 0.0 {
        return Err(invalid(
            "spectrum scale must be positive and decay rate nonnegative",
        ));
    }
    let mut gen = rng::seeded(seed);
    let gaussian = DenseMatrix::from_fn(n, n, |_, _| gen.sample(StandardNormal));
    // Orthonormalize the columns: E is the thin Q of a Householder QR.
    let qr = householder_qr(&gaussian)?;
    let e = qr.apply_q(&DenseMatrix::identity(n))?;

    let planted: Vec<f64> = (1..=n)
        .map(|i| lambda1 * (-lambda2 * i as f64).exp())
        .collect();

    // K = E D E^T, assembled as (E D) E^T and symmetrized exactly.
    let mut ed = e.clone();
    for i in 0..n {
        let row = ed.row_mut(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v *= planted[j];
        }
    }
    let k_raw = ed.matmul(&e.transpose())?;
    let k = SymMatrix::symmetrize(&k_raw)?;
    Ok((k, planted))
}

/// Implicit Gram matrix of a stationary kernel on an equispaced 1-d grid.
///
/// k(i, j) depends only on |i - j|, so one length-n table of kernel values
/// replaces the n x n matrix. Rows are served on demand, which keeps the
/// large-n sketching benchmarks at O(n r) memory.
#[derive(Debug, Clone)]
pub struct StationaryGridRows {
    table: Vec<f64>,
}

impl StationaryGridRows {
    pub fn new(spec: &KernelSpec, n: usize, a: f64, b: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("grid needs at least 2 points, got {n}")));
        }
        if !(a < b) {
            return Err(invalid(format!("grid interval is empty: a={a}, b={b}")));
        }
        let step = (b - a) / (n - 1) as f64;
        let table = (0..n)
            .map(|d| spec.eval_at_distance(d as f64 * step))
            .collect();
        Ok(Self { table })
    }
}

impl RowSource for StationaryGridRows {
    fn nrows(&self) -> usize {
        self.table.len()
    }
    fn ncols(&self) -> usize {
        self.table.len()
    }
    fn fill_row(&self, i: usize, buf: &mut [f64]) {
        for (j, v) in buf.iter_mut().enumerate() {
            *v = self.table[i.abs_diff(j)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_and_spacing() {
        let g = equispaced_grid(100, 0.0, 1.0).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g.point(0)[0], 0.0);
        assert_eq!(g.point(99)[0], 1.0);
        let spacing = g.point(1)[0] - g.point(0)[0];
        assert!((spacing - 1.0 / 99.0).abs() < 1e-15);
    }

    #[test]
    fn grid_two_points_and_symmetric_interval() {
        let g = equispaced_grid(2, 0.0, 1.0).unwrap();
        assert_eq!((g.point(0)[0], g.point(1)[0]), (0.0, 1.0));
        let g = equispaced_grid(5, -1.0, 1.0).unwrap();
        let want = [-1.0, -0.5, 0.0, 0.5, 1.0];
        for (i, w) in want.iter().enumerate() {
            assert!((g.point(i)[0] - w).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(equispaced_grid(1, 0.0, 1.0).is_err());
        assert!(equispaced_grid(10, 1.0, 1.0).is_err());
        assert!(equispaced_grid(10, 2.0, 1.0).is_err());
    }

    #[test]
    fn sqexp_at_zero_distance_is_theta1() {
        let spec = KernelSpec::squared_exponential(1.0, 1.0).unwrap();
        let v = eval_kernel(&spec, &[0.3, 0.4], &[0.3, 0.4]).unwrap();
        assert_eq!(v, 1.0);
        let spec = KernelSpec::squared_exponential(2.5, 3.0).unwrap();
        assert_eq!(eval_kernel(&spec, &[1.0], &[1.0]).unwrap(), 2.5);
    }

    #[test]
    fn kernel_is_symmetric_in_arguments() {
        let spec = KernelSpec::matern(1.3, 0.8, 1.7).unwrap();
        let x = [0.1, 0.9];
        let y = [0.7, 0.2];
        let a = eval_kernel(&spec, &x, &y).unwrap();
        let b = eval_kernel(&spec, &y, &x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn kernel_dimension_mismatch() {
        let spec = KernelSpec::squared_exponential(1.0, 1.0).unwrap();
        assert!(eval_kernel(&spec, &[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn matern_half_equals_exponential_kernel() {
        // nu = 1/2 collapses to theta1 exp(-sqrt(2) r / theta2).
        let spec = KernelSpec::matern(1.0, 1.0, 0.5).unwrap();
        let rate = 2.0_f64.sqrt();
        for &r in &[0.01, 0.1, 0.5, 1.0, 2.0] {
            let got = spec.eval_at_distance(r);
            let want = (-rate * r).exp();
            assert!(
                (got - want).abs() < 1e-12 * want,
                "r={r}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn matern_large_nu_approaches_squared_exponential() {
        // As nu grows, Matern(theta2) -> exp(-r^2 / theta2^2), i.e. a
        // squared exponential with rate 1/theta2^2.
        let matern = KernelSpec::matern(1.0, 1.0, 100.0).unwrap();
        let sqexp = KernelSpec::squared_exponential(1.0, 1.0).unwrap();
        let r = 0.1;
        let a = matern.eval_at_distance(r);
        let b = sqexp.eval_at_distance(r);
        assert!((a - b).abs() / b < 0.05, "{a} vs {b}");
    }

    #[test]
    fn gram_of_coincident_points() {
        let spec = KernelSpec::squared_exponential(2.0, 1.0).unwrap();
        let pts = PointSet::new(vec![vec![0.5], vec![0.5]]).unwrap();
        let k = gram_matrix(&spec, &pts);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(k.get(i, j), 2.0);
            }
        }
    }

    #[test]
    fn gram_two_point_hand_value() {
        let spec = KernelSpec::squared_exponential(1.0, 1.0).unwrap();
        let pts = PointSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let k = gram_matrix(&spec, &pts);
        assert_eq!(k.get(0, 0), 1.0);
        assert!((k.get(0, 1) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(k.get(0, 1).to_bits(), k.get(1, 0).to_bits());
    }

    #[test]
    fn synthetic_psd_flat_spectrum_is_identity() {
        let (k, planted) = synthetic_psd(4, 1.0, 0.0, 9).unwrap();
        assert!(planted.iter().all(|&v| v == 1.0));
        let err = k
            .to_dense()
            .sub(&DenseMatrix::identity(4))
            .unwrap()
            .frobenius_norm();
        assert!(err < 1e-13, "distance from identity {err:e}");
    }

    #[test]
    fn synthetic_psd_is_deterministic() {
        let (a, _) = synthetic_psd(32, 1.0, 0.01, 77).unwrap();
        let (b, _) = synthetic_psd(32, 1.0, 0.01, 77).unwrap();
        assert_eq!(a, b);
        let (c, _) = synthetic_psd(32, 1.0, 0.01, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_psd_rejects_tiny_order() {
        assert!(synthetic_psd(1, 1.0, 0.1, 0).is_err());
    }

    #[test]
    fn stationary_grid_rows_match_dense_gram() {
        let spec = KernelSpec::squared_exponential(1.0, 3.0).unwrap();
        let n = 37;
        let grid = equispaced_grid(n, 0.0, 1.0).unwrap();
        let dense = gram_matrix(&spec, &grid);
        let rows = StationaryGridRows::new(&spec, n, 0.0, 1.0).unwrap();
        let mut buf = vec![0.0; n];
        for i in 0..n {
            rows.fill_row(i, &mut buf);
            for j in 0..n {
                // Distance computed from the table index vs from point
                // coordinates differs by one rounding step.
                assert!((buf[j] - dense.get(i, j)).abs() < 1e-13);
            }
        }
    }
}
