//! Cross-module integration checks on the full sketch -> factor -> solve
//! pipeline.

use rand::Rng;

use covsketch::gp::GpModel;
use covsketch::kernels::{equispaced_grid, gram_matrix, KernelSpec};
use covsketch::lowrank::{jacobi_eig, randomized_lowrank};
use covsketch::transforms::SketchKind;
use covsketch::tsqr::{householder_qr, tsqr_factor, Scheme, TallMatrix};
use covsketch::{DenseMatrix, Workers};

#[test]
fn gram_matrices_are_psd_up_to_roundoff() {
    let grid = equispaced_grid(60, 0.0, 1.0).unwrap();
    let specs = [
        KernelSpec::squared_exponential(1.0, 0.05).unwrap(),
        KernelSpec::squared_exponential(2.0, 10.0).unwrap(),
        KernelSpec::matern(1.0, 1.0, 0.5).unwrap(),
        KernelSpec::matern(1.0, 1.0, 2.5).unwrap(),
    ];
    for spec in specs {
        let k = gram_matrix(&spec, &grid);
        let e = jacobi_eig(&k).unwrap();
        let top = e.eigenvalues()[0];
        let bottom = *e.eigenvalues().last().unwrap();
        assert!(
            bottom >= -1e-10 * top,
            "{spec:?}: most negative eigenvalue {bottom:e} vs top {top:e}"
        );
    }
}

#[test]
fn final_r_is_unique_across_block_counts_and_schemes() {
    let mut gen = covsketch::rng::seeded(1234);
    let a = TallMatrix::new(DenseMatrix::from_fn(1024, 16, |_, _| {
        gen.gen::<f64>() * 2.0 - 1.0
    }))
    .unwrap();
    let workers = Workers::new(2).unwrap();
    let dense = householder_qr(a.as_dense()).unwrap();
    let scale = a.as_dense().frobenius_norm();
    for b in [1usize, 2, 4, 8, 16] {
        for scheme in [Scheme::Tree, Scheme::Sequential { chains: b.min(2) }] {
            let f = tsqr_factor(&a, b, scheme, &workers).unwrap();
            let diff = f.final_r().sub(dense.r_factor()).unwrap().max_abs();
            assert!(diff < 1e-10 * scale, "b={b} {scheme:?}: diff {diff:e}");
            // Triangularity and the sign convention hold exactly.
            for i in 0..16 {
                assert!(f.final_r().get(i, i) >= 0.0);
                for j in 0..i {
                    assert_eq!(f.final_r().get(i, j), 0.0);
                }
            }
        }
    }
}

#[test]
fn kernel_to_gp_pipeline_end_to_end() {
    // Gram matrix -> randomized factor -> nugget model -> prediction at the
    // training points stays close to the observations.
    let n = 128;
    let grid = equispaced_grid(n, 0.0, 1.0).unwrap();
    let spec = KernelSpec::squared_exponential(1.0, 2.0).unwrap();
    let k = gram_matrix(&spec, &grid);
    let workers = Workers::new(2).unwrap();
    let factor =
        randomized_lowrank(&k, 24, SketchKind::Dht, 5, 2, Scheme::Tree, &workers).unwrap();
    let model = GpModel::new(factor, 1e-4).unwrap();
    let y: Vec<f64> = (0..n).map(|i| (grid.point(i)[0] * 4.0).cos()).collect();
    let mean = model.predict_mean(&k.to_dense(), &y).unwrap();
    let rmse = (mean
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    assert!(rmse < 0.05, "training-point RMSE {rmse}");
}
