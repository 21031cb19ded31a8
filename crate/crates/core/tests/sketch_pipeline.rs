use countgauss_core::distcheck::{moment_suite, row_distribution_compare, RowCompareOptions};
use countgauss_core::linalg::orthonormal_basis;
use countgauss_core::{gaussian_matrix, CountGaussTransform, SeededRng, SparseMatrix};

#[test]
fn moment_bounds_hold_on_a_random_subspace() {
    let mut rng = SeededRng::new(7);
    let u = orthonormal_basis(&gaussian_matrix(64, 4, &mut rng).unwrap(), None).unwrap();
    let rep = moment_suite(&u, None, 256, 2000, &SeededRng::new(7), 1.0).unwrap();
    assert!(rep.pass1 && rep.pass5, "{rep:?}");
    assert!(rep.trace_zero_mean);
    assert!(rep.est1.mean <= rep.bound1 * 1.2);
}

#[test]
fn countgauss_rows_look_gaussian_with_many_buckets() {
    let mut rng = SeededRng::new(3);
    let u = orthonormal_basis(&gaussian_matrix(256, 2, &mut rng).unwrap(), None).unwrap();
    let cmp = row_distribution_compare(&u, 2048, 2000, &SeededRng::new(5), RowCompareOptions::default()).unwrap();
    assert!(cmp.energy.p_value > 0.001, "{:?}", cmp.energy);
    assert!(cmp.max_cov_dev_countgauss < 0.25, "{}", cmp.max_cov_dev_countgauss);
}

#[test]
fn sparse_pipeline_matches_dense_operator() {
    let mut rng = SeededRng::new(1);
    let mut triplets = Vec::new();
    for _ in 0..500 {
        triplets.push((rng.below(300), rng.below(40), rng.normal()));
    }
    let x = SparseMatrix::from_triplets(300, 40, &triplets).unwrap();
    let t = CountGaussTransform::new(12, None, 300, &mut SeededRng::new(9)).unwrap();
    let fast = t.apply(&x).unwrap();
    let slow = t.to_dense().matmul(&x.to_dense()).unwrap();
    assert!(fast.sub(&slow).unwrap().max_abs() <= 1e-10 * slow.max_abs());
}
