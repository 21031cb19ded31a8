//! Small dense decompositions: pivoted Householder QR, power iteration,
//! cyclic Jacobi for symmetric matrices, and Cholesky.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::matrix::{dot, DenseMatrix};
use crate::rng::SeededRng;

/// Seed of the start vector used by [`spectral_norm`].
pub const POWER_ITERATION_SEED: u64 = 0x5E_ED0F_F0E5;

/// Orthonormal basis for the range of `x` via Householder QR with column
/// pivoting.
///
/// Columns are accepted while the largest remaining column norm exceeds
/// `tol` (default `1e-10 * ||x||_F`), so the returned width is the numerical
/// rank. An all-zero input yields an `n x 0` matrix.
pub fn orthonormal_basis(x: &DenseMatrix, tol: Option<f64>) -> Result<DenseMatrix> {
    let (n, d) = x.shape();
    if n == 0 || d == 0 {
        return Err(invalid("orthonormal_basis needs a nonempty matrix"));
    }
    x.check_finite()?;
    let fro = x.frobenius_norm();
    let tol = match tol {
        Some(t) if t > 0.0 => t,
        Some(t) => return Err(invalid(alloc::format!("tolerance must be positive, got {t}"))),
        None => 1e-10 * fro,
    };
    if fro == 0.0 {
        return Ok(DenseMatrix::zeros(n, 0));
    }

    let mut a = x.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::new();
    for k in 0..n.min(d) {
        let (pivot, pivot_norm) = (k..d)
            .map(|j| (j, norm_from(a.col(j), k)))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_norm <= tol {
            break;
        }
        if pivot != k {
            for i in 0..n {
                let t = a[(i, k)];
                a[(i, k)] = a[(i, pivot)];
                a[(i, pivot)] = t;
            }
        }
        let head = a[(k, k)];
        let alpha = if head >= 0.0 { -pivot_norm } else { pivot_norm };
        let mut v: Vec<f64> = a.col(k)[k..].to_vec();
        v[0] -= alpha;
        let vn = libm::sqrt(dot(&v, &v));
        if vn == 0.0 {
            reflectors.push(v);
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= vn;
        }
        for j in k..d {
            let col = &mut a.col_mut(j)[k..];
            let s = 2.0 * dot(&v, col);
            for (c, &vi) in col.iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
        reflectors.push(v);
    }

    let r = reflectors.len();
    let mut q = DenseMatrix::zeros(n, r);
    for j in 0..r {
        q[(j, j)] = 1.0;
    }
    for (k, v) in reflectors.iter().enumerate().rev() {
        if v.iter().all(|&x| x == 0.0) {
            continue;
        }
        for j in 0..r {
            let col = &mut q.col_mut(j)[k..];
            let s = 2.0 * dot(v, col);
            for (c, &vi) in col.iter_mut().zip(v) {
                *c -= s * vi;
            }
        }
    }
    Ok(q)
}

fn norm_from(col: &[f64], start: usize) -> f64 {
    libm::sqrt(col[start..].iter().map(|v| v * v).sum())
}

/// `||U^T U - I||_F`.
pub fn orthonormality_defect(u: &DenseMatrix) -> f64 {
    u.gram().sub(&DenseMatrix::identity(u.cols())).map(|m| m.frobenius_norm()).unwrap_or(f64::INFINITY)
}

/// Largest singular value by power iteration on `A^T A`.
///
/// The start vector is Gaussian from a fixed seed. Iteration stops when the
/// eigen-residual `||A^T A x - lambda x||` falls below `tol * lambda`.
pub fn spectral_norm(a: &DenseMatrix, max_iters: usize, tol: f64) -> Result<f64> {
    if a.is_empty() {
        return Err(invalid("spectral_norm of an empty matrix"));
    }
    if max_iters == 0 {
        return Err(invalid("max_iters must be at least 1"));
    }
    a.check_finite()?;
    if a.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let mut rng = SeededRng::new(POWER_ITERATION_SEED);
    let mut x: Vec<f64> = (0..a.cols()).map(|_| rng.normal()).collect();
    normalize(&mut x);
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        let y = a.mul_vec(&x)?;
        let z = a.t_mul_vec(&y)?;
        lambda = dot(&y, &y);
        if lambda == 0.0 {
            // start vector in the null space; restart along a coordinate with mass
            x = (0..a.cols()).map(|j| dot(a.col(j), a.col(j))).collect();
            normalize(&mut x);
            continue;
        }
        residual = libm::sqrt(
            z.iter()
                .zip(&x)
                .map(|(zi, xi)| (zi - lambda * xi) * (zi - lambda * xi))
                .sum(),
        );
        x = z;
        normalize(&mut x);
        if residual <= tol * lambda {
            return Ok(libm::sqrt(lambda));
        }
    }
    Err(Error::NoConvergence {
        op: "spectral_norm",
        iterations: max_iters,
        residual,
        last_iterate: libm::sqrt(lambda),
    })
}

fn normalize(x: &mut [f64]) {
    let n = libm::sqrt(dot(x, x));
    if n > 0.0 {
        for v in x.iter_mut() {
            *v /= n;
        }
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    let n = a.rows();
    check_dim("symmetric_eigenvalues", n, a.cols())?;
    a.check_finite()?;
    let mut m = a.clone();
    let scale = m.frobenius_norm();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for j in 0..n {
            for i in 0..j {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if libm::sqrt(off) <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Spectral norm of a symmetric matrix as its largest absolute eigenvalue.
pub fn symmetric_spectral_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(symmetric_eigenvalues(a)?.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    check_dim("cholesky", n, a.cols())?;
    a.check_finite()?;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: diag });
        }
        let ljj = libm::sqrt(diag);
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L L^T x = b` given the Cholesky factor.
pub fn cholesky_solve(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = SeededRng::new(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.normal())
    }

    /// One-sided Jacobi SVD: orthogonalize column pairs until converged,
    /// singular values are the final column norms.
    fn jacobi_singular_values(a: &DenseMatrix) -> Vec<f64> {
        let mut u = a.clone();
        let n = u.cols();
        for _ in 0..60 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha = dot(u.col(p), u.col(p));
                    let beta = dot(u.col(q), u.col(q));
                    let gamma = dot(u.col(p), u.col(q));
                    if gamma.abs() <= 1e-15 * libm::sqrt(alpha * beta) {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                    let c = 1.0 / libm::sqrt(1.0 + t * t);
                    let s = c * t;
                    for i in 0..u.rows() {
                        let up = u[(i, p)];
                        let uq = u[(i, q)];
                        u[(i, p)] = c * up - s * uq;
                        u[(i, q)] = s * up + c * uq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv: Vec<f64> = (0..n).map(|j| libm::sqrt(dot(u.col(j), u.col(j)))).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    #[test]
    fn identity_basis() {
        let q = orthonormal_basis(&DenseMatrix::identity(3), None).unwrap();
        assert_eq!(q.shape(), (3, 3));
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((q[(i, j)].abs() - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rank_one_basis() {
        let x = DenseMatrix::from_row_major(2, 2, &[1.0, 2.0, 0.0, 0.0]).unwrap();
        let q = orthonormal_basis(&x, None).unwrap();
        assert_eq!(q.shape(), (2, 1));
        assert!((q[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(q[(1, 0)].abs() < 1e-14);
    }

    #[test]
    fn zero_input_has_empty_basis() {
        let q = orthonormal_basis(&DenseMatrix::zeros(4, 3), None).unwrap();
        assert_eq!(q.shape(), (4, 0));
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut x = DenseMatrix::identity(2);
        x[(1, 0)] = f64::NAN;
        assert!(matches!(orthonormal_basis(&x, None), Err(Error::NonFinite { row: 1, col: 0 })));
    }

    #[test]
    fn full_rank_projector_residual() {
        let x = random(6, 3, 11);
        let u = orthonormal_basis(&x, None).unwrap();
        assert_eq!(u.cols(), 3);
        assert!(orthonormality_defect(&u) <= 1e-10 * 3.0);
        let proj = u.matmul(&u.t_matmul(&x).unwrap()).unwrap();
        assert!(x.sub(&proj).unwrap().frobenius_norm() <= 1e-8 * x.frobenius_norm());
    }

    #[test]
    fn spectral_norm_simple_cases() {
        let a = DenseMatrix::from_row_major(2, 2, &[3.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((spectral_norm(&a, 1000, 1e-12).unwrap() - 3.0).abs() < 1e-9);
        assert_eq!(spectral_norm(&DenseMatrix::zeros(3, 2), 10, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn spectral_norm_matches_jacobi_svd() {
        for seed in 0..20 {
            let a = random(5, 4, 100 + seed);
            let expect = jacobi_singular_values(&a)[0];
            let got = spectral_norm(&a, 10_000, 1e-12).unwrap();
            assert!((got - expect).abs() <= 1e-6 * expect, "{got} vs {expect}");
        }
    }

    #[test]
    fn spectral_norm_reports_non_convergence() {
        let a = random(8, 8, 5);
        match spectral_norm(&a, 1, 1e-15) {
            Err(Error::NoConvergence { iterations: 1, last_iterate, .. }) => assert!(last_iterate > 0.0),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn jacobi_eigen_and_cholesky() {
        let a = random(5, 5, 8);
        let spd = a.gram().add(&DenseMatrix::identity(5)).unwrap();
        let ev = symmetric_eigenvalues(&spd).unwrap();
        let sv = jacobi_singular_values(&a);
        for (e, s) in ev.iter().rev().zip(&sv) {
            assert!((e - (s * s + 1.0)).abs() < 1e-9);
        }
        let l = cholesky(&spd).unwrap();
        let b = [1.0, -2.0, 0.5, 3.0, 0.0];
        let x = cholesky_solve(&l, &b);
        let back = spd.mul_vec(&x).unwrap();
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10);
        }
        let neg = DenseMatrix::identity(2).scaled(-1.0);
        assert!(matches!(cholesky(&neg), Err(Error::NotPositiveDefinite { pivot: 0, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn basis_is_orthonormal(n in 1usize..12, d in 1usize..8, seed in any::<u64>(), rank_cut in 0usize..4) {
            let mut x = random(n, d, seed);
            // duplicate some columns to force rank deficiency
            for j in 0..rank_cut.min(d.saturating_sub(1)) {
                let src: Vec<f64> = x.col(0).to_vec();
                x.col_mut(d - 1 - j).copy_from_slice(&src);
            }
            let u = orthonormal_basis(&x, None).unwrap();
            let r = u.cols();
            prop_assert!(r <= n.min(d));
            prop_assert!(orthonormality_defect(&u) <= 1e-10 * (r.max(1) as f64));
            let resid = x.sub(&u.matmul(&u.t_matmul(&x).unwrap()).unwrap()).unwrap().frobenius_norm();
            prop_assert!(resid <= 1e-8 * x.frobenius_norm());
        }

        #[test]
        fn spectral_norm_within_frobenius_bounds(r in 1usize..8, c in 1usize..8, seed in any::<u64>()) {
            let a = random(r, c, seed);
            let s = spectral_norm(&a, 100_000, 1e-12).unwrap();
            let f = a.frobenius_norm();
            prop_assert!(s <= f * (1.0 + 1e-9));
            prop_assert!(s >= f / libm::sqrt(r.min(c) as f64) * (1.0 - 1e-9));
        }
    }
}
