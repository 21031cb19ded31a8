use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{cholesky, cholesky_solve};
use crate::matrix::{dot, DenseMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NnlsOptions {
    /// Bound on the projected-gradient infinity norm, relative to
    /// `max(||A^T y||_inf, ||A^T A||_max)`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for NnlsOptions {
    fn default() -> Self {
        NnlsOptions {
            tol: 1e-8,
            max_iters: 5000,
        }
    }
}

fn objective(q: &DenseMatrix, c: &[f64], h: &[f64]) -> f64 {
    let qh = q.mul_vec(h).expect("square");
    0.5 * dot(h, &qh) - dot(c, h)
}

fn projected_gradient_norm(h: &[f64], g: &[f64]) -> f64 {
    h.iter()
        .zip(g)
        .map(|(&hi, &gi)| if hi > 0.0 { gi.abs() } else { (-gi).max(0.0) })
        .fold(0.0, f64::max)
}

/// Minimizes `1/2 h^T Q h - c^T h` over `h >= 0`, i.e. one NNLS column with
/// `Q = A^T A` and `c = A^T y`.
///
/// Projected gradient with Barzilai-Borwein steps and a backtracking
/// safeguard that keeps the objective non-increasing. `trace` receives the
/// objective after every accepted step.
pub fn nnls_solve_column(
    q: &DenseMatrix,
    c: &[f64],
    opts: NnlsOptions,
    mut trace: Option<&mut dyn FnMut(f64)>,
) -> Result<Vec<f64>> {
    let k = c.len();
    check_dim("nnls_solve_column", k, q.rows())?;
    let scale = c.iter().fold(q.max_abs(), |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let threshold = opts.tol * scale;
    let mut h = vec![0.0; k];
    let mut f = 0.0;
    let mut g: Vec<f64> = c.iter().map(|v| -v).collect();
    let mut step = 1.0 / (0..k).map(|i| q[(i, i)]).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut residual = projected_gradient_norm(&h, &g);
    for _ in 0..opts.max_iters {
        if residual <= threshold {
            return Ok(h);
        }
        let mut trial;
        let mut f_trial;
        let mut tries = 0;
        loop {
            trial = h.iter().zip(&g).map(|(hi, gi)| (hi - step * gi).max(0.0)).collect::<Vec<_>>();
            f_trial = objective(q, c, &trial);
            let descent: f64 = g.iter().zip(trial.iter().zip(&h)).map(|(gi, (t, hi))| gi * (t - hi)).sum();
            if f_trial <= f + 1e-4 * descent || tries >= 60 {
                break;
            }
            step *= 0.5;
            tries += 1;
        }
        if f_trial > f {
            // no decrease at any step size: we are at the numerical optimum
            return Ok(h);
        }
        let s: Vec<f64> = trial.iter().zip(&h).map(|(t, hi)| t - hi).collect();
        let qs = q.mul_vec(&s)?;
        let sy = dot(&s, &qs);
        let ss = dot(&s, &s);
        step = if sy > 0.0 { (ss / sy).clamp(1e-12 / scale, 1e12 / scale) } else { 1e12 / scale };
        for (gi, qsi) in g.iter_mut().zip(&qs) {
            *gi += qsi;
        }
        h = trial;
        f = f_trial;
        if let Some(cb) = trace.as_mut() {
            cb(f);
        }
        residual = projected_gradient_norm(&h, &g);
    }
    if residual <= threshold {
        return Ok(h);
    }
    Err(Error::NoConvergence {
        op: "nnls_solve",
        iterations: opts.max_iters,
        residual,
        last_iterate: f,
    })
}

/// Column-wise NNLS: `H = argmin_{H >= 0} ||A H - Y||_F`.
pub fn nnls_solve(a: &DenseMatrix, y: &DenseMatrix, opts: NnlsOptions) -> Result<DenseMatrix> {
    check_dim("nnls_solve", a.rows(), y.rows())?;
    if a.cols() == 0 || a.max_abs() == 0.0 {
        return Err(invalid("nnls_solve needs a nonzero coefficient matrix"));
    }
    let q = a.gram();
    let cmat = a.t_matmul(y)?;
    let mut h = DenseMatrix::zeros(a.cols(), y.cols());
    for j in 0..y.cols() {
        let col = nnls_solve_column(&q, cmat.col(j), opts, None)?;
        h.col_mut(j).copy_from_slice(&col);
    }
    Ok(h)
}

/// `||X - X_I H||_F / ||X||_F`.
pub fn relative_error(x: &DenseMatrix, anchors: &[usize], h: &DenseMatrix) -> Result<f64> {
    let norm = x.frobenius_norm();
    if norm == 0.0 {
        return Err(invalid("relative error of a zero matrix is undefined"));
    }
    let xi = x.select_columns(anchors)?;
    Ok(x.sub(&xi.matmul(h)?)?.frobenius_norm() / norm)
}

/// Relative error after fitting each prefix `anchors[..1]`, `anchors[..2]`, ...
pub fn relative_error_curve(x: &DenseMatrix, anchors: &[usize], opts: NnlsOptions) -> Result<Vec<f64>> {
    (1..=anchors.len())
        .map(|p| {
            let xi = x.select_columns(&anchors[..p])?;
            if xi.max_abs() == 0.0 {
                return Ok(1.0);
            }
            let h = nnls_solve(&xi, x, opts)?;
            relative_error(x, &anchors[..p], &h)
        })
        .collect()
}

/// Lawson-Hanson active-set NNLS for one right-hand side. Exact up to the
/// least-squares solves on the passive set; used for small oracle problems.
pub fn nnls_active_set(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_dim("nnls_active_set", a.rows(), b.len())?;
    let n = a.cols();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale * scale * (a.rows().max(n) as f64);
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let grad = |x: &[f64]| -> Result<Vec<f64>> {
        let r: Vec<f64> = b.iter().zip(a.mul_vec(x)?).map(|(bi, axi)| bi - axi).collect();
        a.t_mul_vec(&r)
    };
    for _outer in 0..3 * n + 10 {
        let w = grad(&x)?;
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
        let Some(t) = candidate else { break };
        if w[t] <= tol {
            break;
        }
        passive[t] = true;
        for _inner in 0..3 * n + 10 {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let z = passive_least_squares(a, b, &idx)?;
            if z.iter().all(|&v| v > 0.0) {
                for (p, &j) in idx.iter().enumerate() {
                    x[j] = z[p];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (p, &j) in idx.iter().enumerate() {
                if z[p] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z[p]));
                }
            }
            for (p, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z[p] - x[j]);
                if x[j] <= 1e-15 * scale {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    Ok(x)
}

fn passive_least_squares(a: &DenseMatrix, b: &[f64], idx: &[usize]) -> Result<Vec<f64>> {
    let sub = a.select_columns(idx)?;
    let mut q = sub.gram();
    let ridge = 1e-14 * q.trace().max(f64::MIN_POSITIVE);
    for i in 0..q.rows() {
        q[(i, i)] += ridge;
    }
    let l = cholesky(&q)?;
    Ok(cholesky_solve(&l, &sub.t_mul_vec(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmf::generate_separable;
    use crate::rng::SeededRng;

    fn nonneg(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = SeededRng::new(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.uniform())
    }

    #[test]
    fn identity_assignment() {
        let a = nonneg(8, 3, 1);
        let h = nnls_solve(&a, &a, NnlsOptions::default()).unwrap();
        assert!(h.sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn negative_targets_give_zero() {
        let a = nonneg(6, 3, 2);
        let h = nnls_solve(&a, &a.scaled(-1.0), NnlsOptions::default()).unwrap();
        assert_eq!(h, DenseMatrix::zeros(3, 3));
    }

    #[test]
    fn separable_instance_reconstructs() {
        let inst = generate_separable(30, 40, 5, &mut SeededRng::new(3)).unwrap();
        let xi = inst.x.select_columns(&inst.anchors).unwrap();
        let h = nnls_solve(&xi, &inst.x, NnlsOptions::default()).unwrap();
        assert!(h.as_slice().iter().all(|&v| v >= 0.0));
        assert!(relative_error(&inst.x, &inst.anchors, &h).unwrap() <= 1e-6);
    }

    #[test]
    fn zero_coefficients_rejected() {
        assert!(nnls_solve(&DenseMatrix::zeros(3, 2), &nonneg(3, 1, 1), NnlsOptions::default()).is_err());
    }

    #[test]
    fn non_convergence_reported() {
        let a = nonneg(20, 6, 4);
        let y = nonneg(20, 1, 5);
        let opts = NnlsOptions { tol: 1e-15, max_iters: 2 };
        assert!(matches!(nnls_solve(&a, &y, opts), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn objective_never_increases() {
        for seed in 0..30 {
            let a = nonneg(15, 5, seed);
            let mut rng = SeededRng::new(100 + seed);
            let y: Vec<f64> = (0..15).map(|_| rng.normal()).collect();
            let q = a.gram();
            let c = a.t_mul_vec(&y).unwrap();
            let mut history = Vec::new();
            let mut record = |f: f64| history.push(f);
            let h = nnls_solve_column(&q, &c, NnlsOptions::default(), Some(&mut record)).unwrap();
            assert!(h.iter().all(|&v| v >= 0.0));
            assert!(history.windows(2).all(|w| w[1] <= w[0] + 1e-15 * w[0].abs().max(1.0)));
            // agrees with the active-set solution
            let exact = nnls_active_set(&a, &y).unwrap();
            let fe = objective(&q, &c, &exact);
            let fh = objective(&q, &c, &h);
            assert!(fh - fe <= 1e-8 * fe.abs().max(1.0), "{fh} vs {fe}");
        }
    }

    #[test]
    fn relative_error_edges() {
        let x = nonneg(4, 3, 9);
        let anchors = [0, 1, 2];
        assert!(relative_error(&x, &anchors, &DenseMatrix::identity(3)).unwrap() < 1e-15);
        assert!((relative_error(&x, &anchors, &DenseMatrix::zeros(3, 3)).unwrap() - 1.0).abs() < 1e-15);
        assert!(relative_error(&DenseMatrix::zeros(2, 2), &[0], &DenseMatrix::zeros(1, 2)).is_err());
        // direct formula
        let h = nonneg(2, 3, 10);
        let xi = x.select_columns(&[2, 0]).unwrap();
        let mut num = 0.0;
        for i in 0..4 {
            for j in 0..3 {
                let r = x[(i, j)] - (xi[(i, 0)] * h[(0, j)] + xi[(i, 1)] * h[(1, j)]);
                num += r * r;
            }
        }
        let expect = libm::sqrt(num) / x.frobenius_norm();
        assert!((relative_error(&x, &[2, 0], &h).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn error_curve_is_non_increasing() {
        let inst = generate_separable(25, 30, 6, &mut SeededRng::new(11)).unwrap();
        let curve = relative_error_curve(&inst.x, &[3, 0, 5, 1, 4, 2], NnlsOptions::default()).unwrap();
        assert!(curve.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert!(*curve.last().unwrap() < 1e-6);
    }
}
