//! Linear SVM without bias, solved in the dual, and the check that a
//! random projection of the data approximately preserves the margin.
//!
//! The dual is `max 1^T a - 1/2 a^T Y X X^T Y a` over the box `0 <= a <= C`.
//! With `Z` its optimal value the margin is `1 / sqrt(2 Z)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{orthonormal_basis, symmetric_spectral_norm};
use crate::matrix::{dot, DenseMatrix};
use crate::rng::SeededRng;
use crate::sketch::{CountGaussTransform, CountSketchMap};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvmProblem {
    /// `N x d`, one sample per row.
    pub x: DenseMatrix,
    /// Labels in `{-1, +1}`.
    pub y: Vec<f64>,
    /// Upper end of the dual box.
    pub c: f64,
}

impl SvmProblem {
    pub fn new(x: DenseMatrix, y: Vec<f64>, c: f64) -> Result<Self> {
        crate::error::check_dim("svm labels", x.rows(), y.len())?;
        if x.rows() == 0 {
            return Err(invalid("an SVM problem needs at least one sample"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(alloc::format!("soft-margin parameter must be positive and finite, got {c}")));
        }
        if let Some(i) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
            return Err(invalid(alloc::format!("label {i} is {}, expected -1 or +1", y[i])));
        }
        x.check_finite()?;
        Ok(SvmProblem { x, y, c })
    }

    /// True when only one class is present.
    pub fn is_one_class(&self) -> bool {
        self.y.iter().all(|&v| v == self.y[0])
    }

    pub fn samples(&self) -> usize {
        self.x.rows()
    }

    pub fn features(&self) -> usize {
        self.x.cols()
    }

    /// Same labels and box, samples mapped through `X -> X R`.
    pub fn project(&self, r: &DenseMatrix) -> Result<SvmProblem> {
        Ok(SvmProblem {
            x: self.x.matmul(r)?,
            y: self.y.clone(),
            c: self.c,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvmSolution {
    pub alpha: Vec<f64>,
    /// Dual objective `Z`.
    pub objective: f64,
    /// `1 / sqrt(2 Z)`, infinite when `Z <= 0`.
    pub gamma: f64,
    /// `sum_i alpha_i y_i x_i`
    pub w: Vec<f64>,
    pub passes: usize,
    /// Dual objective after each full pass.
    pub objective_history: Vec<f64>,
}

fn dual_objective(alpha: &[f64], w: &[f64]) -> f64 {
    alpha.iter().sum::<f64>() - 0.5 * dot(w, w)
}

/// Cyclic dual coordinate ascent from `alpha = 0`.
///
/// Each coordinate step maximizes the objective exactly along that
/// coordinate and clips to the box, so the objective never decreases.
/// Stops once the largest projected-gradient magnitude in a pass is at most
/// `tol`.
pub fn svm_dual_solve(p: &SvmProblem, tol: f64, max_passes: usize) -> Result<SvmSolution> {
    if !(tol > 0.0) || max_passes == 0 {
        return Err(invalid("need tol > 0 and max_passes >= 1"));
    }
    let (n, d) = p.x.shape();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| p.x.row(i)).collect();
    let q: Vec<f64> = rows.iter().map(|r| dot(r, r)).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d];
    let mut history = Vec::new();
    let mut violation = f64::INFINITY;
    for pass in 1..=max_passes {
        violation = 0.0;
        for i in 0..n {
            let g = 1.0 - p.y[i] * dot(&w, &rows[i]);
            let pg = if alpha[i] <= 0.0 {
                g.max(0.0)
            } else if alpha[i] >= p.c {
                (-g).max(0.0)
            } else {
                g.abs()
            };
            violation = violation.max(pg);
            if pg == 0.0 {
                continue;
            }
            let next = if q[i] > 0.0 {
                (alpha[i] + g / q[i]).clamp(0.0, p.c)
            } else {
                p.c
            };
            let delta = next - alpha[i];
            if delta != 0.0 {
                alpha[i] = next;
                let s = delta * p.y[i];
                for (wj, xj) in w.iter_mut().zip(&rows[i]) {
                    *wj += s * xj;
                }
            }
        }
        history.push(dual_objective(&alpha, &w));
        if violation <= tol {
            // recompute w from alpha to shed accumulated rounding
            let mut fresh = vec![0.0; d];
            for i in 0..n {
                let s = alpha[i] * p.y[i];
                for (wj, xj) in fresh.iter_mut().zip(&rows[i]) {
                    *wj += s * xj;
                }
            }
            let objective = dual_objective(&alpha, &fresh);
            let gamma = if objective > 0.0 {
                1.0 / libm::sqrt(2.0 * objective)
            } else {
                f64::INFINITY
            };
            return Ok(SvmSolution {
                alpha,
                objective,
                gamma,
                w: fresh,
                passes: pass,
                objective_history: history,
            });
        }
    }
    Err(Error::NoConvergence {
        op: "svm_dual_solve",
        iterations: max_passes,
        residual: violation,
        last_iterate: dual_objective(&alpha, &w),
    })
}

/// `||I - V^T R R^T V||_2` where the columns of `V` span the row space of
/// `X`. Zero means `R` preserves every inner product between samples.
pub fn embedding_error(x: &DenseMatrix, r: &DenseMatrix) -> Result<f64> {
    crate::error::check_dim("embedding_error", x.cols(), r.rows())?;
    let v = orthonormal_basis(&x.transpose(), None)?;
    if v.cols() == 0 {
        return Err(invalid("embedding error is undefined for a zero data matrix"));
    }
    let w = r.t_matmul(&v)?;
    let e = DenseMatrix::identity(v.cols()).sub(&w.gram())?;
    symmetric_spectral_norm(&e)
}

/// Relative slack granted to the bound comparisons for solver tolerance.
pub const BOUND_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarginReport {
    pub embedding_error: f64,
    pub gamma: f64,
    pub gamma_projected: f64,
    pub objective: f64,
    pub objective_projected: f64,
    /// `(1 - e / (1 - e)) gamma^2`
    pub lower: f64,
    /// `gamma^2 / (1 - e)`
    pub upper: f64,
    /// `(1 - e) gamma^2`, `(1 + e) gamma^2`: the tighter form, reported only.
    pub tight_lower: f64,
    pub tight_upper: f64,
    pub tight_holds: bool,
    pub one_class: bool,
    pub pass: bool,
}

/// Solves the problem on `X` and on `X R` and compares squared margins.
///
/// The asserted sandwich `(1 - e/(1-e)) g^2 <= g~^2 <= g^2 / (1 - e)` holds
/// for the soft-margin dual too, because at its optimum
/// `a^T Y X X^T Y a <= 1^T a`, i.e. `||w||^2 <= 2 Z`.
pub fn margin_preservation_check(p: &SvmProblem, r: &DenseMatrix, tol: f64, max_passes: usize) -> Result<MarginReport> {
    let e = embedding_error(&p.x, r)?;
    if !(e < 0.5) {
        return Err(Error::Precondition(alloc::format!(
            "embedding error {e} must be below 1/2 for the margin bounds to be meaningful"
        )));
    }
    let orig = svm_dual_solve(p, tol, max_passes)?;
    let proj = svm_dual_solve(&p.project(r)?, tol, max_passes)?;
    Ok(margin_bounds(e, &orig, &proj, p.is_one_class()))
}

/// Compares two solved problems given the embedding error `e` of the
/// projection relating them.
pub fn margin_bounds(e: f64, orig: &SvmSolution, proj: &SvmSolution, one_class: bool) -> MarginReport {
    let g2 = orig.gamma * orig.gamma;
    let h2 = proj.gamma * proj.gamma;
    let lower = (1.0 - e / (1.0 - e)) * g2;
    let upper = g2 / (1.0 - e);
    let slack = BOUND_SLACK * g2;
    let tight_lower = (1.0 - e) * g2;
    let tight_upper = (1.0 + e) * g2;
    MarginReport {
        embedding_error: e,
        gamma: orig.gamma,
        gamma_projected: proj.gamma,
        objective: orig.objective,
        objective_projected: proj.objective,
        lower,
        upper,
        tight_lower,
        tight_upper,
        tight_holds: tight_lower - slack <= h2 && h2 <= tight_upper + slack,
        one_class,
        pass: e < 0.5 && lower - slack <= h2 && h2 <= upper + slack,
    }
}

/// Families of `d x r` data projections `R`, each with `E[R R^T] = I`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ProjectionKind {
    /// `G / sqrt(r)`
    Gaussian,
    /// `T^T / sqrt(r)` with `T = G S` the `r x d` CountGauss transform.
    CountGauss,
    /// `S^T` with `S` an `r x d` CountSketch.
    CountSketch,
}

/// Draws a `d x r` projection. `buckets` only applies to CountGauss
/// (default `5 r`).
pub fn projection_matrix(
    kind: ProjectionKind,
    d: usize,
    r: usize,
    buckets: Option<usize>,
    rng: &mut SeededRng,
) -> Result<DenseMatrix> {
    if d == 0 || r == 0 {
        return Err(invalid("projection dimensions must be positive"));
    }
    let scale = 1.0 / libm::sqrt(r as f64);
    match kind {
        ProjectionKind::Gaussian => Ok(crate::matrix::gaussian_matrix(d, r, rng)?.scaled(scale)),
        ProjectionKind::CountGauss => {
            let t = CountGaussTransform::new(r, buckets, d, rng)?;
            Ok(t.to_dense().transpose().scaled(scale))
        }
        ProjectionKind::CountSketch => Ok(CountSketchMap::new(r, d, rng)?.to_dense().transpose()),
    }
}

/// Two classes of `n` samples in `R^d` living on a random sparse
/// `rank`-dimensional subspace: latent points `y_i * separation * e_1 +
/// N(0, I)` mapped by a `d x rank` basis with about `density * d` nonzeros
/// per column. Low rank keeps the row space small enough that modest
/// projection widths embed it with error below one half.
pub fn sparse_low_rank_blobs(
    n: usize,
    d: usize,
    rank: usize,
    density: f64,
    separation: f64,
    c: f64,
    rng: &mut SeededRng,
) -> Result<SvmProblem> {
    if n == 0 || rank == 0 || rank > d {
        return Err(invalid("need n >= 1 and 1 <= rank <= d"));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(invalid("density must be in (0, 1]"));
    }
    let mut basis = DenseMatrix::zeros(d, rank);
    for j in 0..rank {
        let col = basis.col_mut(j);
        for v in col.iter_mut() {
            if rng.uniform() < density {
                *v = rng.normal();
            }
        }
        if col.iter().all(|&v| v == 0.0) {
            let i = rng.below(d);
            col[i] = 1.0;
        }
    }
    let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let latent = DenseMatrix::from_fn(n, rank, |i, j| {
        let shift = if j == 0 { y[i] * separation } else { 0.0 };
        shift + rng.normal()
    });
    let x = latent.matmul(&basis.transpose())?;
    SvmProblem::new(x, y, c)
}
