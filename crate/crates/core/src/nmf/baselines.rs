//! Deterministic anchor-selection baselines.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::matrix::{dot, DenseMatrix};
use crate::nmf::nnls::{nnls_solve, NnlsOptions};

/// Successive projection: repeatedly take the column of largest residual
/// norm, then project every column onto the orthogonal complement of it.
/// Returns indices in selection order. Norms within a relative `1e-12` of
/// each other count as tied, and ties go to the lowest index.
pub fn spa(x: &DenseMatrix, k: usize) -> Result<Vec<usize>> {
    let (d, n) = x.shape();
    if k == 0 || k > d.min(n) {
        return Err(invalid(alloc::format!("SPA needs 1 <= k <= min(d, n) = {}", d.min(n))));
    }
    x.check_finite()?;
    let mut r = x.clone();
    let mut norms: Vec<f64> = (0..n).map(|j| dot(r.col(j), r.col(j))).collect();
    let floor = norms.iter().fold(0.0f64, |m, &v| m.max(v)) * 1e-20;
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best = 0;
        for j in 1..n {
            if norms[j] > norms[best] * (1.0 + 1e-12) {
                best = j;
            }
        }
        if norms[best] <= floor {
            return Err(Error::EarlyExhaustion {
                found: picked,
                requested: k,
            });
        }
        picked.push(best);
        let len = libm::sqrt(norms[best]);
        let u: Vec<f64> = r.col(best).iter().map(|v| v / len).collect();
        #[allow(clippy::needless_range_loop)]
        for j in 0..n {
            let col = r.col_mut(j);
            let p = dot(&u, col);
            for (c, &ui) in col.iter_mut().zip(&u) {
                *c -= p * ui;
            }
            norms[j] = dot(col, col);
        }
        norms[best] = 0.0;
    }
    Ok(picked)
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct XrayResult {
    pub anchors: Vec<usize>,
    /// Set when the residual vanished before `k` anchors were found.
    pub truncated: bool,
}

/// Greedy conical-hull expansion.
///
/// Each step refits `H` over the current anchors by NNLS, takes the residual
/// column `r` of largest norm, and adds the column `x_j` maximizing
/// `<r, x_j> / ||x_j||_1`. Scaling by the l1 norm maps the columns onto a
/// hyperplane section of the cone, whose vertices are exactly the extreme
/// rays, so the maximizer is always an anchor on separable data.
pub fn xray(x: &DenseMatrix, k: usize, opts: NnlsOptions) -> Result<XrayResult> {
    let (_, n) = x.shape();
    if k == 0 || k > n {
        return Err(invalid(alloc::format!("XRAY needs 1 <= k <= n = {n}")));
    }
    x.check_finite()?;
    if let Some(p) = x.as_slice().iter().position(|&v| v < 0.0) {
        return Err(Error::Precondition(alloc::format!(
            "XRAY needs a nonnegative matrix; entry ({}, {}) is negative",
            p % x.rows(),
            p / x.rows()
        )));
    }
    let l1: Vec<f64> = (0..n).map(|j| x.col(j).iter().sum()).collect();
    let scale = x.max_abs();
    let mut anchors: Vec<usize> = Vec::with_capacity(k);
    while anchors.len() < k {
        let residual = if anchors.is_empty() {
            x.clone()
        } else {
            let xa = x.select_columns(&anchors)?;
            let h = nnls_solve(&xa, x, opts)?;
            x.sub(&xa.matmul(&h)?)?
        };
        let mut pick_row = 0;
        let mut pick_norm = -1.0;
        for j in 0..n {
            let v = dot(residual.col(j), residual.col(j));
            if v > pick_norm {
                pick_norm = v;
                pick_row = j;
            }
        }
        if libm::sqrt(pick_norm) <= 1e-10 * scale {
            return Ok(XrayResult { anchors, truncated: true });
        }
        let r = residual.col(pick_row);
        let mut best: Option<(usize, f64)> = None;
        #[allow(clippy::needless_range_loop)]
        for j in 0..n {
            if l1[j] <= 0.0 || anchors.contains(&j) {
                continue;
            }
            let score = dot(r, x.col(j)) / l1[j];
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        match best {
            Some((j, s)) if s > 0.0 => anchors.push(j),
            _ => return Ok(XrayResult { anchors, truncated: true }),
        }
    }
    Ok(XrayResult { anchors, truncated: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmf::generate_separable;
    use crate::rng::SeededRng;
    use alloc::vec;

    fn sorted(mut v: Vec<usize>) -> Vec<usize> {
        v.sort_unstable();
        v
    }

    #[test]
    fn spa_hand_recursion() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        // columns e1, e2 and their normalized midpoint
        let x = DenseMatrix::from_row_major(2, 3, &[1.0, 0.0, h, 0.0, 1.0, h]).unwrap();
        assert_eq!(spa(&x, 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn spa_duplicates_pick_one_representative() {
        let x = DenseMatrix::from_row_major(2, 4, &[1.0, 1.0, 0.0, 0.5, 0.0, 0.0, 1.0, 0.5]).unwrap();
        assert_eq!(spa(&x, 2).unwrap(), vec![0, 2]);
        match spa(&x, 2).and_then(|_| spa(&DenseMatrix::from_row_major(2, 2, &[1.0, 1.0, 0.0, 0.0]).unwrap(), 2)) {
            Err(Error::EarlyExhaustion { found, requested: 2 }) => assert_eq!(found, vec![0]),
            other => panic!("{other:?}"),
        }
        assert!(spa(&x, 3).is_err());
    }

    #[test]
    fn both_recover_separable_anchors() {
        for seed in 0..10 {
            let inst = generate_separable(30, 40, 6, &mut SeededRng::new(seed)).unwrap();
            assert_eq!(sorted(spa(&inst.x, 6).unwrap()), inst.anchors);
            let xr = xray(&inst.x, 6, NnlsOptions::default()).unwrap();
            assert!(!xr.truncated);
            assert_eq!(sorted(xr.anchors), inst.anchors);
        }
    }

    #[test]
    fn xray_first_pick_and_preconditions() {
        let x = DenseMatrix::from_row_major(2, 3, &[0.1, 5.0, 0.2, 0.1, 4.0, 0.3]).unwrap();
        assert_eq!(xray(&x, 1, NnlsOptions::default()).unwrap().anchors, vec![1]);
        let neg = DenseMatrix::from_row_major(1, 2, &[1.0, -1.0]).unwrap();
        assert!(matches!(xray(&neg, 1, NnlsOptions::default()), Err(Error::Precondition(_))));
        // two directions only: the third request finds no residual left
        let x = DenseMatrix::from_row_major(2, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, 0.5]).unwrap();
        let r = xray(&x, 3, NnlsOptions::default()).unwrap();
        assert!(r.truncated);
        assert_eq!(sorted(r.anchors), vec![0, 1]);
    }
}
