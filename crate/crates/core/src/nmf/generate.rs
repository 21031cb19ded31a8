//! Synthetic separable instances.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::matrix::DenseMatrix;
use crate::rng::SeededRng;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeparableInstance {
    /// `d x n` data matrix.
    pub x: DenseMatrix,
    /// Anchor column indices, ascending.
    pub anchors: Vec<usize>,
    /// `k x n` mixing weights with `X = X_I H` when noiseless.
    pub h_true: Option<DenseMatrix>,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// `X = U V^T` with `U` (`d x k`) uniform on `[0, 1]` and `V` (`n x k`)
/// holding the identity in its first `k` rows and uniform entries below.
/// Each row of `V` is scaled to unit l1 norm, so every non-anchor column is
/// a convex combination of the anchors `0..k`.
pub fn generate_separable(d: usize, n: usize, k: usize, rng: &mut SeededRng) -> Result<SeparableInstance> {
    if k == 0 || k > d.min(n) {
        return Err(invalid(alloc::format!("need 1 <= k <= min(d, n); got k = {k}, d = {d}, n = {n}")));
    }
    let seed = rng.seed();
    let u = DenseMatrix::from_fn(d, k, |_, _| rng.uniform());
    let mut h = DenseMatrix::zeros(k, n);
    for j in 0..n {
        if j < k {
            h[(j, j)] = 1.0;
            continue;
        }
        for i in 0..k {
            h[(i, j)] = rng.uniform();
        }
        let s: f64 = h.col(j).iter().sum();
        for v in h.col_mut(j) {
            *v /= s;
        }
    }
    let x = u.matmul(&h)?;
    Ok(SeparableInstance {
        x,
        anchors: (0..k).collect(),
        h_true: Some(h),
        noise_sigma: 0.0,
        seed,
    })
}

/// `k` uniform vertices in `[0, 1]^d`, followed by the midpoint of every
/// vertex pair (`k (k - 1) / 2` columns, pairs in lexicographic order), plus
/// `N(0, sigma^2)` noise on every entry.
pub fn generate_noisy_polytope(d: usize, k: usize, sigma: f64, rng: &mut SeededRng) -> Result<SeparableInstance> {
    if k == 0 || d < k {
        return Err(invalid(alloc::format!("need 1 <= k <= d; got k = {k}, d = {d}")));
    }
    if !(sigma >= 0.0) {
        return Err(invalid(alloc::format!("noise level must be nonnegative, got {sigma}")));
    }
    let seed = rng.seed();
    let n = k + k * (k - 1) / 2;
    let u = DenseMatrix::from_fn(d, k, |_, _| rng.uniform());
    let mut h = DenseMatrix::zeros(k, n);
    for i in 0..k {
        h[(i, i)] = 1.0;
    }
    let mut col = k;
    for a in 0..k {
        for b in a + 1..k {
            h[(a, col)] = 0.5;
            h[(b, col)] = 0.5;
            col += 1;
        }
    }
    let mut x = u.matmul(&h)?;
    if sigma > 0.0 {
        for v in x.as_mut_slice() {
            *v += sigma * rng.normal();
        }
    }
    Ok(SeparableInstance {
        x,
        anchors: (0..k).collect(),
        h_true: Some(h),
        noise_sigma: sigma,
        seed,
    })
}
