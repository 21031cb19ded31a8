use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::matrix::{gaussian_matrix, DenseMatrix, MatrixRef};
use crate::rng::SeededRng;
use crate::sketch::{gaussian_apply, CountGaussTransform};

/// Column indices selected by a random-projection extractor.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnchorSet {
    /// Distinct argmax columns, ascending.
    pub i_max: Vec<usize>,
    /// Distinct argmin columns, ascending.
    pub i_min: Vec<usize>,
    /// `i_max` union `i_min`, ascending.
    pub union: Vec<usize>,
    /// Per column: how many projection rows selected it (as max or min).
    pub hits: Vec<usize>,
}

impl AnchorSet {
    /// Union ordered by selection count, most selected first; ties by index.
    pub fn by_frequency(&self) -> Vec<usize> {
        let mut u = self.union.clone();
        u.sort_by(|&a, &b| self.hits[b].cmp(&self.hits[a]).then(a.cmp(&b)));
        u
    }

    pub fn contains_all(&self, anchors: &[usize]) -> bool {
        anchors.iter().all(|a| self.union.binary_search(a).is_ok())
    }

    pub fn subset_of(&self, anchors: &[usize]) -> bool {
        self.union.iter().all(|u| anchors.contains(u))
    }
}

/// Row-wise argmax and argmin of `z` (`m x n`); ties go to the lowest column.
pub fn anchors_from_projection(z: &DenseMatrix) -> AnchorSet {
    let (m, n) = z.shape();
    let mut hits = vec![0usize; n];
    let mut i_max = BTreeSet::new();
    let mut i_min = BTreeSet::new();
    if n > 0 {
        for r in 0..m {
            let (mut hi, mut lo) = (0usize, 0usize);
            let (mut vhi, mut vlo) = (z[(r, 0)], z[(r, 0)]);
            for j in 1..n {
                let v = z[(r, j)];
                if v > vhi {
                    vhi = v;
                    hi = j;
                }
                if v < vlo {
                    vlo = v;
                    lo = j;
                }
            }
            hits[hi] += 1;
            hits[lo] += 1;
            i_max.insert(hi);
            i_min.insert(lo);
        }
    }
    let union = i_max.union(&i_min).copied().collect();
    AnchorSet {
        i_max: i_max.into_iter().collect(),
        i_min: i_min.into_iter().collect(),
        union,
        hits,
    }
}

/// CountGauss anchor extraction: `Z = G * (S * X)` with a fresh `m x B`
/// Gaussian and `B x d` CountSketch, then row-wise argmax/argmin.
///
/// `buckets = None` uses `B = 5m`.
pub fn cg_nmf<'a>(
    x: impl Into<MatrixRef<'a>>,
    m: usize,
    buckets: Option<usize>,
    rng: &mut SeededRng,
) -> Result<AnchorSet> {
    let x = x.into();
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let t = CountGaussTransform::new(m, buckets, x.rows(), rng)?;
    Ok(anchors_from_projection(&t.apply_ref(x)?))
}

/// Gaussian-projection anchor extraction: `Z = G~ * X` with `G~` an `m x d`
/// i.i.d. standard normal matrix.
pub fn gp_nmf<'a>(x: impl Into<MatrixRef<'a>>, m: usize, rng: &mut SeededRng) -> Result<AnchorSet> {
    let x = x.into();
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let g = gaussian_matrix(m, x.rows(), rng)?;
    let z = match x {
        MatrixRef::Dense(d) => g.matmul(d)?,
        MatrixRef::Sparse(s) => gaussian_apply(&g, s)?,
    };
    Ok(anchors_from_projection(&z))
}
