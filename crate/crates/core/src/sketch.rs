//! CountSketch, CountGauss (`T = G * S`) and subsampled randomized Hadamard
//! rows.
//!
//! A CountSketch `S` is `B x n` with exactly one `+-1` per column, in a
//! uniformly random row. It is stored as one `(bucket, sign)` pair per input
//! coordinate and never materialized on the hot path: `S * X` costs one
//! signed add per nonzero of `X`. CountGauss applies `S` first and the small
//! `m x B` Gaussian `G` second, so `T` itself is never formed.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Result};
use crate::matrix::{gaussian_matrix, DenseMatrix, MatrixRef, SparseMatrix};
use crate::rng::SeededRng;

/// Bucket count used when none is given: five times the projection dimension.
pub fn default_buckets(m: usize) -> usize {
    5 * m
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CountSketchMap {
    buckets: usize,
    hash: Vec<usize>,
    sign: Vec<f64>,
    seed: u64,
}

impl CountSketchMap {
    /// Draws a `buckets x input_dim` CountSketch.
    ///
    /// Per column: one draw reduced modulo `buckets` for the row, then the
    /// low bit of a second draw for the sign.
    pub fn new(buckets: usize, input_dim: usize, rng: &mut SeededRng) -> Result<Self> {
        if buckets == 0 || input_dim == 0 {
            return Err(invalid(alloc::format!(
                "CountSketch needs B >= 1 and n >= 1 (got B = {buckets}, n = {input_dim})"
            )));
        }
        let seed = rng.seed();
        let mut hash = Vec::with_capacity(input_dim);
        let mut sign = Vec::with_capacity(input_dim);
        for _ in 0..input_dim {
            hash.push(rng.below(buckets));
            sign.push(rng.sign());
        }
        Ok(Self {
            buckets,
            hash,
            sign,
            seed,
        })
    }

    /// Explicit map; used by tests and for replaying a shared description.
    pub fn from_parts(buckets: usize, hash: Vec<usize>, sign: Vec<f64>) -> Result<Self> {
        check_dim("CountSketchMap::from_parts", hash.len(), sign.len())?;
        if buckets == 0 || hash.is_empty() {
            return Err(invalid("CountSketch needs B >= 1 and n >= 1"));
        }
        if let Some(h) = hash.iter().find(|&&h| h >= buckets) {
            return Err(invalid(alloc::format!("bucket {h} out of range for B = {buckets}")));
        }
        if sign.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(invalid("signs must be +1 or -1"));
        }
        Ok(Self {
            buckets,
            hash,
            sign,
            seed: 0,
        })
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn input_dim(&self) -> usize {
        self.hash.len()
    }

    pub fn hash(&self) -> &[usize] {
        &self.hash
    }

    pub fn sign(&self) -> &[f64] {
        &self.sign
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `B x n` dense form. Test and oracle use only.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut s = DenseMatrix::zeros(self.buckets, self.input_dim());
        for (i, (&h, &sg)) in self.hash.iter().zip(&self.sign).enumerate() {
            s[(h, i)] = sg;
        }
        s
    }

    /// `S * X` for sparse `X` (`n x d`), one signed add per stored entry.
    pub fn apply(&self, x: &SparseMatrix) -> Result<DenseMatrix> {
        check_dim("countsketch_apply", self.input_dim(), x.rows())?;
        let mut out = DenseMatrix::try_zeros(self.buckets, x.cols())?;
        let b = self.buckets;
        let data = out.as_mut_slice();
        for i in 0..x.rows() {
            let (h, s) = (self.hash[i], self.sign[i]);
            let (idx, vals) = x.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                data[j * b + h] += s * v;
            }
        }
        Ok(out)
    }

    /// `S * X` for dense `X` (`n x d`).
    pub fn apply_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        check_dim("countsketch_apply", self.input_dim(), x.rows())?;
        let mut out = DenseMatrix::try_zeros(self.buckets, x.cols())?;
        for j in 0..x.cols() {
            let dst = out.col_mut(j);
            for (i, &v) in x.col(j).iter().enumerate() {
                dst[self.hash[i]] += self.sign[i] * v;
            }
        }
        Ok(out)
    }

    pub fn apply_ref(&self, x: MatrixRef<'_>) -> Result<DenseMatrix> {
        match x {
            MatrixRef::Dense(m) => self.apply_dense(m),
            MatrixRef::Sparse(m) => self.apply(m),
        }
    }

    /// `S * v` for a single vector.
    pub fn apply_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim("countsketch_apply", self.input_dim(), v.len())?;
        let mut out = vec![0.0; self.buckets];
        for (i, &x) in v.iter().enumerate() {
            out[self.hash[i]] += self.sign[i] * x;
        }
        Ok(out)
    }
}

/// `T = G * S` with `G` an `m x B` Gaussian matrix and `S` a `B x n`
/// CountSketch.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CountGaussTransform {
    cs: CountSketchMap,
    g: DenseMatrix,
    seed: u64,
}

impl CountGaussTransform {
    /// Draws one seed from `rng`; the sketch uses child stream 0 of that seed
    /// and the Gaussian factor child stream 1. `buckets = None` means `5 * m`.
    pub fn new(m: usize, buckets: Option<usize>, n: usize, rng: &mut SeededRng) -> Result<Self> {
        if m == 0 {
            return Err(invalid("CountGauss needs m >= 1"));
        }
        let buckets = buckets.unwrap_or_else(|| default_buckets(m));
        let seed = rng.next_seed();
        let base = SeededRng::new(seed);
        let cs = CountSketchMap::new(buckets, n, &mut base.child(0))?;
        let g = gaussian_matrix(m, buckets, &mut base.child(1))?;
        Ok(Self { cs, g, seed })
    }

    pub fn from_parts(cs: CountSketchMap, g: DenseMatrix) -> Result<Self> {
        check_dim("CountGaussTransform::from_parts", cs.buckets(), g.cols())?;
        Ok(Self { cs, g, seed: 0 })
    }

    pub fn sketch(&self) -> &CountSketchMap {
        &self.cs
    }

    pub fn gaussian(&self) -> &DenseMatrix {
        &self.g
    }

    pub fn m(&self) -> usize {
        self.g.rows()
    }

    pub fn buckets(&self) -> usize {
        self.cs.buckets()
    }

    pub fn input_dim(&self) -> usize {
        self.cs.input_dim()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `G * (S * X)`.
    pub fn apply(&self, x: &SparseMatrix) -> Result<DenseMatrix> {
        self.g.matmul(&self.cs.apply(x)?)
    }

    pub fn apply_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.g.matmul(&self.cs.apply_dense(x)?)
    }

    pub fn apply_ref(&self, x: MatrixRef<'_>) -> Result<DenseMatrix> {
        self.g.matmul(&self.cs.apply_ref(x)?)
    }

    /// The `m x n` matrix `T`. Only for oracles and small projections.
    pub fn to_dense(&self) -> DenseMatrix {
        self.g.matmul(&self.cs.to_dense()).expect("shapes agree by construction")
    }
}

/// Dense Gaussian `G * X` for sparse `X`: for each stored `X[i][j]`, adds
/// `X[i][j] * G[:, i]` into output column `j`. Costs `O(nnz(X) * m)`.
pub fn gaussian_apply(g: &DenseMatrix, x: &SparseMatrix) -> Result<DenseMatrix> {
    check_dim("gaussian_apply", g.cols(), x.rows())?;
    let m = g.rows();
    let mut out = DenseMatrix::try_zeros(m, x.cols())?;
    let data = out.as_mut_slice();
    for i in 0..x.rows() {
        let gi = g.col(i);
        let (idx, vals) = x.row(i);
        for (&j, &v) in idx.iter().zip(vals) {
            for (o, &a) in data[j * m..(j + 1) * m].iter_mut().zip(gi) {
                *o += a * v;
            }
        }
    }
    Ok(out)
}

/// Rows of a subsampled randomized Hadamard transform `P * H * D`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SrhtSpec {
    pub d: usize,
    pub selected_rows: Vec<usize>,
    pub signs: Vec<f64>,
    pub seed: u64,
}

impl SrhtSpec {
    /// Picks `m` distinct Hadamard rows uniformly and `d` random signs.
    pub fn new(m: usize, d: usize, rng: &mut SeededRng) -> Result<Self> {
        check_power_of_two(d)?;
        if m == 0 || m > d {
            return Err(invalid(alloc::format!("SRHT needs 1 <= m <= d (m = {m}, d = {d})")));
        }
        let seed = rng.seed();
        let mut rows: Vec<usize> = rand::seq::index::sample(rng, d, m).into_vec();
        rows.sort_unstable();
        let signs = (0..d).map(|_| rng.sign()).collect();
        Ok(Self {
            d,
            selected_rows: rows,
            signs,
            seed,
        })
    }

    pub fn m(&self) -> usize {
        self.selected_rows.len()
    }

    /// Materializes the `m x d` matrix with entries `H[r][c] * D[c] / sqrt(d)`.
    pub fn rows(&self) -> Result<DenseMatrix> {
        check_power_of_two(self.d)?;
        check_dim("srht signs", self.d, self.signs.len())?;
        if let Some(&r) = self.selected_rows.iter().find(|&&r| r >= self.d) {
            return Err(invalid(alloc::format!("selected row {r} out of range")));
        }
        let scale = 1.0 / libm::sqrt(self.d as f64);
        Ok(DenseMatrix::from_fn(self.m(), self.d, |i, c| {
            hadamard_entry(self.selected_rows[i], c) * self.signs[c] * scale
        }))
    }
}

/// Entry of the Sylvester-ordered Hadamard matrix: `(-1)^popcount(r & c)`.
pub fn hadamard_entry(r: usize, c: usize) -> f64 {
    if (r & c).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn check_power_of_two(d: usize) -> Result<()> {
    if d.is_power_of_two() {
        Ok(())
    } else {
        Err(invalid(alloc::format!("dimension {d} is not a power of two")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormal_basis;
    use proptest::prelude::*;

    fn triple_loop(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|p| a[(i, p)] * b[(p, j)]).sum()
        })
    }

    #[test]
    fn single_bucket_hashes_to_zero() {
        let s = CountSketchMap::new(1, 50, &mut SeededRng::new(3)).unwrap();
        assert!(s.hash().iter().all(|&h| h == 0));
        assert!(CountSketchMap::new(0, 5, &mut SeededRng::new(3)).is_err());
        assert!(CountSketchMap::new(5, 0, &mut SeededRng::new(3)).is_err());
    }

    #[test]
    fn sketch_is_deterministic() {
        let a = CountSketchMap::new(16, 100, &mut SeededRng::new(8)).unwrap();
        let b = CountSketchMap::new(16, 100, &mut SeededRng::new(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn materialized_sketch_structure() {
        let s = CountSketchMap::new(7, 40, &mut SeededRng::new(1)).unwrap().to_dense();
        let sts = s.gram();
        for i in 0..40 {
            assert_eq!(sts[(i, i)], 1.0);
            assert_eq!(s.col(i).iter().filter(|v| **v != 0.0).count(), 1);
        }
        assert_eq!(sts.trace(), 40.0);
    }

    #[test]
    fn bucket_histogram_is_uniform() {
        // chi-square with 63 dof; the 1e-6 upper quantile is about 135.
        let s = CountSketchMap::new(64, 100_000, &mut SeededRng::new(12)).unwrap();
        let mut counts = [0usize; 64];
        for &h in s.hash() {
            counts[h] += 1;
        }
        let expected = 100_000.0 / 64.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 135.0, "chi2 = {chi2}");
        let plus = s.sign().iter().filter(|&&v| v > 0.0).count() as f64;
        assert!((plus - 50_000.0).abs() < 5.0 * libm::sqrt(25_000.0));
    }

    #[test]
    fn hand_worked_application() {
        let s = CountSketchMap::from_parts(2, vec![0, 1, 0], vec![1.0, -1.0, 1.0]).unwrap();
        let x = SparseMatrix::from_triplets(3, 1, &[(0, 0, 1.0), (1, 0, 2.0), (2, 0, 3.0)]).unwrap();
        assert_eq!(s.apply(&x).unwrap().as_slice(), &[4.0, -2.0]);
        assert_eq!(s.apply_vec(&[1.0, 2.0, 3.0]).unwrap(), vec![4.0, -2.0]);
        assert_eq!(s.apply(&SparseMatrix::zeros(3, 2)).unwrap(), DenseMatrix::zeros(2, 2));
        assert!(s.apply(&SparseMatrix::zeros(4, 2)).is_err());
    }

    #[test]
    fn sparse_apply_equals_dense_oracle() {
        let mut rng = SeededRng::new(30);
        let s = CountSketchMap::new(5, 30, &mut rng).unwrap();
        let x = DenseMatrix::from_fn(30, 7, |_, _| {
            if rng.uniform() < 0.3 { (rng.below(11) as f64) - 5.0 } else { 0.0 }
        });
        let expect = triple_loop(&s.to_dense(), &x);
        assert_eq!(s.apply(&SparseMatrix::from_dense(&x)).unwrap(), expect);
        assert_eq!(s.apply_dense(&x).unwrap(), expect);
    }

    #[test]
    fn injective_hash_is_signed_permutation() {
        let mut rng = SeededRng::new(2);
        let n = 6;
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let signs: Vec<f64> = (0..n).map(|_| rng.sign()).collect();
        let s = CountSketchMap::from_parts(n, perm.clone(), signs.clone()).unwrap();
        let st = s.to_dense();
        assert_eq!(st.gram(), DenseMatrix::identity(n));
        let x = DenseMatrix::from_fn(n, 3, |i, j| (i * 3 + j) as f64);
        let y = s.apply_dense(&x).unwrap();
        for i in 0..n {
            for j in 0..3 {
                assert_eq!(y[(perm[i], j)], signs[i] * x[(i, j)]);
            }
        }
    }

    #[test]
    fn norm_preserved_in_expectation() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin() + 0.2).collect();
        let target: f64 = x.iter().map(|v| v * v).sum();
        let master = SeededRng::new(99);
        let vals: Vec<f64> = (0..10_000)
            .map(|t| {
                let s = CountSketchMap::new(8, 20, &mut master.child(t)).unwrap();
                s.apply_vec(&x).unwrap().iter().map(|v| v * v).sum()
            })
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = libm::sqrt(vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0));
        assert!((mean - target).abs() <= 3.0 * sd / libm::sqrt(n), "{mean} vs {target}");
    }

    #[test]
    fn countgauss_tiny_and_default_buckets() {
        let t = CountGaussTransform::new(1, Some(1), 1, &mut SeededRng::new(4)).unwrap();
        let dense = t.to_dense();
        assert_eq!(dense.shape(), (1, 1));
        assert_eq!(dense[(0, 0)].abs(), t.gaussian()[(0, 0)].abs());

        let t = CountGaussTransform::new(6, None, 50, &mut SeededRng::new(4)).unwrap();
        assert_eq!(t.buckets(), 30);
        assert_eq!(t.gaussian().shape(), (6, 30));
        let again = CountGaussTransform::new(6, None, 50, &mut SeededRng::new(4)).unwrap();
        assert_eq!(t, again);
        assert!(CountGaussTransform::new(0, None, 5, &mut SeededRng::new(4)).is_err());
    }

    #[test]
    fn countgauss_matches_explicit_composite() {
        let mut rng = SeededRng::new(21);
        let t = CountGaussTransform::new(2, Some(5), 12, &mut rng).unwrap();
        let x = DenseMatrix::from_fn(12, 4, |_, _| if rng.uniform() < 0.5 { rng.normal() } else { 0.0 });
        let got = t.apply(&SparseMatrix::from_dense(&x)).unwrap();
        let expect = triple_loop(&t.to_dense(), &x);
        let rel = got.sub(&expect).unwrap().frobenius_norm() / expect.frobenius_norm();
        assert!(rel <= 1e-8);
        assert_eq!(t.apply(&SparseMatrix::zeros(12, 3)).unwrap(), DenseMatrix::zeros(2, 3));
    }

    #[test]
    fn countgauss_factors_through_orthonormal_basis() {
        let mut rng = SeededRng::new(5);
        let x = DenseMatrix::from_fn(40, 3, |_, _| rng.normal());
        let u = orthonormal_basis(&x, None).unwrap();
        let r = u.t_matmul(&x).unwrap();
        let t = CountGaussTransform::new(4, Some(10), 40, &mut rng).unwrap();
        let lhs = t.apply_dense(&x).unwrap();
        let rhs = t.apply_dense(&u).unwrap().matmul(&r).unwrap();
        assert!(lhs.sub(&rhs).unwrap().frobenius_norm() <= 1e-6 * lhs.frobenius_norm());
    }

    #[test]
    fn gaussian_apply_matches_dense() {
        let mut rng = SeededRng::new(6);
        let g = gaussian_matrix(3, 10, &mut rng).unwrap();
        let x = DenseMatrix::from_fn(10, 4, |_, _| if rng.uniform() < 0.4 { rng.normal() } else { 0.0 });
        let got = gaussian_apply(&g, &SparseMatrix::from_dense(&x)).unwrap();
        let expect = g.matmul(&x).unwrap();
        assert!(got.sub(&expect).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn srht_examples() {
        let spec = SrhtSpec {
            d: 2,
            selected_rows: vec![0],
            signs: vec![1.0, 1.0],
            seed: 0,
        };
        let r = spec.rows().unwrap();
        let h = 1.0 / libm::sqrt(2.0);
        assert!((r[(0, 0)] - h).abs() < 1e-15 && (r[(0, 1)] - h).abs() < 1e-15);

        let full = SrhtSpec::new(4, 4, &mut SeededRng::new(1)).unwrap().rows().unwrap();
        let g = full.transpose().gram();
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - e).abs() < 1e-14);
            }
        }

        let r8 = SrhtSpec::new(5, 8, &mut SeededRng::new(2)).unwrap().rows().unwrap();
        let q = 1.0 / libm::sqrt(8.0);
        assert!(r8.as_slice().iter().all(|v| (v.abs() - q).abs() < 1e-15));
        assert!(SrhtSpec::new(2, 6, &mut SeededRng::new(2)).is_err());
        assert!(SrhtSpec::new(9, 8, &mut SeededRng::new(2)).is_err());
    }

    proptest! {
        #[test]
        fn countsketch_is_linear(seed in any::<u64>(), alpha in -5i32..5) {
            let mut rng = SeededRng::new(seed);
            let s = CountSketchMap::new(4, 15, &mut rng).unwrap();
            let x = DenseMatrix::from_fn(15, 3, |_, _| rng.below(9) as f64 - 4.0);
            let y = DenseMatrix::from_fn(15, 3, |_, _| rng.below(9) as f64 - 4.0);
            let a = alpha as f64;
            let lhs = s.apply_dense(&x.scaled(a).add(&y).unwrap()).unwrap();
            let rhs = s.apply_dense(&x).unwrap().scaled(a).add(&s.apply_dense(&y).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);

            let xr = DenseMatrix::from_fn(15, 3, |_, _| rng.normal());
            let yr = DenseMatrix::from_fn(15, 3, |_, _| rng.normal());
            let ar = rng.normal();
            let lhs = s.apply_dense(&xr.scaled(ar).add(&yr).unwrap()).unwrap();
            let rhs = s.apply_dense(&xr).unwrap().scaled(ar).add(&s.apply_dense(&yr).unwrap()).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * (1.0 + lhs.max_abs()));
        }
    }
}
