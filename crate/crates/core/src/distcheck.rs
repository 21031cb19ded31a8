//! Checks on how closely `G * S * U` imitates a Gaussian projection `G~ * U`.
//!
//! With `U` an `n x d` matrix of orthonormal columns and `S` a CountSketch,
//! everything is driven by `M = U^T S^T S U`: conditional on `S`, each row of
//! `G * S * U` is `N(0, M)`, while rows of `G~ * U` are `N(0, I)`. This module
//! estimates moments of `I - M` by Monte Carlo, evaluates the closed-form KL
//! divergence and Pinsker bound between those Gaussians, sizes the bucket
//! count `B`, and compares projected rows from both constructions directly.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{cholesky, cholesky_solve, orthonormality_defect, symmetric_spectral_norm};
use crate::matrix::{dot, DenseMatrix};
use crate::rng::{mix64, SeededRng};
use crate::sketch::CountSketchMap;
use crate::stats::{energy_permutation_test, mean_and_covariance, EnergyTest, Summary};

/// Tolerance on `||U^T U - I||_F` accepted as orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GramDeviation {
    pub m: DenseMatrix,
    /// `||I - M||_F^2`
    pub fro_sq: f64,
    /// `Tr(I - M)`
    pub trace_dev: f64,
    /// `||I - M||_2`
    pub op_norm: f64,
}

fn check_orthonormal(u: &DenseMatrix) -> Result<()> {
    let deviation = orthonormality_defect(u);
    if deviation <= ORTHONORMAL_TOL {
        Ok(())
    } else {
        Err(Error::NotOrthonormal {
            deviation,
            tolerance: ORTHONORMAL_TOL,
        })
    }
}

/// `M = (S U)^T (S U)` and its deviation from the identity.
pub fn gram_deviation(s: &CountSketchMap, u: &DenseMatrix) -> Result<GramDeviation> {
    check_orthonormal(u)?;
    gram_deviation_unchecked(s, u)
}

fn gram_deviation_unchecked(s: &CountSketchMap, u: &DenseMatrix) -> Result<GramDeviation> {
    let su = s.apply_dense(u)?;
    let m = su.gram();
    let dev = DenseMatrix::identity(m.rows()).sub(&m)?;
    Ok(GramDeviation {
        fro_sq: dev.as_slice().iter().map(|v| v * v).sum(),
        trace_dev: dev.trace(),
        op_norm: symmetric_spectral_norm(&dev)?,
        m,
    })
}

/// Whether `x` passes the checkable part of the typical-vector conditions:
/// `||x||_inf <= c sqrt(ln n)` and `|(U x)_a| <= c sqrt(ln n) ||U_a||_2` for
/// every row `a` of `U`.
pub fn typical_vector_surrogate(u: &DenseMatrix, x: &[f64], c: f64) -> Result<bool> {
    check_dim("typical_vector_surrogate", u.cols(), x.len())?;
    let radius = c * libm::sqrt(libm::log(u.rows() as f64));
    if x.iter().any(|v| v.abs() > radius) {
        return Ok(false);
    }
    let ux = u.mul_vec(x)?;
    for (a, uxa) in ux.iter().enumerate() {
        let row_norm = libm::sqrt(u.row(a).iter().map(|v| v * v).sum());
        if uxa.abs() > radius * row_norm * (1.0 + 1e-12) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Per-trial moment quantities of `I - M`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialMoments {
    pub fro_sq: f64,
    pub trace_dev: f64,
    /// `x^T (I-M)^2 x`, when a test vector is given.
    pub quad_sq: Option<f64>,
    /// `x^T (I-M) x`, when a test vector is given.
    pub quad: Option<f64>,
}

/// One Monte-Carlo trial with a sketch drawn from `seed`.
pub fn moment_trial(u: &DenseMatrix, x: Option<&[f64]>, buckets: usize, seed: u64) -> Result<TrialMoments> {
    let s = CountSketchMap::new(buckets, u.rows(), &mut SeededRng::new(seed))?;
    let g = gram_deviation_unchecked(&s, u)?;
    let (quad_sq, quad) = match x {
        None => (None, None),
        Some(x) => {
            let dev = DenseMatrix::identity(g.m.rows()).sub(&g.m)?;
            let dx = dev.mul_vec(x)?;
            (Some(dot(&dx, &dx)), Some(dot(x, &dx)))
        }
    };
    Ok(TrialMoments {
        fro_sq: g.fro_sq,
        trace_dev: g.trace_dev,
        quad_sq,
        quad,
    })
}

/// Seed of trial `t` under master seed `master`.
pub fn trial_seed(master: u64, t: usize) -> u64 {
    mix64(master, t as u64)
}

/// Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl From<Summary> for Estimate {
    fn from(s: Summary) -> Self {
        Estimate {
            mean: s.mean,
            stderr: s.stderr,
        }
    }
}

/// Monte-Carlo means of the five moment quantities of `I - M`:
///
/// 1. `||I - M||_F^2`, bounded by `2 d^2 / B`
/// 2. `x^T (I-M)^2 x`
/// 3. `(x^T (I-M) x)^2`
/// 4. `(x^T (I-M) x) Tr(I - M)`
/// 5. `(Tr(I - M))^2`, bounded by `d^2 / B`
///
/// Items 2-4 only carry order-of-magnitude bounds, so they are reported with
/// the implied constant `est * B / (d^2 ln^p n)` (`p = 2` for items 2 and 3,
/// `p = 1` for item 4) rather than a pass flag.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentReport {
    pub n: usize,
    pub d: usize,
    pub buckets: usize,
    pub trials: usize,
    pub est1: Estimate,
    pub est2: Option<Estimate>,
    pub est3: Option<Estimate>,
    pub est4: Option<Estimate>,
    pub est5: Estimate,
    pub bound1: f64,
    pub bound5: f64,
    pub pass1: bool,
    pub pass5: bool,
    pub implied2: Option<f64>,
    pub implied3: Option<f64>,
    pub implied4: Option<f64>,
    /// Mean of `Tr(I - M)`, which has expectation zero.
    pub trace_mean: Estimate,
    pub trace_zero_mean: bool,
}

pub const MIN_TRIALS: usize = 100;

/// `est <= bound * (1 + 3 * stderr / est)`.
fn within_bound(e: Estimate, bound: f64) -> bool {
    if e.mean <= 0.0 {
        return true;
    }
    e.mean <= bound * (1.0 + 3.0 * e.stderr / e.mean)
}

impl MomentReport {
    /// Aggregates trials in the order given.
    pub fn from_trials(n: usize, d: usize, buckets: usize, trials: &[TrialMoments]) -> Result<MomentReport> {
        if trials.len() < MIN_TRIALS {
            return Err(invalid(alloc::format!(
                "at least {MIN_TRIALS} trials are needed for standard errors, got {}",
                trials.len()
            )));
        }
        let collect = |f: &dyn Fn(&TrialMoments) -> Option<f64>| -> Option<Estimate> {
            let v: Option<Vec<f64>> = trials.iter().map(f).collect();
            v.map(|v| Summary::of(&v).into())
        };
        let est1: Estimate = collect(&|t| Some(t.fro_sq)).unwrap();
        let est5: Estimate = collect(&|t| Some(t.trace_dev * t.trace_dev)).unwrap();
        let trace_mean: Estimate = collect(&|t| Some(t.trace_dev)).unwrap();
        let est2 = collect(&|t| t.quad_sq);
        let est3 = collect(&|t| t.quad.map(|q| q * q));
        let est4 = collect(&|t| t.quad.map(|q| q * t.trace_dev));

        let dd = (d * d) as f64;
        let b = buckets as f64;
        let ln_n = libm::log(n as f64);
        let implied = |e: Option<Estimate>, power: i32| {
            e.and_then(|e| (ln_n > 0.0).then(|| e.mean * b / (dd * ln_n.powi(power))))
        };
        let bound1 = 2.0 * dd / b;
        let bound5 = dd / b;
        Ok(MomentReport {
            n,
            d,
            buckets,
            trials: trials.len(),
            pass1: within_bound(est1, bound1),
            pass5: within_bound(est5, bound5),
            implied2: implied(est2, 2),
            implied3: implied(est3, 2),
            implied4: implied(est4, 1),
            trace_zero_mean: trace_mean.mean.abs() <= 4.0 * trace_mean.stderr,
            est1,
            est2,
            est3,
            est4,
            est5,
            bound1,
            bound5,
            trace_mean,
        })
    }
}

/// Validates moment-suite inputs: orthonormal `U`, enough trials, `B >= 1`,
/// and a typical test vector when one is given.
pub fn check_moment_inputs(
    u: &DenseMatrix,
    x: Option<&[f64]>,
    buckets: usize,
    trials: usize,
    typical_c: f64,
) -> Result<()> {
    check_orthonormal(u)?;
    if buckets == 0 {
        return Err(invalid("B must be at least 1"));
    }
    if trials < MIN_TRIALS {
        return Err(invalid(alloc::format!(
            "at least {MIN_TRIALS} trials are needed for standard errors, got {trials}"
        )));
    }
    if let Some(x) = x {
        if !typical_vector_surrogate(u, x, typical_c)? {
            return Err(Error::Precondition(alloc::format!(
                "test vector exceeds the typical-vector radius {typical_c} * sqrt(ln n)"
            )));
        }
    }
    Ok(())
}

/// Sequential Monte-Carlo moment suite; trial `t` uses
/// [`trial_seed`]`(rng.seed(), t)`.
pub fn moment_suite(
    u: &DenseMatrix,
    x: Option<&[f64]>,
    buckets: usize,
    trials: usize,
    rng: &SeededRng,
    typical_c: f64,
) -> Result<MomentReport> {
    check_moment_inputs(u, x, buckets, trials, typical_c)?;
    let master = rng.seed();
    let per_trial = (0..trials)
        .map(|t| moment_trial(u, x, buckets, trial_seed(master, t)))
        .collect::<Result<Vec<_>>>()?;
    MomentReport::from_trials(u.rows(), u.cols(), buckets, &per_trial)
}

/// `D_KL(N(0, I) || N(0, Sigma)) = 1/2 Tr(Sigma^-1 - I) + 1/2 ln det Sigma`,
/// computed from the Cholesky factor of `Sigma`.
pub fn kl_gaussian_vs_identity(sigma: &DenseMatrix) -> Result<f64> {
    let d = sigma.rows();
    check_dim("kl_gaussian_vs_identity", d, sigma.cols())?;
    let scale = sigma.max_abs().max(1.0);
    for j in 0..d {
        for i in 0..j {
            if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-12 * scale {
                return Err(invalid("covariance is not symmetric"));
            }
        }
    }
    let l = cholesky(sigma)?;
    let ln_det: f64 = (0..d).map(|i| 2.0 * libm::log(l[(i, i)])).sum();
    let mut trace_inv = 0.0;
    let mut e = vec![0.0; d];
    for i in 0..d {
        e[i] = 1.0;
        trace_inv += cholesky_solve(&l, &e)[i];
        e[i] = 0.0;
    }
    Ok(0.5 * (trace_inv - d as f64) + 0.5 * ln_det)
}

/// Pinsker's bound `sqrt(kl / 2)` on total variation distance.
///
/// Inputs in `[-1e-10, 0)` are rounding noise from a zero divergence and
/// map to 0.
pub fn pinsker_tv_bound(kl: f64) -> Result<f64> {
    if kl.is_nan() || kl < -1e-10 {
        return Err(invalid(alloc::format!("KL divergence must be nonnegative, got {kl}")));
    }
    Ok(libm::sqrt(kl.max(0.0) / 2.0))
}

fn check_delta_c(delta: f64, c: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(alloc::format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(c > 0.0) {
        return Err(invalid(alloc::format!("C must be positive, got {c}")));
    }
    Ok(())
}

/// `C d^2 m / delta^2` before rounding.
pub fn bound_b_simple_real(d: usize, m: usize, delta: f64, c: f64) -> Result<f64> {
    check_delta_c(delta, c)?;
    Ok(c * (d * d) as f64 * m as f64 / (delta * delta))
}

/// Smallest admissible bucket count `ceil(C d^2 m / delta^2)`.
pub fn bound_b_simple(d: usize, m: usize, delta: f64, c: f64) -> Result<u64> {
    Ok(libm::ceil(bound_b_simple_real(d, m, delta, c)?) as u64)
}

/// `C (ln n)^4 d^2 sqrt(m) / delta` before rounding, given `ln n` directly.
pub fn bound_b_main_real(ln_n: f64, d: usize, m: usize, delta: f64, c: f64) -> Result<f64> {
    check_delta_c(delta, c)?;
    Ok(c * ln_n.powi(4) * (d * d) as f64 * libm::sqrt(m as f64) / delta)
}

/// Smallest admissible bucket count `ceil(C (ln n)^4 d^2 sqrt(m) / delta)`.
///
/// Only defined for `m <= n^4`; beyond that the sketch is an isometry with
/// high probability and the bound is not meaningful.
pub fn bound_b_main(n: usize, d: usize, m: usize, delta: f64, c: f64) -> Result<u64> {
    let n4 = (n as u128).pow(4);
    if m as u128 > n4 {
        return Err(Error::Precondition(alloc::format!(
            "m = {m} exceeds n^4 = {n4}; the threshold only covers m in [1, n^4]"
        )));
    }
    let real = bound_b_main_real(libm::log(n as f64), d, m, delta, c)?;
    Ok(libm::ceil(real) as u64)
}

/// Result of [`row_distribution_compare`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RowComparison {
    pub samples: usize,
    pub d: usize,
    pub buckets: usize,
    pub rows_per_sketch: usize,
    pub mean_gaussian: Vec<f64>,
    pub mean_countgauss: Vec<f64>,
    pub cov_gaussian: DenseMatrix,
    pub cov_countgauss: DenseMatrix,
    pub max_cov_dev_gaussian: f64,
    pub max_cov_dev_countgauss: f64,
    pub energy_points: usize,
    pub energy: EnergyTest,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowCompareOptions {
    /// Consecutive CountGauss rows sharing one sketch; 1 draws a fresh
    /// sketch for every row.
    pub rows_per_sketch: usize,
    /// Use a collision-free hash (requires `B >= n`).
    pub injective: bool,
    pub permutations: usize,
    /// Points per population used by the energy test.
    pub energy_points: usize,
}

impl Default for RowCompareOptions {
    fn default() -> Self {
        RowCompareOptions {
            rows_per_sketch: 1,
            injective: false,
            permutations: 200,
            energy_points: 500,
        }
    }
}

pub const MIN_COMPARE_SAMPLES: usize = 1000;

/// Draws `samples` rows of `G~ U` and of `G S U` and compares the two
/// populations.
pub fn row_distribution_compare(
    u: &DenseMatrix,
    buckets: usize,
    samples: usize,
    rng: &SeededRng,
    opts: RowCompareOptions,
) -> Result<RowComparison> {
    let (n, d) = u.shape();
    if d == 0 {
        return Err(invalid("row comparison needs d >= 1"));
    }
    if samples < MIN_COMPARE_SAMPLES {
        return Err(invalid(alloc::format!(
            "at least {MIN_COMPARE_SAMPLES} samples are needed, got {samples}"
        )));
    }
    if buckets == 0 || opts.rows_per_sketch == 0 {
        return Err(invalid("B and rows_per_sketch must be at least 1"));
    }
    if opts.injective && buckets < n {
        return Err(invalid(alloc::format!("an injective hash needs B >= n ({buckets} < {n})")));
    }
    check_orthonormal(u)?;

    let mut gauss_rng = rng.child(0);
    let gaussian: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let g: Vec<f64> = (0..n).map(|_| gauss_rng.normal()).collect();
            u.t_mul_vec(&g)
        })
        .collect::<Result<_>>()?;

    let sketch_master = rng.child(1);
    let mut row_rng = rng.child(2);
    let mut countgauss = Vec::with_capacity(samples);
    let mut su = DenseMatrix::zeros(0, 0);
    for t in 0..samples {
        if t % opts.rows_per_sketch == 0 {
            let mut srng = sketch_master.child((t / opts.rows_per_sketch) as u64);
            let s = if opts.injective {
                injective_sketch(buckets, n, &mut srng)?
            } else {
                CountSketchMap::new(buckets, n, &mut srng)?
            };
            su = s.apply_dense(u)?;
        }
        let g: Vec<f64> = (0..buckets).map(|_| row_rng.normal()).collect();
        countgauss.push(su.t_mul_vec(&g)?);
    }

    let (mean_gaussian, cov_gaussian) = mean_and_covariance(&gaussian);
    let (mean_countgauss, cov_countgauss) = mean_and_covariance(&countgauss);
    let id = DenseMatrix::identity(d);
    let max_cov_dev_gaussian = cov_gaussian.sub(&id)?.max_abs();
    let max_cov_dev_countgauss = cov_countgauss.sub(&id)?.max_abs();

    let k = opts.energy_points.min(samples);
    let energy = energy_permutation_test(&gaussian[..k], &countgauss[..k], opts.permutations, &mut rng.child(3));
    Ok(RowComparison {
        samples,
        d,
        buckets,
        rows_per_sketch: opts.rows_per_sketch,
        mean_gaussian,
        mean_countgauss,
        cov_gaussian,
        cov_countgauss,
        max_cov_dev_gaussian,
        max_cov_dev_countgauss,
        energy_points: k,
        energy,
    })
}

/// CountSketch whose `n` columns land in distinct buckets.
pub fn injective_sketch(buckets: usize, n: usize, rng: &mut SeededRng) -> Result<CountSketchMap> {
    if buckets < n {
        return Err(invalid("injective sketch needs B >= n"));
    }
    let hash = rand::seq::index::sample(rng, buckets, n).into_vec();
    let sign = (0..n).map(|_| rng.sign()).collect();
    CountSketchMap::from_parts(buckets, hash, sign)
}

/// Exact expectations over every `(hash, sign)` assignment, for tiny `n` and
/// `B`. Each assignment materializes `S` densely and forms `M` by explicit
/// products, independently of the sketch-application kernels.
pub mod oracle {
    use super::*;

    #[derive(Clone, Copy, Debug, PartialEq)]
    pub struct ExactMoments {
        pub fro_sq: f64,
        pub trace_sq: f64,
        pub trace: f64,
        pub outcomes: usize,
    }

    pub fn exhaustive_moments(u: &DenseMatrix, buckets: usize) -> Result<ExactMoments> {
        let (n, d) = u.shape();
        let outcomes = (2 * buckets).checked_pow(n as u32).filter(|&c| c <= 1 << 22).ok_or_else(|| {
            invalid("exhaustive enumeration is limited to (2B)^n <= 2^22 outcomes".to_string())
        })?;
        let (mut fro, mut tr2, mut tr) = (0.0, 0.0, 0.0);
        for code in 0..outcomes {
            let mut c = code;
            let mut s = DenseMatrix::zeros(buckets, n);
            for i in 0..n {
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                c /= 2;
                let h = c % buckets;
                c /= buckets;
                s[(h, i)] = sign;
            }
            let su = DenseMatrix::from_fn(buckets, d, |b, j| (0..n).map(|i| s[(b, i)] * u[(i, j)]).sum());
            let m = DenseMatrix::from_fn(d, d, |i, j| (0..buckets).map(|b| su[(b, i)] * su[(b, j)]).sum());
            let mut f = 0.0;
            let mut t = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let v = if i == j { 1.0 } else { 0.0 } - m[(i, j)];
                    f += v * v;
                }
                t += 1.0 - m[(i, i)];
            }
            fro += f;
            tr2 += t * t;
            tr += t;
        }
        let k = outcomes as f64;
        Ok(ExactMoments {
            fro_sq: fro / k,
            trace_sq: tr2 / k,
            trace: tr / k,
            outcomes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormal_basis;

    fn random_orthonormal(n: usize, d: usize, seed: u64) -> DenseMatrix {
        let mut rng = SeededRng::new(seed);
        let x = DenseMatrix::from_fn(n, d, |_, _| rng.normal());
        orthonormal_basis(&x, None).unwrap()
    }

    /// Gauss-Hermite-free quadrature: composite Simpson on [-L, L].
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
        let h = (hi - lo) / steps as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..steps {
            let x = lo + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    fn ln_normal_pdf(x: f64, var: f64) -> f64 {
        -0.5 * x * x / var - 0.5 * libm::log(2.0 * core::f64::consts::PI * var)
    }

    /// Integral of p ln(p/q) with p = N(0,1), q = N(0, var), one dimension.
    fn kl_quadrature_1d(var: f64) -> f64 {
        simpson(
            |x| {
                let lp = ln_normal_pdf(x, 1.0);
                libm::exp(lp) * (lp - ln_normal_pdf(x, var))
            },
            -12.0,
            12.0,
            4000,
        )
    }

    #[test]
    fn injective_hash_gives_identity_gram() {
        let u = random_orthonormal(10, 3, 1);
        let s = injective_sketch(12, 10, &mut SeededRng::new(3)).unwrap();
        let g = gram_deviation(&s, &u).unwrap();
        assert!(g.fro_sq < 1e-24);
        assert!(g.trace_dev.abs() < 1e-12);
        assert!(g.op_norm < 1e-12);
    }

    #[test]
    fn gram_deviation_matches_dense_oracle() {
        let s = CountSketchMap::from_parts(2, vec![0, 0, 1, 1], vec![1.0, 1.0, 1.0, -1.0]).unwrap();
        let u = DenseMatrix::from_row_major(4, 2, &[0.5, 0.5, 0.5, -0.5, 0.5, 0.5, 0.5, -0.5]).unwrap();
        let g = gram_deviation(&s, &u).unwrap();
        let sd = s.to_dense();
        let su = DenseMatrix::from_fn(2, 2, |b, j| (0..4).map(|i| sd[(b, i)] * u[(i, j)]).sum());
        let m = DenseMatrix::from_fn(2, 2, |i, j| (0..2).map(|b| su[(b, i)] * su[(b, j)]).sum());
        assert_eq!(g.m, m);
        let expect_fro: f64 = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| {
                let v = if i == j { 1.0 } else { 0.0 } - m[(i, j)];
                v * v
            })
            .sum();
        assert!((g.fro_sq - expect_fro).abs() < 1e-15);
        assert!((g.trace_dev - (2.0 - m.trace())).abs() < 1e-15);
    }

    #[test]
    fn non_orthonormal_input_is_rejected() {
        let s = CountSketchMap::new(4, 5, &mut SeededRng::new(1)).unwrap();
        let u = DenseMatrix::from_fn(5, 2, |i, j| (i + j) as f64);
        assert!(matches!(gram_deviation(&s, &u), Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn frobenius_deviation_never_exceeds_4n3() {
        for seed in 0..200 {
            let n = 2 + (seed as usize % 7);
            let d = 1 + (seed as usize % n);
            let u = random_orthonormal(n, d, seed);
            let s = CountSketchMap::new(1 + seed as usize % 3, n, &mut SeededRng::new(seed)).unwrap();
            let g = gram_deviation(&s, &u).unwrap();
            assert!(g.fro_sq <= 4.0 * (n * n * n) as f64);
            let ev = crate::linalg::symmetric_eigenvalues(&g.m).unwrap();
            assert!(ev[0] >= -1e-10);
        }
    }

    #[test]
    fn frobenius_mean_within_bound_over_2000_seeds() {
        let u = random_orthonormal(64, 4, 5);
        let r = moment_suite(&u, None, 32, 2000, &SeededRng::new(17), 1.0).unwrap();
        assert!(r.est1.mean <= 2.0 * 16.0 / 32.0 + 3.0 * r.est1.stderr);
        assert!(r.pass1);
        assert!(r.est2.is_none() && r.implied2.is_none());
    }

    #[test]
    fn trace_is_zero_mean_and_fifth_moment_bounded() {
        let u = random_orthonormal(64, 4, 6);
        let r = moment_suite(&u, None, 256, 5000, &SeededRng::new(3), 1.0).unwrap();
        assert!(r.trace_zero_mean, "{:?}", r.trace_mean);
        assert!(r.est5.mean <= 16.0 / 256.0 + r.est5.stderr, "{:?}", r.est5);
        assert!(r.pass5);
    }

    #[test]
    fn test_vector_items_reported_with_constants() {
        let u = random_orthonormal(64, 4, 7);
        let x = [0.5, 0.5, 0.5, 0.5];
        let r = moment_suite(&u, Some(&x), 128, 500, &SeededRng::new(8), 2.0).unwrap();
        assert!(r.est2.unwrap().mean >= 0.0 && r.est3.unwrap().mean >= 0.0);
        assert!(r.implied2.unwrap().is_finite() && r.implied4.unwrap().is_finite());
        let far = [100.0, 0.0, 0.0, 0.0];
        assert!(matches!(
            moment_suite(&u, Some(&far), 128, 500, &SeededRng::new(8), 1.0),
            Err(Error::Precondition(_))
        ));
        assert!(moment_suite(&u, None, 128, 99, &SeededRng::new(8), 1.0).is_err());
    }

    #[test]
    fn exhaustive_small_case_agrees_with_monte_carlo() {
        let u = DenseMatrix::from_col_major(3, 1, vec![1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]).unwrap();
        let exact = oracle::exhaustive_moments(&u, 2).unwrap();
        assert_eq!(exact.outcomes, 64);
        assert!(exact.trace.abs() < 1e-15);
        let r = moment_suite(&u, None, 2, 20_000, &SeededRng::new(1), 1.0).unwrap();
        assert!((r.est1.mean - exact.fro_sq).abs() <= 3.0 * r.est1.stderr);
        assert!((r.est5.mean - exact.trace_sq).abs() <= 3.0 * r.est5.stderr);
    }

    #[test]
    fn kl_examples() {
        assert!(kl_gaussian_vs_identity(&DenseMatrix::identity(3)).unwrap().abs() < 1e-15);
        let two = DenseMatrix::from_col_major(1, 1, vec![2.0]).unwrap();
        let kl = kl_gaussian_vs_identity(&two).unwrap();
        assert!((kl - kl_quadrature_1d(2.0)).abs() < 1e-6);
        assert!((kl - 0.096574).abs() < 1e-6);
        let diag = DenseMatrix::from_row_major(2, 2, &[0.5, 0.0, 0.0, 2.0]).unwrap();
        let kl2 = kl_gaussian_vs_identity(&diag).unwrap();
        // product density: the KL splits over coordinates
        let quad = kl_quadrature_1d(0.5) + kl_quadrature_1d(2.0);
        assert!((kl2 - quad).abs() < 1e-6);
        assert!((kl2 - 0.25).abs() < 1e-12);
        let bad = DenseMatrix::from_row_major(2, 2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(kl_gaussian_vs_identity(&bad), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn kl_nonnegative_over_random_spd() {
        let mut rng = SeededRng::new(44);
        for t in 0..500 {
            let d = 1 + t % 6;
            let a = DenseMatrix::from_fn(d, d, |_, _| rng.normal() * 0.5);
            let sigma = a.gram().add(&DenseMatrix::identity(d).scaled(0.1)).unwrap();
            let kl = kl_gaussian_vs_identity(&sigma).unwrap();
            assert!(kl >= -1e-10);
            let dist = sigma.sub(&DenseMatrix::identity(d)).unwrap().frobenius_norm();
            if dist > 1e-8 {
                assert!(kl > 1e-10, "kl {kl} at distance {dist}");
            }
        }
    }

    #[test]
    fn pinsker_arithmetic() {
        assert_eq!(pinsker_tv_bound(0.0).unwrap(), 0.0);
        assert!((pinsker_tv_bound(0.02).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(pinsker_tv_bound(2.0).unwrap(), 1.0);
        assert!(pinsker_tv_bound(-0.5).is_err());
    }

    #[test]
    fn bucket_thresholds() {
        assert_eq!(bound_b_simple(2, 4, 0.5, 1.0).unwrap(), 64);
        assert!((bound_b_main_real(1.0, 1, 1, 1.0, 3.5).unwrap() - 3.5).abs() < 1e-15);
        let a = bound_b_main_real(libm::log(50.0), 3, 7, 0.2, 1.0).unwrap();
        let b = bound_b_main_real(libm::log(50.0), 3, 28, 0.2, 1.0).unwrap();
        assert!((b / a - 2.0).abs() < 1e-12);
        assert!(matches!(bound_b_main(3, 1, 82, 0.5, 1.0), Err(Error::Precondition(_))));
        assert!(bound_b_main(3, 1, 81, 0.5, 1.0).is_ok());
        assert!(bound_b_simple(2, 4, 0.0, 1.0).is_err());
        assert!(bound_b_simple(2, 4, 0.5, 0.0).is_err());
    }

    #[test]
    fn injective_regime_rows_are_indistinguishable() {
        let u = random_orthonormal(20, 3, 9);
        let opts = RowCompareOptions { injective: true, ..Default::default() };
        let r = row_distribution_compare(&u, 32, 1000, &SeededRng::new(10), opts).unwrap();
        assert!(r.energy.statistic <= r.energy.null_q99, "{:?}", r.energy);
        let tol = 4.0 * libm::sqrt(3.0 / 1000.0);
        assert!(r.mean_gaussian.iter().chain(&r.mean_countgauss).all(|m| m.abs() <= tol));
    }

    #[test]
    fn countgauss_covariance_close_to_identity() {
        let d = 3;
        let u = random_orthonormal(64, d, 12);
        let b = bound_b_simple(d, 1, 0.1, 1.0).unwrap() as usize;
        let samples = 2000;
        let r = row_distribution_compare(&u, b, samples, &SeededRng::new(13), RowCompareOptions::default()).unwrap();
        let limit = 3.0 / libm::sqrt(samples as f64) + libm::sqrt(2.0 / b as f64) * d as f64;
        assert!(r.max_cov_dev_countgauss < limit, "{} >= {limit}", r.max_cov_dev_countgauss);
        assert!(row_distribution_compare(&u, b, 999, &SeededRng::new(13), RowCompareOptions::default()).is_err());
    }
}
