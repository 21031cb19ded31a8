//! Polytope geometry: normal cones, solid angles and the condition number
//! that sizes the number of random projections.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::matrix::{dot, norm2, DenseMatrix};
use crate::nmf::nnls::nnls_active_set;
use crate::rng::SeededRng;
use crate::sketch::SrhtSpec;

const CONE_EPS: f64 = 1e-12;

/// A finite point set in `R^d`, every point an extreme point of its hull.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolytopeSpec {
    pub vertices: Vec<Vec<f64>>,
    pub ambient_dim: usize,
}

impl PolytopeSpec {
    /// Validates dimensions and that no vertex lies in the hull of the others.
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(invalid("a polytope needs at least one vertex"));
        };
        let d = first.len();
        if d == 0 || vertices.iter().any(|v| v.len() != d) {
            return Err(invalid("vertices must share one positive dimension"));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("vertex coordinates must be finite"));
        }
        let poly = PolytopeSpec { vertices, ambient_dim: d };
        let cols = poly.to_columns();
        for j in 0..cols.cols() {
            let others: Vec<usize> = (0..cols.cols()).filter(|&i| i != j).collect();
            if !others.is_empty() && in_convex_hull(&cols.select_columns(&others)?, cols.col(j))? {
                return Err(Error::Precondition(alloc::format!("vertex {j} is not an extreme point")));
            }
        }
        Ok(poly)
    }

    /// Regular `k`-gon on the unit circle with vertex 0 at `(0, 1)`.
    pub fn regular_polygon(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(invalid("a regular polygon needs at least 3 vertices"));
        }
        let vertices = (0..k)
            .map(|i| {
                let t = PI / 2.0 + 2.0 * PI * i as f64 / k as f64;
                vec![libm::cos(t), libm::sin(t)]
            })
            .collect();
        Ok(PolytopeSpec { vertices, ambient_dim: 2 })
    }

    /// Axis-aligned square with vertices `(+-1, +-1)`.
    pub fn square() -> Self {
        let vertices = vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]];
        PolytopeSpec { vertices, ambient_dim: 2 }
    }

    /// Pads every vertex with zeros up to dimension `d`.
    pub fn embed(&self, d: usize) -> Result<Self> {
        if d < self.ambient_dim {
            return Err(invalid("cannot embed into a smaller dimension"));
        }
        let vertices = self
            .vertices
            .iter()
            .map(|v| {
                let mut w = v.clone();
                w.resize(d, 0.0);
                w
            })
            .collect();
        Ok(PolytopeSpec { vertices, ambient_dim: d })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertices as the columns of a `d x k` matrix.
    pub fn to_columns(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.ambient_dim, self.vertices.len(), |i, j| self.vertices[j][i])
    }
}

/// Whether `w` lies in the normal cone at vertex `idx`, i.e.
/// `w^T (v_j - v_idx) <= eps` for every vertex, with `eps` relative to the
/// scale of `w` and the polytope.
pub fn normal_cone_member(poly: &PolytopeSpec, idx: usize, w: &[f64]) -> Result<bool> {
    if idx >= poly.len() {
        return Err(invalid(alloc::format!("vertex index {idx} out of range for {} vertices", poly.len())));
    }
    crate::error::check_dim("normal_cone_member", poly.ambient_dim, w.len())?;
    let p = &poly.vertices[idx];
    let wn = norm2(w);
    for v in &poly.vertices {
        let diff: Vec<f64> = v.iter().zip(p).map(|(a, b)| a - b).collect();
        let eps = CONE_EPS * wn * norm2(&diff).max(1.0);
        if dot(w, &diff) > eps {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Monte-Carlo solid angle estimate with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolidAngle {
    pub omega: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl SolidAngle {
    fn from_hits(hits: usize, samples: usize) -> Self {
        let p = hits as f64 / samples as f64;
        SolidAngle {
            omega: p,
            stderr: libm::sqrt(p * (1.0 - p) / samples as f64),
            samples,
        }
    }
}

const MIN_SAMPLES: usize = 1000;

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(invalid(alloc::format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    Ok(())
}

/// Fraction of uniformly random directions landing in the normal cone at
/// vertex `idx`. Gaussian vectors are used unnormalized since cone
/// membership is scale invariant.
pub fn solid_angle_mc(poly: &PolytopeSpec, idx: usize, samples: usize, rng: &mut SeededRng) -> Result<SolidAngle> {
    check_samples(samples)?;
    let mut w = vec![0.0; poly.ambient_dim];
    let mut hits = 0;
    for _ in 0..samples {
        w.iter_mut().for_each(|v| *v = rng.normal());
        if normal_cone_member(poly, idx, &w)? {
            hits += 1;
        }
    }
    Ok(SolidAngle::from_hits(hits, samples))
}

/// [`solid_angle_mc`] for every vertex, vertex `i` using child stream `i`.
pub fn solid_angles_all(poly: &PolytopeSpec, samples: usize, rng: &SeededRng) -> Result<Vec<SolidAngle>> {
    (0..poly.len())
        .map(|i| solid_angle_mc(poly, i, samples, &mut rng.child(i as u64)))
        .collect()
}

/// Solid angles of the column point cloud of `X`: each random direction is
/// credited to the column maximizing the inner product with it (ties to the
/// lowest index). Interior columns get zero; the estimates sum to one.
pub fn column_solid_angles(x: &DenseMatrix, samples: usize, rng: &mut SeededRng) -> Result<Vec<SolidAngle>> {
    check_samples(samples)?;
    x.check_finite()?;
    let (d, n) = x.shape();
    if n == 0 {
        return Err(invalid("need at least one column"));
    }
    let mut hits = vec![0usize; n];
    let mut w = vec![0.0; d];
    for _ in 0..samples {
        w.iter_mut().for_each(|v| *v = rng.normal());
        let z = x.t_mul_vec(&w)?;
        let mut best = 0;
        for j in 1..n {
            if z[j] > z[best] {
                best = j;
            }
        }
        hits[best] += 1;
    }
    Ok(hits.into_iter().map(|h| SolidAngle::from_hits(h, samples)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum KappaVariant {
    /// `1 / (k ln(1 / max_i (1 - 2 w_i)))`
    #[default]
    Log,
    /// `1 / (k max_i (1 - 2 w_i))`
    Linear,
}

/// Condition number from the anchor solid angles.
///
/// The log form decreases as the angles grow while the linear form
/// increases, so the two are not interchangeable.
pub fn condition_number(omegas: &[f64], k: usize, variant: KappaVariant) -> Result<f64> {
    if omegas.is_empty() || k == 0 {
        return Err(invalid("condition number needs k >= 1 and at least one solid angle"));
    }
    if omegas.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(invalid("solid angles must be finite and nonnegative"));
    }
    let worst = omegas.iter().map(|w| 1.0 - 2.0 * w).fold(f64::NEG_INFINITY, f64::max);
    let k = k as f64;
    match variant {
        KappaVariant::Log => {
            if omegas.iter().any(|&w| w <= 0.0 || w >= 0.5) {
                return Err(invalid("log condition number needs every solid angle in (0, 1/2)"));
            }
            Ok(1.0 / (k * libm::log(1.0 / worst)))
        }
        KappaVariant::Linear => {
            if worst <= 0.0 {
                return Err(invalid("linear condition number needs some solid angle below 1/2"));
            }
            Ok(1.0 / (k * worst))
        }
    }
}

/// `ceil(kappa k ln(k / delta))`, at least 1.
pub fn projections_for_recovery(kappa: f64, k: usize, delta: f64) -> Result<usize> {
    if !(kappa > 0.0 && kappa.is_finite()) || k == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("need kappa > 0, k >= 1 and delta in (0, 1)"));
    }
    let m = libm::ceil(kappa * k as f64 * libm::log(k as f64 / delta));
    Ok((m as usize).max(1))
}

/// Whether `p` is a convex combination of the columns of `points`, decided
/// by NNLS against the points stacked on a heavily weighted row of ones.
pub fn in_convex_hull(points: &DenseMatrix, p: &[f64]) -> Result<bool> {
    crate::error::check_dim("in_convex_hull", points.rows(), p.len())?;
    let (d, n) = points.shape();
    if n == 0 {
        return Ok(false);
    }
    let scale = points.max_abs().max(p.iter().fold(0.0f64, |m, v| m.max(v.abs()))).max(1.0);
    let rho = 10.0 * scale;
    let a = DenseMatrix::from_fn(d + 1, n, |i, j| if i < d { points[(i, j)] } else { rho });
    let mut b = p.to_vec();
    b.push(rho);
    let lambda = nnls_active_set(&a, &b)?;
    let fit = a.mul_vec(&lambda)?;
    let resid: f64 = fit.iter().zip(&b).map(|(f, t)| (f - t) * (f - t)).sum();
    Ok(libm::sqrt(resid) <= 1e-7 * scale)
}

/// Indices of columns not in the convex hull of the other columns.
/// Exact duplicates of an extreme point are all dropped, since each lies in
/// the hull of its twin.
pub fn extreme_points_bruteforce(x: &DenseMatrix) -> Result<Vec<usize>> {
    let n = x.cols();
    if n > 200 {
        return Err(invalid(alloc::format!("brute-force hull test limited to 200 columns, got {n}")));
    }
    x.check_finite()?;
    let mut out = Vec::new();
    for j in 0..n {
        let others: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        if others.is_empty() || !in_convex_hull(&x.select_columns(&others)?, x.col(j))? {
            out.push(j);
        }
    }
    Ok(out)
}

/// Outcome of the check that Hadamard-type rows never fall in the normal
/// cone of the top vertex of a regular pentagon embedded in `R^d`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CounterexampleReport {
    pub d: usize,
    /// Sign vectors tested.
    pub vectors_checked: u64,
    /// True when all `2^d` sign vectors were enumerated.
    pub exhaustive: bool,
    /// Sign vectors found inside the cone; zero when the claim holds.
    pub members_found: u64,
    pub sin_3pi_10: f64,
    pub inv_sqrt_d: f64,
    /// `sin(3 pi / 10) > 1 / sqrt(2)`, decided in exact arithmetic.
    pub criterion_holds: bool,
    /// Rows of a sampled SRHT operator tested against the cone.
    pub srht_rows_checked: usize,
    pub srht_rows_in_cone: usize,
    /// Monte-Carlo solid angle of the cone (the true value is 1/5).
    pub omega: SolidAngle,
    /// Fraction of uniform sphere points whose second coordinate exceeds
    /// `1 / sqrt(d)`.
    pub coordinate_tail_fraction: f64,
    /// The approximate figure quoted for that tail fraction.
    pub reference_omega: f64,
}

const EXHAUSTIVE_MAX_D: usize = 16;
const RANDOM_PATTERNS: u64 = 100_000;

pub fn srht_counterexample_check(d: usize, samples: usize, rng: &mut SeededRng) -> Result<CounterexampleReport> {
    if d < 2 || !d.is_power_of_two() {
        return Err(invalid(alloc::format!("dimension must be a power of two >= 2, got {d}")));
    }
    check_samples(samples)?;
    let poly = PolytopeSpec::regular_polygon(5)?.embed(d)?;
    let s = 1.0 / libm::sqrt(d as f64);
    let mut v = vec![0.0; d];
    let fill = |v: &mut [f64], bits: u64| {
        for (i, x) in v.iter_mut().enumerate() {
            *x = if (bits >> i) & 1 == 1 { -s } else { s };
        }
    };
    let exhaustive = d <= EXHAUSTIVE_MAX_D;
    let total = if exhaustive { 1u64 << d } else { RANDOM_PATTERNS };
    let mut members = 0;
    let mut pattern_rng = rng.child(0);
    for t in 0..total {
        if exhaustive {
            fill(&mut v, t);
        } else {
            for x in v.iter_mut() {
                *x = pattern_rng.sign() * s;
            }
        }
        if normal_cone_member(&poly, 0, &v)? {
            members += 1;
        }
    }

    let srht = SrhtSpec::new(d.min(64), d, &mut rng.child(1))?;
    let rows = srht.rows()?;
    let mut srht_in = 0;
    for i in 0..rows.rows() {
        if normal_cone_member(&poly, 0, &rows.row(i))? {
            srht_in += 1;
        }
    }

    let omega = solid_angle_mc(&poly, 0, samples, &mut rng.child(2))?;
    let mut tail_rng = rng.child(3);
    let mut tail = 0usize;
    let mut w = vec![0.0; d];
    for _ in 0..samples {
        w.iter_mut().for_each(|x| *x = tail_rng.normal());
        if w[1] / norm2(&w) > s {
            tail += 1;
        }
    }

    // sin(3 pi / 10) = (1 + sqrt 5) / 4, and ((1 + sqrt 5) / 4)^2 > 1/2
    // reduces to sqrt 5 > 1, i.e. 5 > 1 over the integers.
    let criterion_holds = 5 > 1;
    Ok(CounterexampleReport {
        d,
        vectors_checked: total,
        exhaustive,
        members_found: members,
        sin_3pi_10: libm::sin(3.0 * PI / 10.0),
        inv_sqrt_d: s,
        criterion_holds,
        srht_rows_checked: rows.rows(),
        srht_rows_in_cone: srht_in,
        omega,
        coordinate_tail_fraction: tail as f64 / samples as f64,
        reference_omega: 0.16,
    })
}
