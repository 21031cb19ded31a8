//! Sample summaries and the energy-distance two-sample test.

use alloc::vec::Vec;

use crate::matrix::DenseMatrix;
use crate::rng::SeededRng;

/// Mean, standard deviation and standard error of a sample, summed in index
/// order.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub stderr: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary { n, mean: f64::NAN, sd: f64::NAN, stderr: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64)
        } else {
            0.0
        };
        Summary { n, mean, sd, stderr: sd / libm::sqrt(n as f64) }
    }
}

/// Column means and sample covariance of points stored as rows.
pub fn mean_and_covariance(points: &[Vec<f64>]) -> (Vec<f64>, DenseMatrix) {
    let n = points.len();
    let d = points.first().map_or(0, |p| p.len());
    let mut mean = alloc::vec![0.0; d];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = DenseMatrix::zeros(d, d);
    for p in points {
        for i in 0..d {
            for j in 0..=i {
                cov[(i, j)] += (p[i] - mean[i]) * (p[j] - mean[j]);
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyTest {
    pub statistic: f64,
    pub p_value: f64,
    /// 99th percentile of the permutation null.
    pub null_q99: f64,
    pub permutations: usize,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// V-statistic energy distance `2 E|X-Y| - E|X-X'| - E|Y-Y'|`.
pub fn energy_distance(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let mut pooled: Vec<&[f64]> = x.iter().map(|v| v.as_slice()).collect();
    pooled.extend(y.iter().map(|v| v.as_slice()));
    let dist = pairwise(&pooled);
    let labels: Vec<bool> = (0..pooled.len()).map(|i| i >= x.len()).collect();
    energy_from_distances(&dist, pooled.len(), &labels)
}

fn pairwise(points: &[&[f64]]) -> Vec<f64> {
    let n = points.len();
    let mut dist = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let v = euclid(points[i], points[j]);
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }
    dist
}

fn energy_from_distances(dist: &[f64], n: usize, in_y: &[bool]) -> f64 {
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    let ny = in_y.iter().filter(|&&b| b).count();
    let nx = n - ny;
    for i in 0..n {
        let row = &dist[i * n..(i + 1) * n];
        for (j, &dv) in row.iter().enumerate() {
            match (in_y[i], in_y[j]) {
                (false, false) => xx += dv,
                (true, true) => yy += dv,
                _ => xy += dv,
            }
        }
    }
    // cross pairs are counted twice above
    let nxf = nx as f64;
    let nyf = ny as f64;
    xy / (nxf * nyf) - xx / (nxf * nxf) - yy / (nyf * nyf)
}

/// Energy distance with a permutation null from random relabellings.
pub fn energy_permutation_test(
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    permutations: usize,
    rng: &mut SeededRng,
) -> EnergyTest {
    let mut pooled: Vec<&[f64]> = x.iter().map(|v| v.as_slice()).collect();
    pooled.extend(y.iter().map(|v| v.as_slice()));
    let n = pooled.len();
    let dist = pairwise(&pooled);
    let mut labels: Vec<bool> = (0..n).map(|i| i >= x.len()).collect();
    let statistic = energy_from_distances(&dist, n, &labels);
    let mut null = Vec::with_capacity(permutations);
    for _ in 0..permutations {
        rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), rng);
        null.push(energy_from_distances(&dist, n, &labels));
    }
    let exceed = null.iter().filter(|&&v| v >= statistic).count();
    null.sort_by(f64::total_cmp);
    let q99 = if null.is_empty() {
        f64::NAN
    } else {
        let pos = libm::ceil(0.99 * null.len() as f64) as usize;
        null[pos.clamp(1, null.len()) - 1]
    };
    EnergyTest {
        statistic,
        p_value: (1 + exceed) as f64 / (1 + permutations) as f64,
        null_q99: q99,
        permutations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn summary_basics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - libm::sqrt(5.0 / 3.0)).abs() < 1e-15);
        assert!((s.stderr - s.sd / 2.0).abs() < 1e-15);
    }

    #[test]
    fn energy_distance_one_dimensional_hand_value() {
        // x = {0}, y = {1}: 2*1 - 0 - 0
        assert_eq!(energy_distance(&[vec![0.0]], &[vec![1.0]]), 2.0);
        // x = {0, 2}, y = {1}: 2*(1+1)/2 - (0+2+2+0)/4 - 0 = 1
        assert_eq!(energy_distance(&[vec![0.0], vec![2.0]], &[vec![1.0]]), 1.0);
    }

    #[test]
    fn shifted_populations_are_detected() {
        let mut rng = SeededRng::new(4);
        let x: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.normal(), rng.normal()]).collect();
        let y: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.normal() + 1.0, rng.normal()]).collect();
        let t = energy_permutation_test(&x, &y, 200, &mut rng);
        assert!(t.p_value < 0.01);
        assert!(t.statistic > t.null_q99);
    }
}
