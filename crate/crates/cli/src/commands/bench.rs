use std::hint::black_box;

use clap::Args;
use countgauss_core::sketch::gaussian_apply;
use countgauss_core::{gaussian_matrix, CountGaussTransform, SeededRng, SparseMatrix};
use serde::Serialize;

use super::{median_time, Ctx, Outcome, Output};
use crate::error::{CliError, Result};
use crate::record::Table;

/// Allowed growth of stage-1 time relative to growth in nnz.
pub const LINEAR_SLACK: f64 = 1.25;

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    /// Projection rows.
    #[arg(long, default_value_t = 16)]
    pub m: usize,
    /// CountSketch buckets (default 5m).
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub buckets: Option<usize>,
    /// Rows of X (the sketched dimension).
    #[arg(long, default_value_t = 100_000)]
    pub rows: usize,
    /// Columns of X.
    #[arg(long, default_value_t = 200)]
    pub cols: usize,
    /// Target nonzero counts, ascending.
    #[arg(long, value_delimiter = ',', default_values_t = [250_000usize, 500_000, 1_000_000, 2_000_000])]
    pub nnz: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    /// Skip the O(nnz m) Gaussian baseline.
    #[arg(long)]
    pub no_baseline: bool,
}

/// Random sparse matrix with about `nnz` entries (duplicates are merged).
pub fn random_sparse(rows: usize, cols: usize, nnz: usize, rng: &mut SeededRng) -> Result<SparseMatrix> {
    let triplets: Vec<(usize, usize, f64)> =
        (0..nnz).map(|_| (rng.below(rows), rng.below(cols), rng.normal())).collect();
    Ok(SparseMatrix::from_triplets(rows, cols, &triplets)?)
}

pub fn run(ctx: &Ctx, a: &BenchArgs) -> Result<Outcome> {
    if a.m == 0 || a.rows == 0 || a.cols == 0 || a.nnz.is_empty() {
        return Err(CliError::Usage("need m, rows, cols >= 1 and a nonempty nnz grid".into()));
    }
    if a.nnz.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage("--nnz must be strictly increasing".into()));
    }
    let rng = ctx.rng();
    let t = CountGaussTransform::new(a.m, a.buckets, a.rows, &mut rng.child(0))?;
    let g_full = if a.no_baseline {
        None
    } else {
        Some(gaussian_matrix(a.m, a.rows, &mut rng.child(1))?)
    };
    let mut table = Table::new(&[
        "nnz",
        "m",
        "B",
        "stage1_time",
        "stage2_time",
        "countgauss_time",
        "gaussian_time",
        "stage1_ratio",
        "nnz_ratio",
        "gaussian_ratio",
        "speedup",
        "stage1_linear",
    ]);
    let mut prev: Option<(f64, f64, Option<f64>)> = None;
    let mut all_linear = true;
    for (i, &target) in a.nnz.iter().enumerate() {
        let x = random_sparse(a.rows, a.cols, target, &mut rng.child(10 + i as u64))?;
        let nnz = x.nnz() as f64;
        let s = t.sketch();
        let sx = s.apply(&x)?;
        let stage1 = median_time(a.warmup, a.reps, || {
            black_box(s.apply(black_box(&x)).expect("shapes checked"));
        });
        let stage2 = median_time(a.warmup, a.reps, || {
            black_box(t.gaussian().matmul(black_box(&sx)).expect("shapes checked"));
        });
        let full = median_time(a.warmup, a.reps, || {
            black_box(t.apply(black_box(&x)).expect("shapes checked"));
        });
        let gauss = g_full.as_ref().map(|g| {
            median_time(a.warmup, a.reps, || {
                black_box(gaussian_apply(g, black_box(&x)).expect("shapes checked"));
            })
        });
        let (s_ratio, n_ratio, g_ratio, linear) = match prev {
            Some((pn, ps, pg)) => {
                let sr = stage1 / ps;
                let nr = nnz / pn;
                let ok = sr <= LINEAR_SLACK * nr;
                let gr = match (gauss, pg) {
                    (Some(g), Some(p)) => (g / p).to_string(),
                    _ => String::new(),
                };
                (sr.to_string(), nr.to_string(), gr, ok.to_string())
            }
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        if linear == "false" {
            all_linear = false;
        }
        table.push(vec![
            nnz.to_string(),
            a.m.to_string(),
            t.buckets().to_string(),
            stage1.to_string(),
            stage2.to_string(),
            full.to_string(),
            gauss.map(|g| g.to_string()).unwrap_or_default(),
            s_ratio,
            n_ratio,
            g_ratio,
            gauss.map(|g| (g / full).to_string()).unwrap_or_default(),
            linear,
        ]);
        prev = Some((nnz, stage1, gauss));
    }
    Ok(Outcome {
        output: Output::Table {
            table,
            timing_columns: vec![
                "stage1_time",
                "stage2_time",
                "countgauss_time",
                "gaussian_time",
                "stage1_ratio",
                "gaussian_ratio",
                "speedup",
                "stage1_linear",
            ],
        },
        code: if all_linear { 0 } else { 1 },
    })
}
