use std::path::PathBuf;

use clap::{Args, ValueEnum};
use countgauss_core::distcheck::{row_distribution_compare, RowCompareOptions};
use countgauss_core::gaussian_matrix;
use countgauss_core::linalg::orthonormal_basis;
use serde::Serialize;

use super::{timed, Ctx, Outcome};
use crate::error::{CliError, Result};
use crate::io::load_matrix;
use crate::parallel::moment_suite_par;
use crate::record::ResultRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestVector {
    /// Only the Frobenius and trace items.
    None,
    /// First coordinate vector.
    E1,
    /// All-ones vector.
    Ones,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Ambient dimension of the sketched subspace.
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Subspace dimension.
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    /// CountSketch buckets.
    #[arg(long = "B", default_value_t = 256)]
    #[serde(rename = "B")]
    pub buckets: usize,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    /// Test vector for the quadratic-form items.
    #[arg(long, value_enum, default_value_t = TestVector::E1)]
    pub x: TestVector,
    /// Radius constant of the typical-vector check.
    #[arg(long, default_value_t = 1.0)]
    pub typical_c: f64,
    /// Rows drawn per population for the distribution comparison (0 skips it).
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub rows_per_sketch: usize,
    /// Use a collision-free hash in the comparison (needs B >= n).
    #[arg(long)]
    pub injective: bool,
    #[arg(long, default_value_t = 200)]
    pub permutations: usize,
    /// Orthonormal n x d basis to use instead of a random one.
    #[arg(long)]
    pub u: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, a: &VerifyArgs) -> Result<Outcome> {
    let rng = ctx.rng();
    let u = match &a.u {
        Some(p) => load_matrix(p)?.to_dense(),
        None => {
            if a.n == 0 || a.d == 0 || a.d > a.n {
                return Err(CliError::Usage(format!("need 1 <= d <= n, got n = {}, d = {}", a.n, a.d)));
            }
            orthonormal_basis(&gaussian_matrix(a.n, a.d, &mut rng.child(0))?, None)?
        }
    };
    let (n, d) = u.shape();
    let x: Option<Vec<f64>> = match a.x {
        TestVector::None => None,
        TestVector::E1 => Some((0..d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()),
        TestVector::Ones => Some(vec![1.0; d]),
    };
    let mut rec = ResultRecord::new("verify", ctx.seed, a)?;
    let (rep, t_suite) = timed(|| moment_suite_par(&u, x.as_deref(), a.buckets, a.trials, &rng.child(1), a.typical_c));
    let rep = rep?;
    rec.timing("moment_suite", t_suite);
    rec.metric("n", n as f64);
    rec.metric("d", d as f64);
    rec.metric_se("est1_fro_sq", rep.est1.mean, rep.est1.stderr);
    rec.metric("bound1", rep.bound1);
    rec.metric_se("est5_trace_sq", rep.est5.mean, rep.est5.stderr);
    rec.metric("bound5", rep.bound5);
    rec.metric_se("trace_mean", rep.trace_mean.mean, rep.trace_mean.stderr);
    for (name, est, implied) in [
        ("est2", rep.est2, rep.implied2),
        ("est3", rep.est3, rep.implied3),
        ("est4", rep.est4, rep.implied4),
    ] {
        if let Some(e) = est {
            rec.metric_se(name, e.mean, e.stderr);
        }
        if let Some(c) = implied {
            rec.metric(&format!("implied_constant_{}", &name[3..]), c);
        }
    }
    rec.check("bound1", rep.pass1);
    rec.check("bound5", rep.pass5);
    rec.check("trace_zero_mean", rep.trace_zero_mean);

    if a.samples > 0 {
        let opts = RowCompareOptions {
            rows_per_sketch: a.rows_per_sketch,
            injective: a.injective,
            permutations: a.permutations,
            ..RowCompareOptions::default()
        };
        let (cmp, t_cmp) = timed(|| row_distribution_compare(&u, a.buckets, a.samples, &rng.child(2), opts));
        let cmp = cmp?;
        rec.timing("row_compare", t_cmp);
        rec.metric("max_cov_dev_gaussian", cmp.max_cov_dev_gaussian);
        rec.metric("max_cov_dev_countgauss", cmp.max_cov_dev_countgauss);
        rec.metric("energy_statistic", cmp.energy.statistic);
        rec.metric("energy_p_value", cmp.energy.p_value);
        rec.metric("energy_null_q99", cmp.energy.null_q99);
        rec.data("mean_countgauss", &cmp.mean_countgauss)?;
        rec.data("mean_gaussian", &cmp.mean_gaussian)?;
    }
    Ok(Outcome::record(rec))
}
