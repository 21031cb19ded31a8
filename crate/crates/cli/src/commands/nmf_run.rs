use std::path::PathBuf;

use clap::Args;
use countgauss_core::nmf::{projections_for_recovery, relative_error_curve, NnlsOptions};
use serde::Serialize;

use super::nmf_synthetic::{extract, Algo};
use super::{timed, Ctx, Outcome};
use crate::error::{CliError, Result};
use crate::io::{load_instance, load_matrix};
use crate::record::ResultRecord;

#[derive(Debug, Clone, Args, Serialize)]
pub struct NmfRunArgs {
    /// Matrix file (.mtx or .csv, columns are data points) or an instance directory.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of anchors to report.
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = Algo::Cg)]
    pub algo: Algo,
    /// Projections (default ceil(k ln(k / delta)), i.e. condition number 1).
    #[arg(long)]
    pub m: Option<usize>,
    /// CountSketch buckets (default 5m).
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub buckets: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
}

pub fn run(ctx: &Ctx, a: &NmfRunArgs) -> Result<Outcome> {
    if a.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let (loaded, t_load) = timed(|| -> Result<_> {
        if a.input.is_dir() {
            let inst = load_instance(&a.input)?;
            Ok((inst.x, Some(inst.anchors)))
        } else {
            Ok((load_matrix(&a.input)?.to_dense(), None))
        }
    });
    let (x, truth) = loaded?;
    if a.k > x.cols() {
        return Err(CliError::Usage(format!("--k {} exceeds the {} columns", a.k, x.cols())));
    }
    let m = match a.m {
        Some(m) => m,
        None => projections_for_recovery(1.0, a.k.max(2), a.delta)?,
    };
    let (set, t_extract) = timed(|| extract(a.algo, &x, a.k, m, a.buckets, &mut ctx.rng()));
    let set = set?;
    let mut selected = set.by_frequency();
    selected.truncate(a.k);
    let (curve, t_nnls) = timed(|| relative_error_curve(&x, &selected, NnlsOptions::default()));
    let curve = curve?;

    let mut rec = ResultRecord::new("nmf-run", ctx.seed, a)?;
    rec.timing("load", t_load);
    rec.timing("extract", t_extract);
    rec.timing("nnls", t_nnls);
    rec.metric("rows", x.rows() as f64);
    rec.metric("cols", x.cols() as f64);
    rec.metric("m", m as f64);
    if let Some(&last) = curve.last() {
        rec.metric("relative_error", last);
    }
    let mut sorted = selected.clone();
    sorted.sort_unstable();
    rec.data("anchors", &sorted)?;
    rec.data("selection_order", &selected)?;
    rec.data("union", &set.union)?;
    rec.data("relative_error_curve", &curve)?;
    if let Some(t) = truth {
        let mut t = t;
        t.sort_unstable();
        rec.data("true_anchors", &t)?;
        rec.check("anchors_match", sorted == t);
    }
    Ok(Outcome::record(rec))
}
