use std::path::PathBuf;

use clap::Args;
use countgauss_core::nmf::{generate_noisy_polytope, generate_separable};
use serde::Serialize;

use super::{Ctx, Outcome};
use crate::error::{CliError, Result};
use crate::io::save_instance;
use crate::record::ResultRecord;

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub d: usize,
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Midpoint polytope with this noise level instead of a random separable matrix.
    #[arg(long)]
    pub polytope_sigma: Option<f64>,
}

pub fn run(ctx: &Ctx, a: &GenerateArgs) -> Result<Outcome> {
    let mut rng = ctx.rng();
    let inst = match a.polytope_sigma {
        Some(s) => generate_noisy_polytope(a.d, a.k, s, &mut rng)?,
        None => generate_separable(a.d, a.n, a.k, &mut rng)?,
    };
    save_instance(&a.dir, &inst)?;
    let mut rec = ResultRecord::new("generate", ctx.seed, a)?;
    rec.metric("rows", inst.x.rows() as f64);
    rec.metric("cols", inst.x.cols() as f64);
    rec.data("anchors", &inst.anchors)?;
    rec.data("dir", &a.dir.to_str().ok_or_else(|| CliError::Usage("non-UTF-8 path".into()))?)?;
    Ok(Outcome::record(rec))
}
