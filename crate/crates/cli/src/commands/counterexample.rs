use clap::Args;
use countgauss_core::nmf::srht_counterexample_check;
use serde::Serialize;

use super::{Ctx, Outcome};
use crate::error::Result;
use crate::parallel::try_par_map;
use crate::record::ResultRecord;

#[derive(Debug, Clone, Args, Serialize)]
pub struct CounterexampleArgs {
    /// Dimensions to check (powers of two).
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 16])]
    pub d: Vec<usize>,
    /// Monte-Carlo samples for the solid angle and the coordinate tail.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

pub fn run(ctx: &Ctx, a: &CounterexampleArgs) -> Result<Outcome> {
    let rng = ctx.rng();
    let reports = try_par_map(a.d.len(), |i| {
        let d = a.d[i];
        srht_counterexample_check(d, a.samples, &mut rng.child(d as u64))
    })?;
    let mut rec = ResultRecord::new("counterexample", ctx.seed, a)?;
    for r in &reports {
        let d = r.d;
        rec.metric(&format!("d{d}/vectors_checked"), r.vectors_checked as f64);
        rec.metric(&format!("d{d}/members_found"), r.members_found as f64);
        rec.metric_se(&format!("d{d}/omega"), r.omega.omega, r.omega.stderr);
        rec.metric(&format!("d{d}/coordinate_tail_fraction"), r.coordinate_tail_fraction);
        rec.metric(&format!("d{d}/inv_sqrt_d"), r.inv_sqrt_d);
        rec.check(&format!("d{d}/no_sign_vector_in_cone"), r.members_found == 0);
        rec.check(&format!("d{d}/no_srht_row_in_cone"), r.srht_rows_in_cone == 0);
    }
    if let Some(r) = reports.first() {
        rec.metric("sin_3pi_10", r.sin_3pi_10);
        rec.metric("reference_omega", r.reference_omega);
        rec.check("sin_3pi_10_exceeds_inv_sqrt2", r.criterion_holds);
    }
    rec.data("reports", &reports)?;
    Ok(Outcome::record(rec))
}
