use clap::{Args, ValueEnum};
use countgauss_core::nmf::{
    cg_nmf, generate_noisy_polytope, generate_separable, gp_nmf, spa, xray, AnchorSet, NnlsOptions,
};
use countgauss_core::{mix64, DenseMatrix, SeededRng};
use serde::Serialize;

use super::{timed, Ctx, Outcome, Output};
use crate::error::{CliError, Result};
use crate::parallel::try_par_map;
use crate::record::Table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    /// CountGauss projections.
    Cg,
    /// Dense Gaussian projections.
    Gp,
    /// Successive projection.
    Spa,
    /// Greedy conical-hull expansion.
    Xray,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Cg => "cg",
            Algo::Gp => "gp",
            Algo::Spa => "spa",
            Algo::Xray => "xray",
        }
    }

    /// Whether the number of projections `m` matters.
    pub fn projects(self) -> bool {
        matches!(self, Algo::Cg | Algo::Gp)
    }
}

/// Runs one extractor. Deterministic baselines return their `k` picks as
/// both `i_max` and the union.
pub fn extract(
    algo: Algo,
    x: &DenseMatrix,
    k: usize,
    m: usize,
    buckets: Option<usize>,
    rng: &mut SeededRng,
) -> Result<AnchorSet> {
    let picks = match algo {
        Algo::Cg => return Ok(cg_nmf(x, m, buckets, rng)?),
        Algo::Gp => return Ok(gp_nmf(x, m, rng)?),
        Algo::Spa => match spa(x, k) {
            Ok(p) => p,
            Err(countgauss_core::Error::EarlyExhaustion { found, .. }) => found,
            Err(e) => return Err(e.into()),
        },
        Algo::Xray => xray(x, k, NnlsOptions::default())?.anchors,
    };
    let mut hits = vec![0; x.cols()];
    for &p in &picks {
        hits[p] += 1;
    }
    let mut union = picks.clone();
    union.sort_unstable();
    Ok(AnchorSet {
        i_max: union.clone(),
        i_min: Vec::new(),
        union,
        hits,
    })
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NmfSyntheticArgs {
    #[arg(long, default_value_t = 200)]
    pub d: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Anchor counts.
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 12, 16])]
    pub k: Vec<usize>,
    /// Projection counts; defaults to k ln k times 1/2, 1 and 2 for each k.
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    /// CountSketch buckets (default 5m).
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub buckets: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algo::Cg, Algo::Gp, Algo::Spa])]
    pub algos: Vec<Algo>,
    /// Gaussian noise added to each generated matrix.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Selection frequencies on the midpoint polytope across noise levels.
    #[arg(long)]
    pub scree: bool,
    /// Noise levels for scree mode (default: 20 log-spaced values in [0.01, 1]).
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Vec<f64>,
    /// Vertices of the scree polytope.
    #[arg(long, default_value_t = 20)]
    pub scree_k: usize,
    /// Projections per scree trial (default 5k).
    #[arg(long)]
    pub scree_m: Option<usize>,
}

fn default_ms(k: usize) -> Vec<usize> {
    let base = (k as f64) * (k as f64).ln();
    let mut ms: Vec<usize> = [0.5, 1.0, 2.0].iter().map(|f| ((f * base).ceil() as usize).max(1)).collect();
    ms.dedup();
    ms
}

fn algo_id(a: Algo) -> u64 {
    a as u64 + 1
}

struct TrialResult {
    success: bool,
    violation: bool,
    seconds: f64,
}

pub fn run(ctx: &Ctx, a: &NmfSyntheticArgs) -> Result<Outcome> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if !(a.sigma >= 0.0) {
        return Err(CliError::Usage("--sigma must be nonnegative".into()));
    }
    if a.scree {
        return scree(ctx, a);
    }
    let rng = ctx.rng();
    let mut table = Table::new(&[
        "k",
        "m",
        "algo",
        "trials",
        "success_rate",
        "subset_violations",
        "mean_time",
        "note",
    ]);
    let mut ks = a.k.clone();
    ks.sort_unstable();
    ks.dedup();
    let mut algos = a.algos.clone();
    algos.sort_by_key(|x| x.name());
    algos.dedup();
    let mut violations_total = 0;
    for &k in &ks {
        let mut ms = if a.m.is_empty() { default_ms(k) } else { a.m.clone() };
        ms.sort_unstable();
        ms.dedup();
        if k == 0 || k > a.d.min(a.n) {
            table.push(vec![
                k.to_string(),
                String::new(),
                String::new(),
                "0".into(),
                String::new(),
                String::new(),
                String::new(),
                format!("skipped: k must be in 1..={}", a.d.min(a.n)),
            ]);
            continue;
        }
        // one instance per (k, trial), shared by every algorithm and m
        let kstream = rng.child(k as u64);
        let instances = try_par_map(a.trials, |t| -> Result<DenseMatrix> {
            let mut r = kstream.child(t as u64);
            let mut inst = generate_separable(a.d, a.n, k, &mut r)?;
            if a.sigma > 0.0 {
                for v in inst.x.as_mut_slice() {
                    *v += a.sigma * r.normal();
                }
            }
            Ok(inst.x)
        })?;
        let anchors: Vec<usize> = (0..k).collect();
        let mut cells: Vec<(usize, Algo)> = Vec::new();
        for &m in &ms {
            for &al in &algos {
                if al.projects() {
                    cells.push((m, al));
                }
            }
        }
        for &al in &algos {
            if !al.projects() {
                cells.push((0, al));
            }
        }
        cells.sort_by_key(|&(m, al)| (m, al.name()));
        for (m, al) in cells {
            let results = try_par_map(a.trials, |t| -> Result<TrialResult> {
                let seed = mix64(mix64(kstream.child(t as u64).seed(), m as u64), algo_id(al));
                let (set, secs) = timed(|| extract(al, &instances[t], k, m, a.buckets, &mut SeededRng::new(seed)));
                let set = set?;
                Ok(TrialResult {
                    success: set.contains_all(&anchors),
                    violation: !set.subset_of(&anchors),
                    seconds: secs,
                })
            })?;
            let succ = results.iter().filter(|r| r.success).count();
            let viol = results.iter().filter(|r| r.violation).count();
            if al.projects() {
                violations_total += viol;
            }
            let mean_time = results.iter().map(|r| r.seconds).sum::<f64>() / a.trials as f64;
            table.push(vec![
                k.to_string(),
                m.to_string(),
                al.name().to_string(),
                a.trials.to_string(),
                (succ as f64 / a.trials as f64).to_string(),
                viol.to_string(),
                mean_time.to_string(),
                if al.projects() { String::new() } else { "m unused".into() },
            ]);
        }
    }
    let code = if a.sigma == 0.0 && violations_total > 0 { 1 } else { 0 };
    Ok(Outcome {
        output: Output::Table {
            table,
            timing_columns: vec!["mean_time"],
        },
        code,
    })
}

fn scree(ctx: &Ctx, a: &NmfSyntheticArgs) -> Result<Outcome> {
    let rng = ctx.rng();
    let sigmas: Vec<f64> = if a.sigmas.is_empty() {
        (0..20).map(|i| 10f64.powf(-2.0 + 2.0 * i as f64 / 19.0)).collect()
    } else {
        a.sigmas.clone()
    };
    if sigmas.iter().any(|s| !(*s >= 0.0)) {
        return Err(CliError::Usage("noise levels must be nonnegative".into()));
    }
    let k = a.scree_k;
    let m = a.scree_m.unwrap_or(5 * k);
    let mut table = Table::new(&["sigma", "column", "is_anchor", "frequency"]);
    for (si, &sigma) in sigmas.iter().enumerate() {
        let stream = rng.child(si as u64);
        let inst = generate_noisy_polytope(a.d, k, sigma, &mut stream.child(0))?;
        let n = inst.x.cols();
        let sets = try_par_map(a.trials, |t| -> Result<AnchorSet> {
            Ok(cg_nmf(&inst.x, m, a.buckets, &mut stream.child(1).child(t as u64))?)
        })?;
        let mut counts = vec![0usize; n];
        for s in &sets {
            for &j in &s.union {
                counts[j] += 1;
            }
        }
        for (j, c) in counts.iter().enumerate() {
            table.push(vec![
                sigma.to_string(),
                j.to_string(),
                (j < k).to_string(),
                (*c as f64 / a.trials as f64).to_string(),
            ]);
        }
    }
    Ok(Outcome {
        output: Output::Table {
            table,
            timing_columns: vec![],
        },
        code: 0,
    })
}
