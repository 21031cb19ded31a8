use std::path::PathBuf;

use clap::{Args, ValueEnum};
use countgauss_core::svm::{embedding_error, margin_bounds, sparse_low_rank_blobs, svm_dual_solve, SvmProblem, SvmSolution};
use countgauss_core::{gaussian_matrix, mix64, CountGaussTransform, CountSketchMap, DenseMatrix, SeededRng, SparseMatrix};
use serde::Serialize;

use super::{timed, Ctx, Outcome};
use crate::error::{CliError, Result};
use crate::io::load_libsvm;
use crate::parallel::try_par_map;
use crate::record::ResultRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Proj {
    Countsketch,
    Countgauss,
    Gaussian,
}

impl Proj {
    fn name(self) -> &'static str {
        match self {
            Proj::Countsketch => "countsketch",
            Proj::Countgauss => "countgauss",
            Proj::Gaussian => "gaussian",
        }
    }
}

/// A drawn projection, kept in operator form for the fast data map and
/// densified for the embedding error.
enum Operator {
    Sketch(CountSketchMap),
    CountGauss(CountGaussTransform),
    Gaussian(DenseMatrix),
}

impl Operator {
    fn draw(kind: Proj, d: usize, r: usize, buckets: Option<usize>, rng: &mut SeededRng) -> Result<Self> {
        Ok(match kind {
            Proj::Countsketch => Operator::Sketch(CountSketchMap::new(r, d, rng)?),
            Proj::Countgauss => Operator::CountGauss(CountGaussTransform::new(r, buckets, d, rng)?),
            Proj::Gaussian => Operator::Gaussian(gaussian_matrix(d, r, rng)?.scaled(1.0 / (r as f64).sqrt())),
        })
    }

    /// `d x r` matrix `R`.
    fn dense(&self) -> DenseMatrix {
        match self {
            Operator::Sketch(s) => s.to_dense().transpose(),
            Operator::CountGauss(t) => t.to_dense().transpose().scaled(1.0 / (t.m() as f64).sqrt()),
            Operator::Gaussian(g) => g.clone(),
        }
    }

    /// `X R` from the sparse transpose `X^T`.
    fn project(&self, x: &SparseMatrix, xt: &SparseMatrix) -> Result<DenseMatrix> {
        Ok(match self {
            Operator::Sketch(s) => s.apply(xt)?.transpose(),
            Operator::CountGauss(t) => t.apply(xt)?.transpose().scaled(1.0 / (t.m() as f64).sqrt()),
            Operator::Gaussian(g) => x.spmm(g)?,
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SvmCheckArgs {
    /// Training data in LIBSVM format (otherwise synthetic blobs are generated).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Test data in LIBSVM format; enables test_error.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Synthetic samples.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Synthetic features.
    #[arg(long, default_value_t = 2000)]
    pub d: usize,
    /// Rank of the synthetic data.
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    /// Fraction of nonzeros per synthetic basis column.
    #[arg(long, default_value_t = 0.01)]
    pub density: f64,
    /// Distance of the two synthetic class means from the origin, in noise units.
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    /// Soft-margin parameter.
    #[arg(long = "C", default_value_t = 500.0)]
    #[serde(rename = "C")]
    pub c: f64,
    /// Projection widths.
    #[arg(long, value_delimiter = ',', default_values_t = [128usize, 256, 512])]
    pub r: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Proj::Countsketch, Proj::Countgauss, Proj::Gaussian])]
    pub proj: Vec<Proj>,
    /// CountGauss buckets (default 5r).
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub buckets: Option<usize>,
    /// Independent repetitions (fresh synthetic data and projections).
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_passes: usize,
}

#[derive(Debug, Clone, Serialize)]
struct Row {
    seed: usize,
    r: usize,
    proj: &'static str,
    status: &'static str,
    embedding_error: f64,
    gamma: f64,
    gamma_projected: Option<f64>,
    gamma_lower: Option<f64>,
    gamma_upper: Option<f64>,
    pass: Option<bool>,
    tight_holds: Option<bool>,
    test_error: Option<f64>,
    #[serde(skip)]
    proj_time: f64,
    #[serde(skip)]
    solve_time: f64,
}

fn test_error(w: &[f64], x: &DenseMatrix, y: &[f64]) -> f64 {
    let wrong = (0..x.rows())
        .filter(|&i| {
            let s: f64 = x.row(i).iter().zip(w).map(|(a, b)| a * b).sum();
            s * y[i] <= 0.0
        })
        .count();
    wrong as f64 / x.rows() as f64
}

pub fn run(ctx: &Ctx, a: &SvmCheckArgs) -> Result<Outcome> {
    if a.seeds == 0 || a.r.is_empty() || a.proj.is_empty() {
        return Err(CliError::Usage("need --seeds >= 1 and nonempty --r and --proj".into()));
    }
    let rng = ctx.rng();
    let loaded = match &a.input {
        Some(p) => Some(load_libsvm(p, None)?),
        None => None,
    };
    let features = loaded.as_ref().map_or(a.d, |l| l.x.cols());
    let test = match &a.test {
        Some(p) => Some(load_libsvm(p, Some(features))?),
        None => None,
    };
    let mut projs = a.proj.clone();
    projs.sort();
    projs.dedup();
    let mut cells = Vec::new();
    for s in 0..a.seeds {
        for &r in &a.r {
            for &p in &projs {
                cells.push((s, r, p));
            }
        }
    }

    let problems = try_par_map(a.seeds, |s| -> Result<(SvmProblem, SvmSolution, f64)> {
        let p = match &loaded {
            Some(l) => SvmProblem::new(l.x.to_dense(), l.y.clone(), a.c)?,
            None => sparse_low_rank_blobs(
                a.n,
                a.d,
                a.rank,
                a.density,
                a.separation,
                a.c,
                &mut rng.child(s as u64).child(0),
            )?,
        };
        let (sol, secs) = timed(|| svm_dual_solve(&p, a.tol, a.max_passes));
        Ok((p, sol?, secs))
    })?;

    let rows = try_par_map(cells.len(), |i| -> Result<Row> {
        let (s, r, kind) = cells[i];
        let p = &problems[s].0;
        let seed = mix64(mix64(rng.child(s as u64).child(1).seed(), r as u64), kind as u64);
        let op = Operator::draw(kind, p.features(), r, a.buckets, &mut SeededRng::new(seed))?;
        let e = embedding_error(&p.x, &op.dense())?;
        let orig = &problems[s].1;
        let mut row = Row {
            seed: s,
            r,
            proj: kind.name(),
            status: "precondition_failed",
            embedding_error: e,
            gamma: orig.gamma,
            gamma_projected: None,
            gamma_lower: None,
            gamma_upper: None,
            pass: None,
            tight_holds: None,
            test_error: None,
            proj_time: 0.0,
            solve_time: 0.0,
        };
        if !(e < 0.5) {
            return Ok(row);
        }
        let xs = SparseMatrix::from_dense(&p.x);
        let xt = xs.transpose();
        let (xr, proj_time) = timed(|| op.project(&xs, &xt));
        let projected = SvmProblem {
            x: xr?,
            y: p.y.clone(),
            c: p.c,
        };
        let (sol, solve_time) = timed(|| svm_dual_solve(&projected, a.tol, a.max_passes));
        let sol = sol?;
        let rep = margin_bounds(e, orig, &sol, p.is_one_class());
        if let Some(t) = &test {
            let ts = t.x.clone();
            let tt = ts.transpose();
            row.test_error = Some(test_error(&sol.w, &op.project(&ts, &tt)?, &t.y));
        }
        row.status = "evaluated";
        row.gamma_projected = Some(rep.gamma_projected);
        row.gamma_lower = Some(rep.lower.sqrt().max(0.0));
        row.gamma_upper = Some(rep.upper.sqrt());
        row.pass = Some(rep.pass);
        row.tight_holds = Some(rep.tight_holds);
        row.proj_time = proj_time;
        row.solve_time = solve_time;
        Ok(row)
    })?;

    let mut rec = ResultRecord::new("svm-check", ctx.seed, a)?;
    for (s, (p, orig, secs)) in problems.iter().enumerate() {
        rec.timing(&format!("seed{s}/solve_original"), *secs);
        if s == 0 {
            rec.metric("samples", p.samples() as f64);
            rec.metric("features", p.features() as f64);
        }
        rec.metric(&format!("seed{s}/gamma"), orig.gamma);
        if let Some(t) = &test {
            rec.metric(&format!("seed{s}/test_error_original"), test_error(&orig.w, &t.x.to_dense(), &t.y));
        }
    }
    for &r in &a.r {
        for &kind in &projs {
            let sel: Vec<&Row> = rows.iter().filter(|x| x.r == r && x.proj == kind.name()).collect();
            let evaluated: Vec<&&Row> = sel.iter().filter(|x| x.status == "evaluated").collect();
            let passed = evaluated.iter().filter(|x| x.pass == Some(true)).count();
            let key = format!("r{r}/{}", kind.name());
            rec.metric(&format!("{key}/evaluated"), evaluated.len() as f64);
            rec.metric(&format!("{key}/pass_rate"), passed as f64 / sel.len() as f64);
            rec.check(&format!("{key}/bounds_hold"), passed == evaluated.len());
        }
    }
    for row in &rows {
        if row.status == "evaluated" {
            let key = format!("seed{}/r{}/{}", row.seed, row.r, row.proj);
            rec.timing(&format!("{key}/proj_time"), row.proj_time);
            rec.timing(&format!("{key}/solve_time"), row.solve_time);
        }
    }
    rec.data("rows", &rows)?;
    Ok(Outcome::record(rec))
}
