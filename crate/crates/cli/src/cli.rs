use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{
    bench, counterexample, generate, nmf_run, nmf_synthetic, svm_check, verify, Ctx, Outcome, Output,
};
use crate::error::Result;
use crate::parallel::with_threads;

#[derive(Debug, Parser)]
#[command(
    name = "countgauss",
    version,
    about = "CountSketch / CountGauss experiments: moment checks, separable NMF, SVM margins, benchmarks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "COUNTGAUSS_THREADS")]
    pub threads: Option<usize>,
    /// Emit JSON.
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// Emit CSV.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Leave out wall-clock timings so reruns compare byte for byte.
    #[arg(long, global = true)]
    pub no_timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo moment bounds and row-distribution comparison.
    Verify(verify::VerifyArgs),
    /// Anchor-recovery success rates over a (k, m) grid, or scree data.
    NmfSynthetic(nmf_synthetic::NmfSyntheticArgs),
    /// Anchor extraction on a matrix file or instance directory.
    NmfRun(nmf_run::NmfRunArgs),
    /// CountSketch / CountGauss timing against a Gaussian multiply.
    Bench(bench::BenchArgs),
    /// Sign vectors versus the pentagon normal cone.
    Counterexample(counterexample::CounterexampleArgs),
    /// Margin preservation under random projections.
    SvmCheck(svm_check::SvmCheckArgs),
    /// Write a synthetic separable instance to a directory.
    Generate(generate::GenerateArgs),
}

/// Rendered output and the process exit code.
#[derive(Debug)]
pub struct Rendered {
    pub text: String,
    pub code: i32,
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let ctx = Ctx { seed: cli.global.seed };
    with_threads(cli.global.threads, || match &cli.command {
        Command::Verify(a) => verify::run(&ctx, a),
        Command::NmfSynthetic(a) => nmf_synthetic::run(&ctx, a),
        Command::NmfRun(a) => nmf_run::run(&ctx, a),
        Command::Bench(a) => bench::run(&ctx, a),
        Command::Counterexample(a) => counterexample::run(&ctx, a),
        Command::SvmCheck(a) => svm_check::run(&ctx, a),
        Command::Generate(a) => generate::run(&ctx, a),
    })?
}

pub fn render(global: &GlobalArgs, outcome: &Outcome) -> Result<String> {
    match &outcome.output {
        Output::Record(rec) => {
            let mut rec = rec.clone();
            if global.no_timings {
                rec.timings.clear();
            }
            if global.csv {
                rec.to_table().to_csv()
            } else {
                rec.to_json()
            }
        }
        Output::Table { table, timing_columns } => {
            let table = if global.no_timings {
                table.without(timing_columns)
            } else {
                table.clone()
            };
            if global.json {
                table.to_json()
            } else {
                table.to_csv()
            }
        }
    }
}

/// Parses nothing; runs an already-parsed command and renders it.
pub fn run(cli: &Cli) -> Result<Rendered> {
    let outcome = execute(cli)?;
    Ok(Rendered {
        text: render(&cli.global, &outcome)?,
        code: outcome.code,
    })
}
