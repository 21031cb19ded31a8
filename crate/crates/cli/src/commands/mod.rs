//! One module per subcommand. Each `run` returns an [`Outcome`]; rendering
//! and exit codes are handled by the caller.

pub mod bench;
pub mod counterexample;
pub mod generate;
pub mod nmf_run;
pub mod nmf_synthetic;
pub mod svm_check;
pub mod verify;

use std::time::Instant;

use countgauss_core::SeededRng;

use crate::record::{ResultRecord, Table};

/// Settings shared by every subcommand.
#[derive(Clone, Copy, Debug)]
pub struct Ctx {
    pub seed: u64,
}

impl Ctx {
    pub fn rng(&self) -> SeededRng {
        SeededRng::new(self.seed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Output {
    Record(ResultRecord),
    Table {
        table: Table,
        /// Columns holding wall-clock measurements.
        timing_columns: Vec<&'static str>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub output: Output,
    /// 0 when every asserted check passed, 1 otherwise.
    pub code: i32,
}

impl Outcome {
    pub fn record(rec: ResultRecord) -> Self {
        let code = if rec.all_pass() { 0 } else { 1 };
        Outcome {
            output: Output::Record(rec),
            code,
        }
    }
}

/// Runs `f` and returns its value with the elapsed seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64())
}

/// Median of `reps` timed runs after `warmup` untimed ones.
pub fn median_time(warmup: usize, reps: usize, mut f: impl FnMut()) -> f64 {
    for _ in 0..warmup {
        f();
    }
    let mut t: Vec<f64> = (0..reps.max(1)).map(|_| timed(&mut f).1).collect();
    t.sort_by(f64::total_cmp);
    let mid = t.len() / 2;
    if t.len() % 2 == 1 {
        t[mid]
    } else {
        0.5 * (t[mid - 1] + t[mid])
    }
}
