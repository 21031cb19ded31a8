//! Command-line harness and std-side support for `countgauss-core`:
//! Matrix Market / CSV / LIBSVM formats, rayon drivers whose output does
//! not depend on the thread count, and the `countgauss` subcommands.

// `!(x >= 0.0)` style checks are deliberate: NaN has to fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod error;
pub mod io;
pub mod parallel;
pub mod record;

pub use cli::{execute, render, run, Cli, Command, GlobalArgs};
pub use error::{CliError, Result};
pub use record::{Metric, ResultRecord, Table};
