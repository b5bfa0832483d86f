//! Synthetic benchmarks and the dense-oracle verification suite.

mod models;
mod runner;
mod verify;

pub use models::SyntheticModel;
pub use runner::{run, write_csv, BenchOp, CommKind, Outcome, PhaseRow, RunConfig, RunReport, CSV_HEADER};
pub use verify::{verify, Check};
