//! Workload driver for `tierpool`: loads a B+tree, runs point-lookup or
//! transactional workloads across worker threads and reports per-interval
//! hit, I/O, migration and time-breakdown metrics as CSV.

pub mod cli;
pub mod compare;
pub mod config;
pub mod report;
pub mod runner;
pub mod workload;

pub use compare::{compare, Comparison};
pub use config::{Interval, Latencies, RunConfig, Stop, TierSizes, WorkloadKind, WorkloadSpec};
pub use report::{Row, RunReport, CSV_HEADER};
pub use runner::{run, run_logged};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Usage(clap::Error),
    #[error(transparent)]
    Pool(#[from] tierpool::PoolError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
