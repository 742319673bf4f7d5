use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tierpool::{EngineConfig, EngineKind, MigrationMode, MigrationPolicy};

use crate::config::{parse_capacity, parse_tiers, Interval, Latencies, RunConfig, Stop, WorkloadKind, WorkloadSpec};
use crate::BenchError;

#[derive(Parser, Debug)]
#[command(name = "tierpool-bench", version, about = "Drive tierpool with B+tree workloads and report per-interval metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load a dataset, run a workload and print or write per-interval rows.
    Run(Box<RunArgs>),
    /// Run two configurations of the same workload and report the ratio.
    ///
    /// Flags after `--` apply to both sides; `--a` and `--b` hold extra
    /// flags for each side, e.g. `--a "--engine=mbind" --b "--engine=mp2"`.
    Compare(CompareArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum WorkloadArg {
    RandomRead,
    MixedTxn,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Async,
    Sync,
    Synclight,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Mp2,
    Legacy,
    Mbind,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Args, Debug, Clone)]
#[command(args_override_self = true)]
pub struct RunArgs {
    /// Capacities as LOCAL:REMOTE:DISK, in pages or with a K/M/G suffix.
    /// REMOTE=0 runs without a remote tier.
    #[arg(long, default_value = "16M:32M:96M")]
    pub tiers: String,
    #[arg(long, default_value_t = 4096)]
    pub page_size: usize,
    #[arg(long, value_enum, default_value = "random-read")]
    pub workload: WorkloadArg,
    /// Dataset size in leaf pages or with a K/M/G suffix.
    #[arg(long, default_value = "64M")]
    pub dataset: String,
    /// Share of read-only transactions (mixed-txn).
    #[arg(long, default_value_t = 0.7)]
    pub read_fraction: f64,
    /// Zipf exponent of the key distribution (mixed-txn).
    #[arg(long, default_value_t = 0.8)]
    pub zipf: f64,
    /// Keys per transaction (mixed-txn).
    #[arg(long, default_value_t = 4)]
    pub txn_keys: usize,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Measurement length in seconds. Defaults to 10 unless --ops is given.
    #[arg(long, conflicts_with = "ops")]
    pub duration: Option<f64>,
    /// Stop after this many operations instead of after a duration.
    #[arg(long)]
    pub ops: Option<u64>,
    /// Seconds per CSV row.
    #[arg(long, default_value_t = 1.0, conflicts_with = "interval_ops")]
    pub interval: f64,
    /// Operations per CSV row, instead of a time interval.
    #[arg(long)]
    pub interval_ops: Option<u64>,
    /// Single-threaded operations run before measuring.
    #[arg(long, default_value_t = 0)]
    pub warmup_ops: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Probability a page read from disk is placed in local memory.
    #[arg(long, default_value_t = 1.0)]
    pub dr: f64,
    /// Probability a dirty remote victim is written back rather than spared.
    #[arg(long, default_value_t = 1.0)]
    pub dw: f64,
    /// Probability a remote access promotes the page first.
    #[arg(long, default_value_t = 1.0)]
    pub rr: f64,
    /// Probability an evicted batch is demoted rather than written to disk.
    #[arg(long, default_value_t = 1.0)]
    pub rw: f64,
    #[arg(long, default_value_t = 0.95)]
    pub threshold: f64,
    #[arg(long, default_value_t = 512)]
    pub evict_batch: usize,
    #[arg(long, default_value_t = 8)]
    pub promote_batch: usize,
    /// Pages per migration chunk; each chunk costs one shootdown.
    #[arg(long, default_value_t = 1024)]
    pub batch_cap: usize,
    #[arg(long, value_enum, default_value = "sync")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "mp2")]
    pub engine: EngineArg,
    #[arg(long, value_enum, default_value = "on")]
    pub cost_model: Switch,
    #[arg(long)]
    pub remote_read_ns: Option<u64>,
    #[arg(long)]
    pub remote_write_ns: Option<u64>,
    #[arg(long)]
    pub disk_read_ns: Option<u64>,
    #[arg(long)]
    pub disk_write_ns: Option<u64>,
    #[arg(long)]
    pub shootdown_ns: Option<u64>,
    /// Write rows here as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Extra flags for configuration A.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub a: String,
    /// Extra flags for configuration B.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub b: String,
    /// Write the comparison table here as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Flags shared by both configurations.
    #[arg(last = true)]
    pub common: Vec<String>,
}

#[derive(Parser, Debug)]
struct Side {
    #[command(flatten)]
    run: RunArgs,
}

impl CompareArgs {
    /// The two run configurations: common flags, then side-specific ones,
    /// later flags winning.
    pub fn configs(&self) -> Result<(RunConfig, RunConfig), BenchError> {
        let side = |extra: &str| -> Result<RunConfig, BenchError> {
            let argv = std::iter::once("compare".to_string())
                .chain(self.common.iter().cloned())
                .chain(extra.split_whitespace().map(str::to_string));
            Side::try_parse_from(argv).map_err(|e| BenchError::Config(e.to_string()))?.run.to_config()
        };
        Ok((side(&self.a)?, side(&self.b)?))
    }
}

impl RunArgs {
    pub fn to_config(&self) -> Result<RunConfig, BenchError> {
        let bad = |e: String| BenchError::Config(e);
        if !self.page_size.is_power_of_two() || self.page_size < 512 {
            return Err(bad(format!("page size {} must be a power of two of at least 512", self.page_size)));
        }
        let tiers = parse_tiers(&self.tiers, self.page_size).map_err(bad)?;
        let dataset_pages = parse_capacity(&self.dataset, self.page_size).map_err(bad)?;
        let defaults = Latencies::default();
        let latencies = Latencies {
            remote_read_ns: self.remote_read_ns.unwrap_or(defaults.remote_read_ns),
            remote_write_ns: self.remote_write_ns.unwrap_or(defaults.remote_write_ns),
            disk_read_ns: self.disk_read_ns.unwrap_or(defaults.disk_read_ns),
            disk_write_ns: self.disk_write_ns.unwrap_or(defaults.disk_write_ns),
            shootdown_ns: self.shootdown_ns.unwrap_or(defaults.shootdown_ns),
        };
        let cfg = RunConfig {
            tiers,
            page_size: self.page_size,
            workload: WorkloadSpec {
                kind: match self.workload {
                    WorkloadArg::RandomRead => WorkloadKind::RandomRead,
                    WorkloadArg::MixedTxn => WorkloadKind::MixedTxn,
                },
                dataset_pages,
                read_fraction: self.read_fraction,
                zipf: self.zipf,
                txn_keys: self.txn_keys,
                threads: self.threads,
                seed: self.seed,
            },
            policy: MigrationPolicy {
                dr: self.dr,
                dw: self.dw,
                rr: self.rr,
                rw: self.rw,
                utilization_threshold: self.threshold,
                evict_batch: self.evict_batch,
                promote_batch: self.promote_batch,
                nr_max_batched_migration: self.batch_cap,
            },
            engine: EngineConfig {
                kind: match self.engine {
                    EngineArg::Mp2 => EngineKind::MovePages2,
                    EngineArg::Legacy => EngineKind::Legacy,
                    EngineArg::Mbind => EngineKind::Mbind,
                },
                mode: match self.mode {
                    ModeArg::Async => MigrationMode::Async,
                    ModeArg::Sync => MigrationMode::Sync,
                    ModeArg::Synclight => MigrationMode::SyncLight,
                },
            },
            cost_model: self.cost_model == Switch::On,
            latencies,
            stop: match (self.ops, self.duration) {
                (Some(n), _) => Stop::Ops(n),
                (None, d) => Stop::Seconds(d.unwrap_or(10.0)),
            },
            interval: match self.interval_ops {
                Some(k) => Interval::Ops(k),
                None => Interval::Seconds(self.interval),
            },
            warmup_ops: self.warmup_ops,
            csv: self.csv.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `argv` and runs the selected command, writing human output to
/// `out`.
pub fn main_with<I, T, W>(argv: I, out: &mut W) -> Result<(), BenchError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: std::io::Write,
{
    let cli = Cli::try_parse_from(argv).map_err(BenchError::Usage)?;
    match cli.command {
        Command::Run(args) => {
            let cfg = args.to_config()?;
            let report = crate::runner::run(&cfg)?;
            match &cfg.csv {
                Some(path) => report.write_csv_file(path)?,
                None => report.write_csv(&mut *out)?,
            }
            writeln!(out, "{}", report.summary())?;
        }
        Command::Compare(args) => {
            let (a, b) = args.configs()?;
            let cmp = crate::compare::compare(&a, &b)?;
            write!(out, "{}", cmp.render())?;
            if let Some(path) = &args.csv {
                cmp.write_csv_file(path)?;
            }
        }
    }
    Ok(())
}
