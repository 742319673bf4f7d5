use std::io::Write;
use std::path::Path;

use tierpool::PoolStats;

use crate::BenchError;

pub const CSV_HEADER: [&str; 11] = [
    "elapsed_s",
    "ops",
    "tier0_hits",
    "tier1_hits",
    "disk_reads",
    "disk_writes",
    "migrations",
    "shootdowns",
    "time_disk_pct",
    "time_migration_pct",
    "time_other_pct",
];

/// One interval. Counts are deltas over the interval; `elapsed_s` is the
/// time since measurement started at the end of the interval.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Row {
    pub elapsed_s: f64,
    pub ops: u64,
    pub tier0_hits: u64,
    pub tier1_hits: u64,
    pub disk_reads: u64,
    pub disk_writes: u64,
    pub migrations: u64,
    pub shootdowns: u64,
    pub time_disk_pct: f64,
    pub time_migration_pct: f64,
    pub time_other_pct: f64,
    /// Not written to CSV; kept for the accounting identity.
    pub accesses: u64,
    pub faults: u64,
}

/// A point-in-time reading that rows are cut from.
#[derive(Clone, Debug)]
pub struct Sample {
    pub elapsed_s: f64,
    pub ops: u64,
    pub stats: PoolStats,
}

impl Row {
    /// The interval between two samples. `threads` scales wall time into
    /// the thread-time that disk and migration time are shares of.
    pub fn between(prev: &Sample, next: &Sample, threads: usize) -> Row {
        let (a, b) = (&prev.stats, &next.stats);
        let d = |x: u64, y: u64| y.saturating_sub(x);
        let wall_ns = (next.elapsed_s - prev.elapsed_s).max(0.0) * 1e9 * threads as f64;
        let disk = d(a.time_disk_ns, b.time_disk_ns) as f64;
        let migration = d(a.time_migration_ns, b.time_migration_ns) as f64;
        let (time_disk_pct, time_migration_pct, time_other_pct) = breakdown(disk, migration, wall_ns);
        Row {
            elapsed_s: next.elapsed_s,
            ops: d(prev.ops, next.ops),
            tier0_hits: d(a.hits_in(0), b.hits_in(0)),
            tier1_hits: d(a.hits_in(1), b.hits_in(1)),
            disk_reads: d(a.disk_reads, b.disk_reads),
            disk_writes: d(a.disk_writes, b.disk_writes),
            migrations: d(a.migrated_pages, b.migrated_pages),
            shootdowns: d(a.shootdowns, b.shootdowns),
            time_disk_pct,
            time_migration_pct,
            time_other_pct,
            accesses: d(a.accesses, b.accesses),
            faults: d(a.faults, b.faults),
        }
    }

    pub fn pct_sum(&self) -> f64 {
        self.time_disk_pct + self.time_migration_pct + self.time_other_pct
    }

    /// The row without wall-clock columns.
    pub fn counts(&self) -> [u64; 9] {
        [
            self.ops,
            self.tier0_hits,
            self.tier1_hits,
            self.disk_reads,
            self.disk_writes,
            self.migrations,
            self.shootdowns,
            self.accesses,
            self.faults,
        ]
    }

    fn record(&self) -> [String; 11] {
        [
            format!("{:.3}", self.elapsed_s),
            self.ops.to_string(),
            self.tier0_hits.to_string(),
            self.tier1_hits.to_string(),
            self.disk_reads.to_string(),
            self.disk_writes.to_string(),
            self.migrations.to_string(),
            self.shootdowns.to_string(),
            format!("{:.2}", self.time_disk_pct),
            format!("{:.2}", self.time_migration_pct),
            format!("{:.2}", self.time_other_pct),
        ]
    }
}

/// Disk, migration and remaining shares of `total_ns`. Measured times can
/// overlap or overshoot the wall clock; shares are then scaled to fit.
pub fn breakdown(disk_ns: f64, migration_ns: f64, total_ns: f64) -> (f64, f64, f64) {
    let busy = disk_ns + migration_ns;
    let total = total_ns.max(busy);
    if total <= 0.0 {
        return (0.0, 0.0, 100.0);
    }
    let disk = 100.0 * disk_ns / total;
    let migration = 100.0 * migration_ns / total;
    (disk, migration, (100.0 - disk - migration).max(0.0))
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub rows: Vec<Row>,
    /// The whole measured period as one row.
    pub total: Row,
    pub elapsed_s: f64,
    pub ops_per_sec: f64,
    /// Hits per memory tier over the measured period.
    pub hits: Vec<u64>,
    pub updates: u64,
}

impl RunReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(row.record())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<(), BenchError> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn summary(&self) -> String {
        let t = &self.total;
        format!(
            "{} ops in {:.2}s ({:.0} ops/s); hits {:?}, disk reads {}, disk writes {}, migrated {}, shootdowns {}; \
             time disk {:.1}% migration {:.1}% other {:.1}%",
            t.ops,
            self.elapsed_s,
            self.ops_per_sec,
            self.hits,
            t.disk_reads,
            t.disk_writes,
            t.migrations,
            t.shootdowns,
            t.time_disk_pct,
            t.time_migration_pct,
            t.time_other_pct
        )
    }
}
