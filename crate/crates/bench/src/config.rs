use std::path::PathBuf;

use tierpool::{EngineConfig, MigrationPolicy, TierSpec, TierTopology};

use crate::BenchError;

pub const KEY_BYTES: usize = 8;
pub const VALUE_BYTES: usize = 120;
/// Bytes of leaf page reserved for the header and two 8-byte fence keys.
const LEAF_OVERHEAD: usize = 24 + 2 * KEY_BYTES;
const SLOT_BYTES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorkloadKind {
    /// Uniform point lookups.
    RandomRead,
    /// Zipf-skewed transactions, read-only or read-modify-write.
    MixedTxn,
}

impl WorkloadKind {
    pub fn name(self) -> &'static str {
        match self {
            WorkloadKind::RandomRead => "random-read",
            WorkloadKind::MixedTxn => "mixed-txn",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    /// Leaf pages the loaded dataset occupies.
    pub dataset_pages: usize,
    pub read_fraction: f64,
    pub zipf: f64,
    /// Keys touched per transaction.
    pub txn_keys: usize,
    pub threads: usize,
    pub seed: u64,
}

impl WorkloadSpec {
    /// Whether two specs describe the same workload (thread count aside).
    pub fn same_workload(&self, other: &WorkloadSpec) -> bool {
        self.kind == other.kind
            && self.dataset_pages == other.dataset_pages
            && self.seed == other.seed
            && self.txn_keys == other.txn_keys
            && (self.kind == WorkloadKind::RandomRead
                || (self.read_fraction == other.read_fraction && self.zipf == other.zipf))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TierSizes {
    pub local: usize,
    /// Zero gives a local-plus-disk hierarchy.
    pub remote: usize,
    pub disk: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Latencies {
    pub remote_read_ns: u64,
    pub remote_write_ns: u64,
    pub disk_read_ns: u64,
    pub disk_write_ns: u64,
    pub shootdown_ns: u64,
}

impl Default for Latencies {
    fn default() -> Self {
        let remote = TierSpec::remote(1);
        let disk = TierSpec::disk(1);
        Latencies {
            remote_read_ns: remote.read_latency_ns,
            remote_write_ns: remote.write_latency_ns,
            disk_read_ns: disk.read_latency_ns,
            disk_write_ns: disk.write_latency_ns,
            shootdown_ns: tierpool::backend::DEFAULT_SHOOTDOWN_NS,
        }
    }
}

/// When the measurement stops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop {
    Seconds(f64),
    Ops(u64),
}

/// How rows are cut.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Interval {
    Seconds(f64),
    Ops(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub tiers: TierSizes,
    pub page_size: usize,
    pub workload: WorkloadSpec,
    pub policy: MigrationPolicy,
    pub engine: EngineConfig,
    pub cost_model: bool,
    pub latencies: Latencies,
    pub stop: Stop,
    pub interval: Interval,
    pub warmup_ops: u64,
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn records_per_leaf(&self) -> usize {
        (self.page_size - LEAF_OVERHEAD) / (SLOT_BYTES + KEY_BYTES + VALUE_BYTES)
    }

    pub fn records(&self) -> u64 {
        (self.workload.dataset_pages * self.records_per_leaf()) as u64
    }

    /// Upper bound on pages the loaded tree occupies: full leaves, inner
    /// levels and the two fixed pages.
    pub fn tree_pages(&self) -> usize {
        let leaves = self.workload.dataset_pages;
        leaves + leaves / 32 + 16
    }

    pub fn topology(&self) -> TierTopology {
        let l = &self.latencies;
        let mut memory = vec![TierSpec::local(self.tiers.local)];
        if self.tiers.remote > 0 {
            memory.push(TierSpec::remote(self.tiers.remote).with_latency(l.remote_read_ns, l.remote_write_ns));
        }
        TierTopology::new(memory, TierSpec::disk(self.tiers.disk).with_latency(l.disk_read_ns, l.disk_write_ns))
            .with_page_size(self.page_size)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        self.topology().validate().map_err(|e| BenchError::Config(e.to_string()))?;
        self.policy.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        if self.page_size > 32 * 1024 {
            return bad(format!("page size {} above 32 KiB", self.page_size));
        }
        if self.workload.dataset_pages == 0 {
            return bad("dataset must be at least one page".into());
        }
        if self.tree_pages() > self.tiers.disk {
            return bad(format!(
                "dataset needs up to {} pages but the disk tier holds {}",
                self.tree_pages(),
                self.tiers.disk
            ));
        }
        if self.workload.threads == 0 {
            return bad("at least one thread is required".into());
        }
        if !(0.0..=1.0).contains(&self.workload.read_fraction) {
            return bad(format!("read fraction {} is not in [0, 1]", self.workload.read_fraction));
        }
        if self.workload.zipf.is_nan() || self.workload.zipf < 0.0 {
            return bad(format!("zipf exponent {} must be non-negative", self.workload.zipf));
        }
        if self.workload.txn_keys == 0 {
            return bad("transactions need at least one key".into());
        }
        match self.stop {
            Stop::Seconds(s) if s.is_nan() || s <= 0.0 => return bad("duration must be positive".into()),
            Stop::Ops(0) => return bad("op count must be positive".into()),
            _ => {}
        }
        match self.interval {
            Interval::Seconds(s) if s.is_nan() || s <= 0.0 => return bad("interval must be positive".into()),
            Interval::Ops(0) => return bad("interval must be positive".into()),
            _ => {}
        }
        Ok(())
    }
}

/// Parses a capacity: a plain number of pages, or a byte size with a
/// `K`, `M`, `G` suffix (binary units) converted to pages.
pub fn parse_capacity(s: &str, page_size: usize) -> Result<usize, String> {
    let s = s.trim();
    let (digits, unit) = match s.char_indices().find(|(_, c)| !c.is_ascii_digit()) {
        Some((i, _)) => s.split_at(i),
        None => (s, ""),
    };
    let n: usize = digits.parse().map_err(|_| format!("bad capacity `{s}`"))?;
    let shift = match unit.to_ascii_uppercase().trim_end_matches(['B', 'I']) {
        "" if unit.is_empty() => return Ok(n),
        "" => 0,
        "K" => 10,
        "M" => 20,
        "G" => 30,
        _ => return Err(format!("unknown size suffix in `{s}`")),
    };
    Ok((n << shift) / page_size)
}

/// Parses `LOCAL:REMOTE:DISK`.
pub fn parse_tiers(s: &str, page_size: usize) -> Result<TierSizes, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [local, remote, disk] = parts[..] else {
        return Err(format!("expected LOCAL:REMOTE:DISK, got `{s}`"));
    };
    Ok(TierSizes {
        local: parse_capacity(local, page_size)?,
        remote: parse_capacity(remote, page_size)?,
        disk: parse_capacity(disk, page_size)?,
    })
}
