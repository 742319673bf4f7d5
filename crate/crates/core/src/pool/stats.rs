use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

/// Snapshot of pool counters. Every field is monotone over the pool's life.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PoolStats {
    /// Page accesses: fixes plus validated optimistic reads.
    pub accesses: u64,
    /// Accesses served from each memory tier.
    pub hits: Vec<u64>,
    /// Accesses that read the page from disk.
    pub faults: u64,
    pub promotions: u64,
    pub demotions: u64,
    pub evictions: u64,
    pub disk_reads: u64,
    pub disk_writes: u64,
    pub migration_calls: u64,
    pub migrated_pages: u64,
    pub migration_failures: u64,
    pub shootdowns: u64,
    pub time_disk_ns: u64,
    pub time_migration_ns: u64,
    pub optimistic_retries: u64,
    /// Threshold-triggered evictions that left the tier at or above the
    /// threshold. Stays zero unless pinned pages starve the clock.
    pub threshold_violations: u64,
}

impl PoolStats {
    pub fn total_hits(&self) -> u64 {
        self.hits.iter().sum()
    }

    pub fn hits_in(&self, tier: usize) -> u64 {
        self.hits.get(tier).copied().unwrap_or(0)
    }
}

#[derive(Default)]
pub(crate) struct Counter(AtomicU64);

impl Counter {
    pub fn add(&self, n: u64) {
        if n != 0 {
            self.0.fetch_add(n, Ordering::Relaxed);
        }
    }

    pub fn inc(&self) {
        self.add(1);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

pub(crate) struct Counters {
    pub accesses: Counter,
    pub hits: Vec<Counter>,
    pub faults: Counter,
    pub promotions: Counter,
    pub demotions: Counter,
    pub evictions: Counter,
    pub migration_calls: Counter,
    pub migrated_pages: Counter,
    pub migration_failures: Counter,
    pub shootdowns: Counter,
    pub time_disk_ns: Counter,
    pub time_migration_ns: Counter,
    pub optimistic_retries: Counter,
    pub threshold_violations: Counter,
}

impl Counters {
    pub fn new(tiers: usize) -> Self {
        Counters {
            accesses: Counter::default(),
            hits: (0..tiers).map(|_| Counter::default()).collect(),
            faults: Counter::default(),
            promotions: Counter::default(),
            demotions: Counter::default(),
            evictions: Counter::default(),
            migration_calls: Counter::default(),
            migrated_pages: Counter::default(),
            migration_failures: Counter::default(),
            shootdowns: Counter::default(),
            time_disk_ns: Counter::default(),
            time_migration_ns: Counter::default(),
            optimistic_retries: Counter::default(),
            threshold_violations: Counter::default(),
        }
    }

    pub fn snapshot(&self, disk_reads: u64, disk_writes: u64) -> PoolStats {
        PoolStats {
            accesses: self.accesses.get(),
            hits: self.hits.iter().map(Counter::get).collect(),
            faults: self.faults.get(),
            promotions: self.promotions.get(),
            demotions: self.demotions.get(),
            evictions: self.evictions.get(),
            disk_reads,
            disk_writes,
            migration_calls: self.migration_calls.get(),
            migrated_pages: self.migrated_pages.get(),
            migration_failures: self.migration_failures.get(),
            shootdowns: self.shootdowns.get(),
            time_disk_ns: self.time_disk_ns.get(),
            time_migration_ns: self.time_migration_ns.get(),
            optimistic_retries: self.optimistic_retries.get(),
            threshold_violations: self.threshold_violations.get(),
        }
    }
}

/// Adds the elapsed time to `counter` on drop.
pub(crate) struct Timed<'a> {
    counter: &'a Counter,
    start: Instant,
}

impl<'a> Timed<'a> {
    pub fn new(counter: &'a Counter) -> Self {
        Timed { counter, start: Instant::now() }
    }
}

impl Drop for Timed<'_> {
    fn drop(&mut self) {
        self.counter.add(self.start.elapsed().as_nanos() as u64);
    }
}
