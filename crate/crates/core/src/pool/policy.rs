use crate::error::ConfigError;
use crate::migration::{MigrationMode, NR_MAX_BATCHED_MIGRATION};

/// Probabilistic tier placement and batching knobs.
///
/// * `dr`: a page read from disk goes to local memory with this
///   probability, otherwise to the first remote tier.
/// * `dw`: a dirty page chosen for eviction from a remote tier is written
///   back to disk with this probability; otherwise it is spared for another
///   clock revolution, unless sparing it would leave the tier over its
///   threshold.
/// * `rr`: an access to a page in a remote tier first promotes it (and a
///   batch of neighbours) to local memory with this probability.
/// * `rw`: a batch evicted from a memory tier is demoted to the next tier
///   with this probability, otherwise written to disk.
#[derive(Clone, Debug, PartialEq)]
pub struct MigrationPolicy {
    pub dr: f64,
    pub dw: f64,
    pub rr: f64,
    pub rw: f64,
    pub utilization_threshold: f64,
    pub evict_batch: usize,
    pub promote_batch: usize,
    pub nr_max_batched_migration: usize,
}

impl Default for MigrationPolicy {
    fn default() -> Self {
        MigrationPolicy {
            dr: 1.0,
            dw: 1.0,
            rr: 1.0,
            rw: 1.0,
            utilization_threshold: 0.95,
            evict_batch: NR_MAX_BATCHED_MIGRATION,
            promote_batch: 8,
            nr_max_batched_migration: 2 * NR_MAX_BATCHED_MIGRATION,
        }
    }
}

impl MigrationPolicy {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, p) in [("dr", self.dr), ("dw", self.dw), ("rr", self.rr), ("rw", self.rw)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::Invalid(format!("{name}={p} is not a probability")));
            }
        }
        if !(self.utilization_threshold > 0.0 && self.utilization_threshold <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "utilization threshold {} outside (0, 1]",
                self.utilization_threshold
            )));
        }
        if self.evict_batch == 0 || self.promote_batch == 0 || self.nr_max_batched_migration == 0 {
            return Err(ConfigError::Invalid("batch sizes must be at least 1".into()));
        }
        Ok(())
    }

    /// Most pages a tier of `capacity` frames may hold while staying strictly
    /// below the threshold.
    pub fn max_resident(&self, capacity: usize) -> usize {
        let limit = self.utilization_threshold * capacity as f64;
        let ceil = limit.ceil() as usize;
        ceil.saturating_sub(1)
    }
}

/// How migrations between memory tiers are issued.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EngineKind {
    /// Batched, caller-selected cap and mode, optimistic failure handling.
    MovePages2,
    /// Batched with cap 512, synchronous, abort on failure.
    Legacy,
    /// One page per call.
    Mbind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub kind: EngineKind,
    pub mode: MigrationMode,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { kind: EngineKind::MovePages2, mode: MigrationMode::Sync }
    }
}
