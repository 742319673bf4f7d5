//! Batched inter-tier page migration.
//!
//! Three paths over [`Backend::retarget_frame`]:
//!
//! * [`MigrationEngine::move_pages2`]: pages are scanned in request order;
//!   each maximal run of consecutive pages with the same target forms a
//!   round. A round is flushed in chunks of at most `max_batch` pages, and
//!   every chunk costs one TLB shootdown. A per-page error ends the current
//!   round (flushing what it accumulated), is recorded in the status array,
//!   and scanning continues with a fresh round.
//! * [`MigrationEngine::move_pages_legacy`]: same round structure with the
//!   historical fixed cap of 512 and synchronous mode, but the first error
//!   flushes the accumulated round and skips every remaining page.
//! * [`MigrationEngine::mbind_single`]: one page per call, one shootdown per
//!   remap.
//!
//! Callers must hold every page in the request exclusively.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::backend::{Backend, Placement};
use crate::error::BackendError;
use crate::exec::Execution;
use crate::page::PageId;
use crate::state::TierId;

/// Historical kernel batch cap, used by the legacy path.
pub const NR_MAX_BATCHED_MIGRATION: usize = 512;

/// Attempts on a busy page in synchronous modes.
pub const SYNC_ATTEMPTS: u32 = 3;

/// Per-page status codes. Non-negative statuses are the tier the page ended
/// up in.
pub mod status {
    pub const ACCESS_FAILURE: i32 = -1;
    pub const INVALID_TARGET: i32 = -2;
    pub const BUSY: i32 = -3;
    pub const TIER_FULL: i32 = -4;
    pub const SKIPPED: i32 = -5;
    /// Initial value; never left in a returned status array.
    pub const UNSET: i32 = i32::MIN;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MigrationMode {
    /// Busy pages fail immediately.
    Async,
    /// Busy pages and pages under writeback are retried.
    Sync,
    /// Busy pages are retried; pages under writeback fail immediately.
    SyncLight,
}

impl MigrationMode {
    fn retries(self, fault: Fault) -> bool {
        match fault {
            Fault::Busy { .. } => matches!(self, MigrationMode::Sync | MigrationMode::SyncLight),
            Fault::WritebackBusy { .. } => self == MigrationMode::Sync,
            Fault::AccessFailure | Fault::InvalidTarget => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MigrationRequest {
    pub pages: Vec<PageId>,
    pub targets: Vec<TierId>,
    pub mode: MigrationMode,
    pub max_batch: usize,
}

impl MigrationRequest {
    /// Every page goes to the same tier.
    pub fn uniform(pages: Vec<PageId>, target: TierId, mode: MigrationMode, max_batch: usize) -> Self {
        let targets = vec![target; pages.len()];
        MigrationRequest { pages, targets, mode, max_batch }
    }

    fn validate(&self) -> Result<(), MigrationError> {
        if self.pages.len() != self.targets.len() {
            return Err(MigrationError::LengthMismatch { pages: self.pages.len(), targets: self.targets.len() });
        }
        if self.max_batch == 0 {
            return Err(MigrationError::ZeroBatch);
        }
        let mut seen = HashSet::with_capacity(self.pages.len());
        for &p in &self.pages {
            if !seen.insert(p) {
                return Err(MigrationError::DuplicatePage(p));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MigrationOutcome {
    pub status: Vec<i32>,
    /// Number of non-empty rounds flushed.
    pub rounds: usize,
    /// Pages queued in each flushed round, in order.
    pub round_sizes: Vec<usize>,
    pub shootdowns: u64,
    pub migrated: usize,
    pub failed: usize,
}

impl MigrationOutcome {
    fn finish(mut self) -> Self {
        debug_assert!(self.status.iter().all(|&s| s != status::UNSET));
        self.migrated = self.status.iter().filter(|&&s| s >= 0).count();
        self.failed = self.status.len() - self.migrated;
        self
    }

    pub fn succeeded(&self, index: usize) -> bool {
        self.status[index] >= 0
    }
}

/// Whole-request errors. Per-page errors only appear in the status array.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MigrationError {
    #[error("{pages} pages but {targets} targets")]
    LengthMismatch { pages: usize, targets: usize },
    #[error("{0} appears more than once")]
    DuplicatePage(PageId),
    #[error("batch cap must be at least 1")]
    ZeroBatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    AccessFailure,
    InvalidTarget,
    /// The page reports busy for its first `clears_after` attempts.
    Busy { clears_after: u32 },
    /// Like `Busy`, but the page is under writeback.
    WritebackBusy { clears_after: u32 },
}

impl Fault {
    pub const BUSY_FOREVER: Fault = Fault::Busy { clears_after: u32::MAX };
}

/// Per-page fault rules for exercising failure handling.
#[derive(Clone, Debug, Default)]
pub struct FailureInjector {
    rules: HashMap<PageId, Fault>,
}

impl FailureInjector {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with(mut self, pid: PageId, fault: Fault) -> Self {
        self.rules.insert(pid, fault);
        self
    }

    /// Assigns a random fault to each of `pages` with probability `rate`.
    /// Same seed, same rules.
    pub fn seeded(seed: u64, pages: &[PageId], rate: f64) -> Self {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut rules = HashMap::new();
        for &p in pages {
            if rng.random_bool(rate) {
                let fault = match rng.random_range(0..4) {
                    0 => Fault::AccessFailure,
                    1 => Fault::InvalidTarget,
                    2 => Fault::Busy { clears_after: rng.random_range(0..5) },
                    _ => Fault::WritebackBusy { clears_after: rng.random_range(0..5) },
                };
                rules.insert(p, fault);
            }
        }
        FailureInjector { rules }
    }

    pub fn fault(&self, pid: PageId) -> Option<Fault> {
        self.rules.get(&pid).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

pub struct MigrationEngine<'a> {
    backend: &'a Backend,
    exec: Execution,
}

impl<'a> MigrationEngine<'a> {
    pub fn new(backend: &'a Backend) -> Self {
        MigrationEngine { backend, exec: Execution::default() }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Checks made while scanning, before a page is queued.
    fn precheck(&self, pid: PageId, target: TierId, inj: &FailureInjector) -> Result<Option<TierId>, i32> {
        if pid.slot() >= self.backend.slot_count() {
            return Err(status::ACCESS_FAILURE);
        }
        match inj.fault(pid) {
            Some(Fault::AccessFailure) => return Err(status::ACCESS_FAILURE),
            Some(Fault::InvalidTarget) => return Err(status::INVALID_TARGET),
            _ => {}
        }
        if target.index() >= self.backend.memory_tiers() {
            return Err(status::INVALID_TARGET);
        }
        match self.backend.placement_of(pid) {
            Placement::OnDisk => Err(status::ACCESS_FAILURE),
            Placement::InMemory { tier, .. } if tier == target => Ok(Some(tier)),
            Placement::InMemory { .. } => Ok(None),
        }
    }

    fn migrate_one(&self, pid: PageId, target: TierId, mode: MigrationMode, inj: &FailureInjector) -> i32 {
        let fault = inj.fault(pid);
        let mut attempt = 0u32;
        loop {
            let busy = match fault {
                Some(Fault::Busy { clears_after }) | Some(Fault::WritebackBusy { clears_after }) => {
                    attempt < clears_after
                }
                _ => false,
            };
            if busy {
                attempt += 1;
                if mode.retries(fault.unwrap()) && attempt < SYNC_ATTEMPTS {
                    continue;
                }
                return status::BUSY;
            }
            return match self.backend.retarget_frame(pid, target) {
                Ok(_) => target.0 as i32,
                Err(BackendError::TierFull(_)) => status::TIER_FULL,
                Err(BackendError::NoSuchTier(_)) => status::INVALID_TARGET,
                Err(_) => status::ACCESS_FAILURE,
            };
        }
    }

    /// Migrates one round, `cap` pages per shootdown. Returns whether any page
    /// failed.
    fn flush(
        &self,
        req: &MigrationRequest,
        round: &mut Vec<usize>,
        cap: usize,
        mode: MigrationMode,
        inj: &FailureInjector,
        out: &mut MigrationOutcome,
    ) -> bool {
        if round.is_empty() {
            return false;
        }
        out.rounds += 1;
        out.round_sizes.push(round.len());
        let mut any_failed = false;
        for chunk in round.chunks(cap) {
            let codes = self.exec.map(chunk, |&i| self.migrate_one(req.pages[i], req.targets[i], mode, inj));
            for (&i, code) in chunk.iter().zip(codes) {
                any_failed |= code < 0;
                out.status[i] = code;
            }
            out.shootdowns += 1;
            self.backend.cost().charge_shootdown();
        }
        round.clear();
        any_failed
    }

    fn run(
        &self,
        req: &MigrationRequest,
        inj: &FailureInjector,
        cap: usize,
        mode: MigrationMode,
        abort_on_failure: bool,
    ) -> Result<MigrationOutcome, MigrationError> {
        req.validate()?;
        let n = req.pages.len();
        let mut out = MigrationOutcome { status: vec![status::UNSET; n], ..Default::default() };
        let mut round: Vec<usize> = Vec::new();
        let mut current: Option<TierId> = None;
        let mut i = 0;
        while i < n {
            let (pid, target) = (req.pages[i], req.targets[i]);
            match self.precheck(pid, target, inj) {
                Err(code) => {
                    out.status[i] = code;
                    self.flush(req, &mut round, cap, mode, inj, &mut out);
                    current = None;
                    if abort_on_failure {
                        out.status[i + 1..].fill(status::SKIPPED);
                        return Ok(out.finish());
                    }
                }
                Ok(already) => {
                    if current != Some(target) {
                        let failed = self.flush(req, &mut round, cap, mode, inj, &mut out);
                        if failed && abort_on_failure {
                            out.status[i..].fill(status::SKIPPED);
                            return Ok(out.finish());
                        }
                        current = Some(target);
                    }
                    match already {
                        Some(t) => out.status[i] = t.0 as i32,
                        None => round.push(i),
                    }
                }
            }
            i += 1;
        }
        self.flush(req, &mut round, cap, mode, inj, &mut out);
        Ok(out.finish())
    }

    /// Batched migration with a caller-chosen cap and mode and optimistic
    /// per-page failure handling.
    pub fn move_pages2(
        &self,
        req: &MigrationRequest,
        inj: &FailureInjector,
    ) -> Result<MigrationOutcome, MigrationError> {
        self.run(req, inj, req.max_batch, req.mode, false)
    }

    /// Batched migration with the historical behaviour: cap 512, synchronous,
    /// abort on the first failure. `req.mode` and `req.max_batch` are ignored.
    pub fn move_pages_legacy(
        &self,
        req: &MigrationRequest,
        inj: &FailureInjector,
    ) -> Result<MigrationOutcome, MigrationError> {
        self.run(req, inj, NR_MAX_BATCHED_MIGRATION, MigrationMode::Sync, true)
    }

    /// Migrates a single page; a successful remap costs one shootdown.
    pub fn mbind_single(&self, pid: PageId, target: TierId, inj: &FailureInjector) -> Result<TierId, i32> {
        if let Some(t) = self.precheck(pid, target, inj)? {
            return Ok(t);
        }
        let code = self.migrate_one(pid, target, MigrationMode::Sync, inj);
        if code < 0 {
            return Err(code);
        }
        self.backend.cost().charge_shootdown();
        Ok(target)
    }

    /// A request served by one [`MigrationEngine::mbind_single`] call per
    /// page. Each call is reported as its own round.
    pub fn mbind_each(
        &self,
        req: &MigrationRequest,
        inj: &FailureInjector,
    ) -> Result<MigrationOutcome, MigrationError> {
        req.validate()?;
        let mut out = MigrationOutcome { status: vec![status::UNSET; req.pages.len()], ..Default::default() };
        for (i, (&pid, &target)) in req.pages.iter().zip(&req.targets).enumerate() {
            let was = self.backend.placement_of(pid);
            out.status[i] = match self.mbind_single(pid, target, inj) {
                Ok(t) => {
                    if was.tier() != Some(t) {
                        out.rounds += 1;
                        out.round_sizes.push(1);
                        out.shootdowns += 1;
                    }
                    t.0 as i32
                }
                Err(code) => code,
            };
        }
        Ok(out.finish())
    }
}
