//! The tiered buffer pool.
//!
//! Every page has a fixed slot (its [`PageId`]) and a 64-bit state word. A
//! page is either evicted (disk only) or backed by a frame in exactly one
//! memory tier; each memory tier keeps a [`ResidentSet`] of its pages and a
//! clock hand over it.
//!
//! Frames are admitted into a tier under that tier's admission latch. An
//! admission that would take the tier to its utilization threshold first
//! runs a batch eviction, so a tier's occupancy stays strictly below the
//! threshold. Admission latches are only ever taken in increasing tier
//! order (evictions flow downwards), and page locks are only acquired by
//! compare-and-swap during clock scans, which never wait.

mod policy;
mod resident;
mod stats;

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use rand::Rng;

pub use policy::{EngineConfig, EngineKind, MigrationPolicy};
pub use resident::ResidentSet;
pub use stats::PoolStats;

use crate::backend::{Backend, Placement, TierTopology};
use crate::error::{BackendError, ConfigError, PoolError, Result};
use crate::exec::Execution;
use crate::migration::{FailureInjector, MigrationEngine, MigrationOutcome, MigrationRequest};
use crate::page::{PageId, PageView, PageViewMut};
use crate::state::{LockState, StateLayout, StateWord, TierId, Transition, MAX_SHARED};
use stats::{Counters, Timed};

/// How long a fix keeps retrying before reporting a timeout.
const FIX_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Clone, Debug)]
pub struct PoolConfig {
    pub topology: TierTopology,
    pub policy: MigrationPolicy,
    pub engine: EngineConfig,
    pub execution: Execution,
    /// Flat disk image; in-memory disk when `None`.
    pub disk_path: Option<PathBuf>,
    pub injector: FailureInjector,
    /// Keep a log of placement changes (see [`BufferPool::take_events`]).
    pub record_events: bool,
}

impl PoolConfig {
    pub fn new(topology: TierTopology) -> Self {
        PoolConfig {
            topology,
            policy: MigrationPolicy::default(),
            engine: EngineConfig::default(),
            execution: Execution::default(),
            disk_path: None,
            injector: FailureInjector::none(),
            record_events: false,
        }
    }

    pub fn policy(mut self, policy: MigrationPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn engine(mut self, engine: EngineConfig) -> Self {
        self.engine = engine;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccessMode {
    Shared,
    Exclusive,
}

/// Placement changes, in the order the pool applied them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolEvent {
    FaultIn { pid: PageId, tier: TierId },
    Migrated { pid: PageId, from: TierId, to: TierId },
    Evicted { pid: PageId, from: TierId, written: bool },
}

#[derive(Clone, Copy)]
enum Access {
    Hit(TierId),
    Fault,
}

pub struct BufferPool {
    backend: Backend,
    layout: StateLayout,
    states: Box<[AtomicU64]>,
    dirty: Box<[AtomicBool]>,
    resident: Vec<Mutex<ResidentSet>>,
    claimed: Vec<AtomicUsize>,
    admission: Vec<Mutex<()>>,
    limits: Vec<usize>,
    policy: MigrationPolicy,
    engine: EngineConfig,
    execution: Execution,
    injector: FailureInjector,
    counters: Counters,
    events: Option<Mutex<Vec<PoolEvent>>>,
}

impl BufferPool {
    pub fn new(config: PoolConfig) -> Result<Self> {
        config.policy.validate()?;
        let backend = match &config.disk_path {
            Some(path) => Backend::reserve_with_file(config.topology.clone(), path)?,
            None => Backend::reserve(config.topology.clone())?,
        };
        let layout = StateLayout::new(config.topology.tiers()).map_err(ConfigError::from)?;
        let memory = config.topology.memory_tiers();
        let limits: Vec<usize> = config
            .topology
            .memory
            .iter()
            .map(|t| config.policy.max_resident(t.capacity_pages))
            .collect();
        if let Some(t) = limits.iter().position(|&l| l == 0) {
            return Err(ConfigError::Invalid(format!(
                "memory tier {t} cannot hold a page below the {} utilization threshold",
                config.policy.utilization_threshold
            ))
            .into());
        }
        let slots = backend.slot_count();
        let evicted = layout.evicted(0).bits();
        Ok(BufferPool {
            layout,
            states: (0..slots).map(|_| AtomicU64::new(evicted)).collect(),
            dirty: (0..slots).map(|_| AtomicBool::new(false)).collect(),
            resident: config
                .topology
                .memory
                .iter()
                .map(|t| Mutex::new(ResidentSet::with_capacity(t.capacity_pages)))
                .collect(),
            claimed: (0..memory).map(|_| AtomicUsize::new(0)).collect(),
            admission: (0..memory).map(|_| Mutex::new(())).collect(),
            limits,
            policy: config.policy,
            engine: config.engine,
            execution: config.execution,
            injector: config.injector,
            counters: Counters::new(memory),
            events: config.record_events.then(|| Mutex::new(Vec::new())),
            backend,
        })
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn policy(&self) -> &MigrationPolicy {
        &self.policy
    }

    pub fn engine(&self) -> EngineConfig {
        self.engine
    }

    pub fn slot_count(&self) -> usize {
        self.states.len()
    }

    pub fn memory_tiers(&self) -> usize {
        self.resident.len()
    }

    /// Largest number of pages `tier` may hold.
    pub fn tier_limit(&self, tier: TierId) -> usize {
        self.limits[tier.index()]
    }

    /// Pages admitted into `tier`, including in-flight admissions.
    pub fn occupancy(&self, tier: TierId) -> usize {
        self.claimed[tier.index()].load(Ordering::SeqCst)
    }

    pub fn resident_count(&self, tier: TierId) -> usize {
        self.resident[tier.index()].lock().len()
    }

    pub fn state(&self, pid: PageId) -> StateWord {
        StateWord(self.states[pid.slot()].load(Ordering::SeqCst))
    }

    pub fn placement(&self, pid: PageId) -> Placement {
        self.backend.placement_of(pid)
    }

    pub fn is_dirty(&self, pid: PageId) -> bool {
        self.dirty[pid.slot()].load(Ordering::SeqCst)
    }

    pub fn stats(&self) -> PoolStats {
        let b = self.backend.stats();
        self.counters.snapshot(b.disk_reads, b.disk_writes)
    }

    /// Drains the placement-change log. Empty unless `record_events` is set.
    pub fn take_events(&self) -> Vec<PoolEvent> {
        self.events.as_ref().map(|e| std::mem::take(&mut *e.lock())).unwrap_or_default()
    }

    fn record(&self, event: PoolEvent) {
        if let Some(e) = &self.events {
            e.lock().push(event);
        }
    }

    fn cell(&self, pid: PageId) -> &AtomicU64 {
        &self.states[pid.slot()]
    }

    fn check_pid(&self, pid: PageId) -> Result<()> {
        if pid.slot() < self.states.len() {
            Ok(())
        } else {
            Err(PoolError::OutOfRange(pid))
        }
    }

    /// Applies an edge that cannot race: the caller holds the page exclusively.
    fn apply_owned(&self, pid: PageId, edge: Transition) {
        let cell = self.cell(pid);
        let current = StateWord(cell.load(Ordering::SeqCst));
        self.layout
            .try_apply(cell, current, edge)
            .unwrap_or_else(|_| panic!("{pid}: {edge:?} refused on owned page {current:?}"));
    }

    fn unlock_clean(&self, pid: PageId) {
        self.apply_owned(pid, Transition::UnlockExclusive { dirty: false });
    }

    fn last_memory_tier(&self) -> TierId {
        TierId((self.memory_tiers() - 1) as u8)
    }

    fn fault_target<R: Rng + ?Sized>(&self, rng: &mut R) -> TierId {
        if self.memory_tiers() == 1 || rng.random_bool(self.policy.dr) {
            TierId::LOCAL
        } else {
            TierId(1)
        }
    }

    fn finish_access(&self, access: Access) {
        self.counters.accesses.inc();
        match access {
            Access::Hit(t) => self.counters.hits[t.index()].inc(),
            Access::Fault => self.counters.faults.inc(),
        }
    }

    /// Locks `pid` in `mode`, reading it from disk if needed.
    ///
    /// A page found in a remote tier is first promoted to local memory (with
    /// a batch of its neighbours) with probability `rr`; otherwise it is
    /// accessed in place.
    pub fn fix<R: Rng + ?Sized>(&self, pid: PageId, mode: AccessMode, rng: &mut R) -> Result<PageGuard<'_>> {
        self.check_pid(pid)?;
        let mut backoff = Backoff::new(pid);
        let mut access: Option<Access> = None;
        let mut promote: Option<bool> = None;
        loop {
            let cell = self.cell(pid);
            let word = StateWord(cell.load(Ordering::SeqCst));
            let st = self.layout.decode(word);
            match st.lock {
                LockState::Evicted => {
                    let target = self.fault_target(rng);
                    if self.layout.try_apply(cell, word, Transition::FaultIn(target)).is_ok() {
                        self.fault_in(pid, target, false, rng)?;
                        access.get_or_insert(Access::Fault);
                        promote = Some(false);
                        if mode == AccessMode::Exclusive {
                            return Ok(self.exclusive_guard(pid, access, false));
                        }
                        self.unlock_clean(pid);
                        continue;
                    }
                }
                LockState::Unlocked | LockState::Marked => {
                    let wants_promotion = st.tier != TierId::LOCAL
                        && *promote.get_or_insert_with(|| rng.random_bool(self.policy.rr));
                    if mode == AccessMode::Exclusive || wants_promotion || st.lock == LockState::Marked {
                        if self.layout.try_apply(cell, word, Transition::LockExclusive).is_ok() {
                            access.get_or_insert(Access::Hit(st.tier));
                            if wants_promotion {
                                promote = Some(false);
                                self.promote_locked(pid, st.tier, rng)?;
                            }
                            if mode == AccessMode::Exclusive {
                                return Ok(self.exclusive_guard(pid, access, false));
                            }
                            // shared: drop the exclusive lock (clearing any mark) and retry
                            self.unlock_clean(pid);
                            continue;
                        }
                    } else if self.layout.try_apply(cell, word, Transition::LockShared).is_ok() {
                        return Ok(self.shared_guard(pid, st.tier, access));
                    }
                }
                LockState::LockedShared(n) => {
                    if mode == AccessMode::Shared
                        && n < MAX_SHARED
                        && self.layout.try_apply(cell, word, Transition::LockShared).is_ok()
                    {
                        return Ok(self.shared_guard(pid, st.tier, access));
                    }
                }
                LockState::Locked => {}
            }
            backoff.wait()?;
        }
    }

    fn exclusive_guard(&self, pid: PageId, access: Option<Access>, dirty: bool) -> PageGuard<'_> {
        let st = self.layout.decode(self.state(pid));
        self.finish_access(access.unwrap_or(Access::Hit(st.tier)));
        self.backend.charge_access(st.tier, true);
        PageGuard { pool: self, pid, mode: AccessMode::Exclusive, dirty, version: st.version }
    }

    fn shared_guard(&self, pid: PageId, tier: TierId, access: Option<Access>) -> PageGuard<'_> {
        self.finish_access(access.unwrap_or(Access::Hit(tier)));
        self.backend.charge_access(tier, false);
        let version = self.layout.version(self.state(pid));
        PageGuard { pool: self, pid, mode: AccessMode::Shared, dirty: false, version }
    }

    /// Exclusively locks a page that has never been written and gives it a
    /// zero-filled frame without reading the disk. The page must be evicted.
    pub fn fix_new<R: Rng + ?Sized>(&self, pid: PageId, rng: &mut R) -> Result<PageGuard<'_>> {
        self.check_pid(pid)?;
        let target = self.fault_target(rng);
        let cell = self.cell(pid);
        let word = StateWord(cell.load(Ordering::SeqCst));
        self.layout
            .try_apply(cell, word, Transition::FaultIn(target))
            .map_err(|_| BackendError::IllegalState { pid, reason: "allocating a page that is in use" })?;
        self.fault_in(pid, target, true, rng)?;
        Ok(self.exclusive_guard(pid, Some(Access::Fault), true))
    }

    /// Brings a page the caller has moved from Evicted to Locked into `target`.
    fn fault_in<R: Rng + ?Sized>(&self, pid: PageId, target: TierId, fresh: bool, rng: &mut R) -> Result<()> {
        let bound = self.admit(target, 1, true, rng).and_then(|_| {
            let _t = Timed::new(&self.counters.time_disk_ns);
            let r = if fresh {
                self.backend.bind_zeroed(pid, target)
            } else {
                self.backend.bind_and_read(pid, target)
            };
            r.map_err(|e| {
                self.claimed[target.index()].fetch_sub(1, Ordering::SeqCst);
                PoolError::from(e)
            })
        });
        if let Err(e) = bound {
            self.apply_owned(pid, Transition::Evict);
            return Err(e);
        }
        self.dirty[pid.slot()].store(false, Ordering::SeqCst);
        self.resident[target.index()].lock().insert(pid);
        self.record(PoolEvent::FaultIn { pid, tier: target });
        Ok(())
    }

    /// Reserves frames for `k` pages in `tier`, evicting first if the tier
    /// would reach its utilization threshold. With `required` the call
    /// retries until all `k` fit; otherwise it settles for what fits after
    /// one unproductive eviction, possibly zero.
    fn admit<R: Rng + ?Sized>(&self, tier: TierId, k: usize, required: bool, rng: &mut R) -> Result<usize> {
        let t = tier.index();
        let limit = self.limits[t];
        let k = k.min(limit);
        let _latch = self.admission[t].lock();
        let mut started: Option<Instant> = None;
        loop {
            let claimed = self.claimed[t].load(Ordering::SeqCst);
            if claimed + k <= limit {
                self.claimed[t].fetch_add(k, Ordering::SeqCst);
                return Ok(k);
            }
            let need = claimed + k - limit;
            let freed = self.evict_batch_inner(tier, need, rng)?;
            let after = self.claimed[t].load(Ordering::SeqCst);
            if after > limit {
                self.counters.threshold_violations.inc();
            }
            if freed == 0 {
                if !required {
                    let fit = limit.saturating_sub(after).min(k);
                    self.claimed[t].fetch_add(fit, Ordering::SeqCst);
                    return Ok(fit);
                }
                // every candidate is pinned; wait for holders to let go
                let start = *started.get_or_insert_with(Instant::now);
                if start.elapsed() > FIX_TIMEOUT {
                    return Err(PoolError::Timeout(PageId(u64::MAX)));
                }
                std::thread::yield_now();
            }
        }
    }

    /// Runs one batch eviction from `src` regardless of utilization and
    /// returns how many pages left the tier.
    pub fn evict_batch<R: Rng + ?Sized>(&self, src: TierId, rng: &mut R) -> Result<usize> {
        self.evict_batch_inner(src, 0, rng)
    }

    /// Batch eviction. Collects up to `max(evict_batch, need)` marked pages
    /// with the clock and locks them, then either demotes them to the next
    /// tier in one migration call (probability `rw`) or evicts them to disk.
    /// Tries hard to free at least `need` pages.
    fn evict_batch_inner<R: Rng + ?Sized>(&self, src: TierId, need: usize, rng: &mut R) -> Result<usize> {
        let mut dst = (src != self.last_memory_tier() && rng.random_bool(self.policy.rw)).then(|| TierId(src.0 + 1));
        let mut want = self.policy.evict_batch.max(need);
        if let Some(d) = dst {
            let room = self.limits[d.index()];
            if need > room {
                dst = None;
            } else {
                want = want.min(room);
            }
        }
        let victims = self.collect_victims(src, want, need.max(1));
        if victims.is_empty() {
            return Ok(0);
        }
        match dst {
            Some(d) => self.demote(victims, src, d, need, rng),
            None => self.evict_to_disk(&victims, src, need, rng),
        }
    }

    /// Clock scan over `src`: unlocked pages get marked, marked pages get
    /// locked and collected. Stops at `want` victims or after three
    /// revolutions with at least `need` victims.
    fn collect_victims(&self, src: TierId, want: usize, need: usize) -> Vec<PageId> {
        let mut victims = Vec::new();
        let mut set = self.resident[src.index()].lock();
        let size = set.table_size();
        for revolution in 0..4 {
            set.sweep(size, |pid| {
                let cell = self.cell(pid);
                let word = StateWord(cell.load(Ordering::SeqCst));
                match word.lock() {
                    LockState::Unlocked => {
                        let _ = self.layout.try_apply(cell, word, Transition::Mark);
                    }
                    LockState::Marked => {
                        if self.layout.try_apply(cell, word, Transition::LockExclusive).is_ok() {
                            debug_assert_eq!(self.layout.tier(word), src);
                            victims.push(pid);
                        }
                    }
                    _ => {}
                }
                victims.len() < want
            });
            if victims.len() >= want || (revolution >= 2 && victims.len() >= need) {
                break;
            }
        }
        victims
    }

    /// Issues one migration request through the configured engine.
    fn migrate(&self, pages: Vec<PageId>, target: TierId) -> MigrationOutcome {
        let _t = Timed::new(&self.counters.time_migration_ns);
        let engine = MigrationEngine::new(&self.backend).with_execution(self.execution);
        let req =
            MigrationRequest::uniform(pages, target, self.engine.mode, self.policy.nr_max_batched_migration);
        let out = match self.engine.kind {
            EngineKind::MovePages2 => engine.move_pages2(&req, &self.injector),
            EngineKind::Legacy => engine.move_pages_legacy(&req, &self.injector),
            EngineKind::Mbind => engine.mbind_each(&req, &self.injector),
        }
        .expect("pool requests are well formed");
        let calls = match self.engine.kind {
            EngineKind::Mbind => req.pages.len() as u64,
            _ => 1,
        };
        self.counters.migration_calls.add(calls);
        self.counters.shootdowns.add(out.shootdowns);
        self.counters.migrated_pages.add(out.migrated as u64);
        self.counters.migration_failures.add(out.failed as u64);
        out
    }

    /// Moves locked pages from `src` to `dst`: claim frames in `dst`,
    /// migrate, move resident-set entries, retag, unlock. Pages that do not
    /// move are unlocked in place, or sent to disk if `need` is still unmet.
    fn demote<R: Rng + ?Sized>(
        &self,
        victims: Vec<PageId>,
        src: TierId,
        dst: TierId,
        need: usize,
        rng: &mut R,
    ) -> Result<usize> {
        let got = self.admit(dst, victims.len(), false, rng)?;
        let (batch, rest) = victims.split_at(got);
        let mut moved = 0;
        let mut stuck: Vec<PageId> = rest.to_vec();
        if !batch.is_empty() {
            let out = self.migrate(batch.to_vec(), dst);
            for (i, &pid) in batch.iter().enumerate() {
                if out.succeeded(i) {
                    self.resident[src.index()].lock().remove(pid);
                    self.resident[dst.index()].lock().insert(pid);
                    self.claimed[src.index()].fetch_sub(1, Ordering::SeqCst);
                    self.apply_owned(pid, Transition::SetTier(dst));
                    self.unlock_clean(pid);
                    self.record(PoolEvent::Migrated { pid, from: src, to: dst });
                    moved += 1;
                } else {
                    self.claimed[dst.index()].fetch_sub(1, Ordering::SeqCst);
                    stuck.push(pid);
                }
            }
            self.counters.demotions.add(moved as u64);
        }
        if moved < need && !stuck.is_empty() {
            let take = (need - moved).min(stuck.len());
            moved += self.evict_to_disk(&stuck[..take], src, need - moved, rng)?;
            stuck.drain(..take);
        }
        for pid in stuck {
            self.unlock_clean(pid);
        }
        Ok(moved)
    }

    /// Evicts locked pages from `src` to disk, writing back dirty ones.
    /// Dirty pages leaving a remote tier are written with probability `dw`
    /// and otherwise unlocked in place, as long as `need` can still be met.
    fn evict_to_disk<R: Rng + ?Sized>(&self, victims: &[PageId], src: TierId, need: usize, rng: &mut R) -> Result<usize> {
        let mut chosen = Vec::with_capacity(victims.len());
        for (i, &pid) in victims.iter().enumerate() {
            let dirty = self.dirty[pid.slot()].load(Ordering::SeqCst);
            let spare_ok = chosen.len() + (victims.len() - i - 1) >= need;
            if dirty && src != TierId::LOCAL && spare_ok && !rng.random_bool(self.policy.dw) {
                self.unlock_clean(pid);
            } else {
                chosen.push(pid);
            }
        }
        self.write_out(&chosen, src)
    }

    fn write_out(&self, victims: &[PageId], src: TierId) -> Result<usize> {
        let mut evicted = 0;
        for (i, &pid) in victims.iter().enumerate() {
            let dirty = self.dirty[pid.slot()].load(Ordering::SeqCst);
            let io = {
                let _t = Timed::new(&self.counters.time_disk_ns);
                if dirty {
                    self.backend.write_back(pid)
                } else {
                    self.backend.drop_frame(pid)
                }
            };
            if let Err(e) = io {
                for &rest in &victims[i..] {
                    self.unlock_clean(rest);
                }
                return Err(e.into());
            }
            self.dirty[pid.slot()].store(false, Ordering::SeqCst);
            self.resident[src.index()].lock().remove(pid);
            self.claimed[src.index()].fetch_sub(1, Ordering::SeqCst);
            self.apply_owned(pid, Transition::Evict);
            self.record(PoolEvent::Evicted { pid, from: src, written: dirty });
            evicted += 1;
        }
        self.counters.evictions.add(evicted as u64);
        Ok(evicted)
    }

    /// Promotes the page behind an exclusive guard, plus up to
    /// `promote_batch - 1` unlocked neighbours from its tier, to local
    /// memory in one migration call. Returns the number of pages moved.
    pub fn promote_batch<R: Rng + ?Sized>(&self, trigger: &PageGuard<'_>, rng: &mut R) -> Result<usize> {
        assert_eq!(trigger.mode, AccessMode::Exclusive, "promotion needs an exclusive guard");
        let tier = trigger.tier();
        if tier == TierId::LOCAL {
            return Ok(0);
        }
        self.promote_locked(trigger.pid, tier, rng)
    }

    fn promote_locked<R: Rng + ?Sized>(&self, trigger: PageId, src: TierId, rng: &mut R) -> Result<usize> {
        let mut batch = vec![trigger];
        let want = self.policy.promote_batch;
        if want > 1 {
            let mut set = self.resident[src.index()].lock();
            let size = set.table_size();
            set.sweep(size, |pid| {
                if pid != trigger {
                    let cell = self.cell(pid);
                    let word = StateWord(cell.load(Ordering::SeqCst));
                    if word.lock() == LockState::Unlocked
                        && self.layout.try_apply(cell, word, Transition::LockExclusive).is_ok()
                    {
                        batch.push(pid);
                    }
                }
                batch.len() < want
            });
        }
        let got = self.admit(TierId::LOCAL, batch.len(), false, rng)?;
        for &pid in &batch[got..] {
            self.unlock_clean(pid);
        }
        batch.truncate(got);
        if batch.is_empty() {
            return Ok(0);
        }
        let out = self.migrate(batch.clone(), TierId::LOCAL);
        let mut moved = 0;
        for (i, &pid) in batch.iter().enumerate() {
            if out.succeeded(i) {
                self.resident[src.index()].lock().remove(pid);
                self.resident[0].lock().insert(pid);
                self.claimed[src.index()].fetch_sub(1, Ordering::SeqCst);
                self.apply_owned(pid, Transition::SetTier(TierId::LOCAL));
                self.record(PoolEvent::Migrated { pid, from: src, to: TierId::LOCAL });
                moved += 1;
            } else {
                self.claimed[0].fetch_sub(1, Ordering::SeqCst);
            }
            if pid != trigger {
                self.unlock_clean(pid);
            }
        }
        self.counters.promotions.add(moved as u64);
        Ok(moved)
    }

    /// Runs `read` over the page without taking a lock, retrying until the
    /// page's version, tier and frame are unchanged across the read. Falls
    /// back to a shared fix when the page is locked or on disk.
    pub fn optimistic_read<R, T, F>(&self, pid: PageId, rng: &mut R, mut read: F) -> Result<T>
    where
        R: Rng + ?Sized,
        F: FnMut(PageView<'_>) -> T,
    {
        self.check_pid(pid)?;
        let mut promote: Option<bool> = None;
        // a promoted page still counts as a hit in the tier it was found in
        let mut found: Option<TierId> = None;
        let mut backoff = Backoff::new(pid);
        loop {
            let cell = self.cell(pid);
            let before = StateWord(cell.load(Ordering::SeqCst));
            let st = self.layout.decode(before);
            match st.lock {
                LockState::Evicted | LockState::Locked => {
                    let guard = self.fix(pid, AccessMode::Shared, rng)?;
                    return Ok(read(guard.page()));
                }
                LockState::Marked => {
                    // second chance: an accessed page loses its mark
                    if self.layout.try_apply(cell, before, Transition::LockExclusive).is_ok() {
                        self.unlock_clean(pid);
                    }
                    continue;
                }
                LockState::Unlocked | LockState::LockedShared(_) => {}
            }
            if st.tier != TierId::LOCAL
                && st.lock == LockState::Unlocked
                && *promote.get_or_insert_with(|| rng.random_bool(self.policy.rr))
            {
                promote = Some(false);
                if self.layout.try_apply(cell, before, Transition::LockExclusive).is_ok() {
                    found.get_or_insert(st.tier);
                    let r = self.promote_locked(pid, st.tier, rng);
                    self.unlock_clean(pid);
                    r?;
                }
                continue;
            }
            let token = self.backend.placement_token(pid);
            if let Some(view) = self.backend.view_token(token) {
                self.backend.charge_access(st.tier, false);
                let value = read(view);
                let after = StateWord(cell.load(Ordering::SeqCst));
                let valid = !matches!(after.lock(), LockState::Locked | LockState::Evicted)
                    && self.layout.version(after) == st.version
                    && self.layout.tier(after) == st.tier
                    && self.backend.placement_token(pid) == token;
                if valid {
                    self.finish_access(Access::Hit(found.unwrap_or(st.tier)));
                    return Ok(value);
                }
            }
            self.counters.optimistic_retries.inc();
            backoff.wait()?;
        }
    }

    /// Writes every dirty cached page back to disk. Pages stay cached.
    pub fn flush_all(&self) -> Result<usize> {
        let mut dirty: Vec<PageId> = Vec::new();
        for set in &self.resident {
            dirty.extend(set.lock().iter().filter(|p| self.dirty[p.slot()].load(Ordering::SeqCst)));
        }
        let results = self.execution.map(&dirty, |&pid| self.flush_one(pid));
        let mut written = 0;
        for r in results {
            written += r? as usize;
        }
        self.backend.disk().sync().map_err(BackendError::from)?;
        Ok(written)
    }

    fn flush_one(&self, pid: PageId) -> Result<bool> {
        let mut backoff = Backoff::new(pid);
        loop {
            let cell = self.cell(pid);
            let word = StateWord(cell.load(Ordering::SeqCst));
            match word.lock() {
                LockState::Evicted => return Ok(false),
                LockState::Unlocked | LockState::Marked => {
                    if self.layout.try_apply(cell, word, Transition::LockExclusive).is_ok() {
                        let r = if self.dirty[pid.slot()].load(Ordering::SeqCst) {
                            let _t = Timed::new(&self.counters.time_disk_ns);
                            self.backend.flush_page(pid).map(|_| true)
                        } else {
                            Ok(false)
                        };
                        if r.is_ok() {
                            self.dirty[pid.slot()].store(false, Ordering::SeqCst);
                        }
                        self.unlock_clean(pid);
                        return r.map_err(Into::into);
                    }
                }
                _ => {}
            }
            backoff.wait()?;
        }
    }

    /// Evicts every unpinned cached page to disk, writing back dirty ones.
    /// Returns the number of pages evicted.
    pub fn evict_all(&self) -> Result<usize> {
        let mut evicted = 0;
        for t in 0..self.memory_tiers() {
            let tier = TierId(t as u8);
            let _latch = self.admission[t].lock();
            let victims: Vec<PageId> = {
                let set = self.resident[t].lock();
                set.iter()
                    .filter(|&pid| {
                        let cell = self.cell(pid);
                        let word = StateWord(cell.load(Ordering::SeqCst));
                        self.layout.try_apply(cell, word, Transition::LockExclusive).is_ok()
                    })
                    .collect()
            };
            evicted += self.write_out(&victims, tier)?;
        }
        Ok(evicted)
    }

    /// Consistency check for quiescent points (no guards held, no operation
    /// in flight). Verifies single residence, resident-set and state-word
    /// agreement, frame conservation and the utilization bound.
    pub fn audit(&self) -> std::result::Result<(), String> {
        self.backend.audit()?;
        let sets: Vec<_> = self.resident.iter().map(|s| s.lock()).collect();
        for slot in 0..self.slot_count() {
            let pid = PageId(slot as u64);
            let st = self.layout.decode(self.state(pid));
            let holders: Vec<usize> = (0..sets.len()).filter(|&t| sets[t].contains(pid)).collect();
            match (st.lock, self.backend.placement_of(pid)) {
                (LockState::Evicted, Placement::OnDisk) => {
                    if !holders.is_empty() {
                        return Err(format!("{pid} evicted but listed in tiers {holders:?}"));
                    }
                }
                (LockState::Unlocked | LockState::Marked, Placement::InMemory { tier, .. }) => {
                    if tier != st.tier {
                        return Err(format!("{pid} state says {} but frame is in {tier}", st.tier));
                    }
                    if holders != [tier.index()] {
                        return Err(format!("{pid} in {tier} but listed in tiers {holders:?}"));
                    }
                }
                (lock, placement) => {
                    return Err(format!("{pid} inconsistent at quiescence: {lock:?} with {placement:?}"));
                }
            }
        }
        for (t, set) in sets.iter().enumerate() {
            let tier = TierId(t as u8);
            let occupied = self.backend.occupancy(tier);
            let claimed = self.claimed[t].load(Ordering::SeqCst);
            if set.len() != occupied || claimed != occupied {
                return Err(format!("{tier}: {} listed, {occupied} frames used, {claimed} claimed", set.len()));
            }
            let cap = self.backend.capacity(tier) as f64;
            if occupied as f64 >= self.policy.utilization_threshold * cap {
                return Err(format!("{tier}: occupancy {occupied} at or above threshold"));
            }
        }
        Ok(())
    }
}

struct Backoff {
    pid: PageId,
    spins: u32,
    started: Option<Instant>,
}

impl Backoff {
    fn new(pid: PageId) -> Self {
        Backoff { pid, spins: 0, started: None }
    }

    fn wait(&mut self) -> Result<()> {
        self.spins += 1;
        if self.spins < 8 {
            std::hint::spin_loop();
            return Ok(());
        }
        std::thread::yield_now();
        if self.spins.is_multiple_of(256) {
            let start = *self.started.get_or_insert_with(Instant::now);
            if start.elapsed() > FIX_TIMEOUT {
                return Err(PoolError::Timeout(self.pid));
            }
        }
        Ok(())
    }
}

/// A fixed page. Dropping the guard unfixes it: shared guards decrement the
/// shared count; exclusive guards unlock and bump the version if the page
/// was written through [`PageGuard::page_mut`].
pub struct PageGuard<'p> {
    pool: &'p BufferPool,
    pid: PageId,
    mode: AccessMode,
    dirty: bool,
    version: u64,
}

impl<'p> PageGuard<'p> {
    pub fn pid(&self) -> PageId {
        self.pid
    }

    pub fn mode(&self) -> AccessMode {
        self.mode
    }

    /// Version observed when the page was fixed.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn tier(&self) -> TierId {
        self.pool.layout.tier(self.pool.state(self.pid))
    }

    pub fn page(&self) -> PageView<'_> {
        self.pool.backend.view(self.pid).expect("fixed page is resident")
    }

    /// Write access; marks the page dirty. Panics on a shared guard.
    pub fn page_mut(&mut self) -> PageViewMut<'_> {
        assert_eq!(self.mode, AccessMode::Exclusive, "writing through a shared guard");
        self.dirty = true;
        self.pool.backend.view_mut(self.pid).expect("fixed page is resident")
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }
}

impl Drop for PageGuard<'_> {
    fn drop(&mut self) {
        let pool = self.pool;
        match self.mode {
            AccessMode::Exclusive => {
                if self.dirty {
                    pool.dirty[self.pid.slot()].store(true, Ordering::SeqCst);
                }
                pool.apply_owned(self.pid, Transition::UnlockExclusive { dirty: self.dirty });
            }
            AccessMode::Shared => {
                let cell = pool.cell(self.pid);
                while pool.layout.apply(cell, Transition::UnlockShared).is_err() {
                    std::hint::spin_loop();
                }
            }
        }
    }
}

impl BufferPool {
    /// Explicit unfix; same as dropping the guard.
    pub fn unfix(&self, guard: PageGuard<'_>) {
        drop(guard);
    }
}
