//! Simulated physical substrate: per-tier frame pools, the page table that
//! maps page slots to frames, and the disk.
//!
//! The page table plays the role of the OS page table behind a fixed
//! virtual reservation: a page's slot never changes, only the frame behind
//! it. Mutating calls require the caller to hold the page exclusively; the
//! backend only guards its own structures.

mod cost;
mod disk;
mod topology;

use std::path::Path;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use parking_lot::Mutex;

pub use cost::{copy_ns, CostModel, DEFAULT_SHOOTDOWN_NS};
pub use disk::SimDisk;
pub use topology::{TierSpec, TierTopology, DEFAULT_PAGE_SIZE};

use crate::error::{BackendError, ConfigError};
use crate::page::{PageId, PageView, PageViewMut};
use crate::state::TierId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Placement {
    InMemory { tier: TierId, frame: u32 },
    OnDisk,
}

impl Placement {
    pub fn tier(self) -> Option<TierId> {
        match self {
            Placement::InMemory { tier, .. } => Some(tier),
            Placement::OnDisk => None,
        }
    }
}

// Page-table entry: frame in bits 0..32, tier in 32..40, present bit 40,
// generation in 41..64. The generation changes on every remap so that an
// optimistic reader can tell whether the frame it read from is still the
// page's frame.
const PRESENT: u64 = 1 << 40;
const GEN_SHIFT: u32 = 41;

fn pte_placement(pte: u64) -> Placement {
    if pte & PRESENT == 0 {
        Placement::OnDisk
    } else {
        Placement::InMemory { tier: TierId((pte >> 32) as u8), frame: pte as u32 }
    }
}

fn pte_next(old: u64, placement: Placement) -> u64 {
    let gen = ((old >> GEN_SHIFT) + 1) << GEN_SHIFT;
    match placement {
        Placement::OnDisk => gen,
        Placement::InMemory { tier, frame } => gen | PRESENT | ((tier.0 as u64) << 32) | frame as u64,
    }
}

struct Frames {
    arena: Box<[AtomicU64]>,
    free: Mutex<Vec<u32>>,
    used: AtomicUsize,
    capacity: usize,
}

impl Frames {
    fn new(capacity: usize, page_words: usize) -> Self {
        Frames {
            arena: (0..capacity * page_words).map(|_| AtomicU64::new(0)).collect(),
            free: Mutex::new((0..capacity as u32).rev().collect()),
            used: AtomicUsize::new(0),
            capacity,
        }
    }

    fn pop(&self) -> Option<u32> {
        let f = self.free.lock().pop()?;
        self.used.fetch_add(1, Ordering::Relaxed);
        Some(f)
    }

    fn push(&self, frame: u32) {
        self.free.lock().push(frame);
        self.used.fetch_sub(1, Ordering::Relaxed);
    }
}

/// Monotone backend counters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BackendStats {
    pub disk_reads: u64,
    pub disk_writes: u64,
    pub bytes_copied: u64,
    pub remaps: u64,
    pub occupancy: Vec<usize>,
}

#[derive(Default)]
struct Counters {
    disk_reads: AtomicU64,
    disk_writes: AtomicU64,
    bytes_copied: AtomicU64,
    remaps: AtomicU64,
}

pub struct Backend {
    topology: TierTopology,
    page_words: usize,
    tiers: Vec<Frames>,
    table: Box<[AtomicU64]>,
    disk: SimDisk,
    cost: CostModel,
    counters: Counters,
}

impl Backend {
    /// Reserves the page space (one slot per disk page, all on disk) and
    /// allocates every tier's frames.
    pub fn reserve(topology: TierTopology) -> Result<Self, ConfigError> {
        topology.validate()?;
        let disk = SimDisk::in_memory(topology.disk.capacity_pages, topology.page_size);
        Ok(Self::with_disk(topology, disk))
    }

    /// Like [`Backend::reserve`] but the disk is a flat file at `path`.
    pub fn reserve_with_file(topology: TierTopology, path: &Path) -> Result<Self, BackendError> {
        topology.validate().map_err(|e| BackendError::Io(std::io::Error::other(e.to_string())))?;
        let disk = SimDisk::open_file(path, topology.disk.capacity_pages, topology.page_size)?;
        Ok(Self::with_disk(topology, disk))
    }

    fn with_disk(topology: TierTopology, disk: SimDisk) -> Self {
        let page_words = topology.page_words();
        let tiers = topology.memory.iter().map(|t| Frames::new(t.capacity_pages, page_words)).collect();
        let table = (0..topology.disk.capacity_pages).map(|_| AtomicU64::new(0)).collect();
        Backend {
            topology,
            page_words,
            tiers,
            table,
            disk,
            cost: CostModel::default(),
            counters: Counters::default(),
        }
    }

    pub fn topology(&self) -> &TierTopology {
        &self.topology
    }

    pub fn page_size(&self) -> usize {
        self.topology.page_size
    }

    pub fn slot_count(&self) -> usize {
        self.table.len()
    }

    pub fn memory_tiers(&self) -> usize {
        self.tiers.len()
    }

    pub fn capacity(&self, tier: TierId) -> usize {
        self.tiers[tier.index()].capacity
    }

    pub fn cost(&self) -> &CostModel {
        &self.cost
    }

    pub fn disk(&self) -> &SimDisk {
        &self.disk
    }

    fn frames(&self, tier: TierId) -> Result<&Frames, BackendError> {
        self.tiers.get(tier.index()).ok_or(BackendError::NoSuchTier(tier))
    }

    fn pte(&self, pid: PageId) -> Result<&AtomicU64, BackendError> {
        self.table.get(pid.slot()).ok_or(BackendError::OutOfRange(pid))
    }

    fn frame_words(&self, tier: TierId, frame: u32) -> &[AtomicU64] {
        let base = frame as usize * self.page_words;
        &self.tiers[tier.index()].arena[base..base + self.page_words]
    }

    pub fn placement_of(&self, pid: PageId) -> Placement {
        self.table.get(pid.slot()).map_or(Placement::OnDisk, |p| pte_placement(p.load(Ordering::Acquire)))
    }

    /// Opaque page-table entry, including the remap generation.
    pub fn placement_token(&self, pid: PageId) -> u64 {
        self.table[pid.slot()].load(Ordering::Acquire)
    }

    pub fn free_frames(&self, tier: TierId) -> usize {
        let f = &self.tiers[tier.index()];
        f.capacity - f.used.load(Ordering::Relaxed)
    }

    pub fn occupancy(&self, tier: TierId) -> usize {
        self.tiers[tier.index()].used.load(Ordering::Relaxed)
    }

    pub fn stats(&self) -> BackendStats {
        BackendStats {
            disk_reads: self.counters.disk_reads.load(Ordering::Relaxed),
            disk_writes: self.counters.disk_writes.load(Ordering::Relaxed),
            bytes_copied: self.counters.bytes_copied.load(Ordering::Relaxed),
            remaps: self.counters.remaps.load(Ordering::Relaxed),
            occupancy: self.tiers.iter().map(|f| f.used.load(Ordering::Relaxed)).collect(),
        }
    }

    /// View of the frame behind a page the caller has locked.
    pub fn view(&self, pid: PageId) -> Option<PageView<'_>> {
        match self.placement_of(pid) {
            Placement::InMemory { tier, frame } => Some(PageView::new(self.frame_words(tier, frame))),
            Placement::OnDisk => None,
        }
    }

    /// Mutable view of the frame behind a page the caller holds exclusively.
    pub fn view_mut(&self, pid: PageId) -> Option<PageViewMut<'_>> {
        match self.placement_of(pid) {
            Placement::InMemory { tier, frame } => Some(PageViewMut::new(self.frame_words(tier, frame))),
            Placement::OnDisk => None,
        }
    }

    /// View of the frame named by a token from [`Backend::placement_token`].
    pub fn view_token(&self, token: u64) -> Option<PageView<'_>> {
        match pte_placement(token) {
            Placement::InMemory { tier, frame } => Some(PageView::new(self.frame_words(tier, frame))),
            Placement::OnDisk => None,
        }
    }

    /// Charges the simulated cost of touching a page in `tier`.
    pub fn charge_access(&self, tier: TierId, write: bool) {
        let spec = &self.topology.memory[tier.index()];
        self.cost.charge(if write { spec.write_latency_ns } else { spec.read_latency_ns });
    }

    fn remap(&self, pid: PageId, expected: u64, placement: Placement) -> Result<(), BackendError> {
        let pte = self.pte(pid)?;
        pte.compare_exchange(expected, pte_next(expected, placement), Ordering::AcqRel, Ordering::Acquire)
            .map_err(|_| BackendError::IllegalState { pid, reason: "concurrent remap" })?;
        self.counters.remaps.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    fn bind(&self, pid: PageId, target: TierId, from_disk: bool) -> Result<Placement, BackendError> {
        let pte = self.pte(pid)?.load(Ordering::Acquire);
        if pte & PRESENT != 0 {
            return Err(BackendError::IllegalState { pid, reason: "already in memory" });
        }
        let frames = self.frames(target)?;
        let frame = frames.pop().ok_or(BackendError::TierFull(target))?;
        let words = self.frame_words(target, frame);
        if from_disk {
            if let Err(e) = self.disk.read_page(pid.slot(), words) {
                frames.push(frame);
                return Err(e.into());
            }
            self.counters.disk_reads.fetch_add(1, Ordering::Relaxed);
            self.cost.charge(self.topology.disk.read_latency_ns);
        } else {
            PageViewMut::new(words).fill(0);
        }
        let placement = Placement::InMemory { tier: target, frame };
        if let Err(e) = self.remap(pid, pte, placement) {
            frames.push(frame);
            return Err(e);
        }
        Ok(placement)
    }

    /// Allocates a frame in `target` and reads the page from disk into it.
    pub fn bind_and_read(&self, pid: PageId, target: TierId) -> Result<Placement, BackendError> {
        self.bind(pid, target, true)
    }

    /// Allocates a zero-filled frame for a brand-new page without disk I/O.
    pub fn bind_zeroed(&self, pid: PageId, target: TierId) -> Result<Placement, BackendError> {
        self.bind(pid, target, false)
    }

    fn resident(&self, pid: PageId) -> Result<(u64, TierId, u32), BackendError> {
        let pte = self.pte(pid)?.load(Ordering::Acquire);
        match pte_placement(pte) {
            Placement::InMemory { tier, frame } => Ok((pte, tier, frame)),
            Placement::OnDisk => Err(BackendError::IllegalState { pid, reason: "not in memory" }),
        }
    }

    /// Copies the frame to disk, frees it and marks the page on disk.
    pub fn write_back(&self, pid: PageId) -> Result<(), BackendError> {
        let (pte, tier, frame) = self.resident(pid)?;
        self.disk.write_page(pid.slot(), self.frame_words(tier, frame))?;
        self.counters.disk_writes.fetch_add(1, Ordering::Relaxed);
        self.cost.charge(self.topology.disk.write_latency_ns);
        self.remap(pid, pte, Placement::OnDisk)?;
        self.tiers[tier.index()].push(frame);
        Ok(())
    }

    /// Frees the frame of a clean page without touching the disk.
    pub fn drop_frame(&self, pid: PageId) -> Result<(), BackendError> {
        let (pte, tier, frame) = self.resident(pid)?;
        self.remap(pid, pte, Placement::OnDisk)?;
        self.tiers[tier.index()].push(frame);
        Ok(())
    }

    /// Writes the page to disk and keeps it cached. Shared access suffices.
    pub fn flush_page(&self, pid: PageId) -> Result<(), BackendError> {
        let (_, tier, frame) = self.resident(pid)?;
        self.disk.write_page(pid.slot(), self.frame_words(tier, frame))?;
        self.counters.disk_writes.fetch_add(1, Ordering::Relaxed);
        self.cost.charge(self.topology.disk.write_latency_ns);
        Ok(())
    }

    /// Moves the page to a fresh frame in `target`, keeping its slot. This is
    /// the single-page primitive that all migration paths compose.
    pub fn retarget_frame(&self, pid: PageId, target: TierId) -> Result<Placement, BackendError> {
        let (pte, src, frame) = self.resident(pid)?;
        if src == target {
            return Ok(Placement::InMemory { tier: src, frame });
        }
        let dst_frames = self.frames(target)?;
        let dst = dst_frames.pop().ok_or(BackendError::TierFull(target))?;
        let from = self.frame_words(src, frame);
        PageView::new(from).copy_to(self.frame_words(target, dst));
        let placement = Placement::InMemory { tier: target, frame: dst };
        if let Err(e) = self.remap(pid, pte, placement) {
            dst_frames.push(dst);
            return Err(e);
        }
        self.tiers[src.index()].push(frame);
        let bytes = self.page_size();
        self.counters.bytes_copied.fetch_add(bytes as u64, Ordering::Relaxed);
        let bw = self.topology.memory[src.index()]
            .bandwidth_mb_s
            .min(self.topology.memory[target.index()].bandwidth_mb_s);
        self.cost.charge(copy_ns(bytes, bw));
        Ok(placement)
    }

    /// Checks frame conservation and single residence at a quiescent point:
    /// every frame is either free or referenced by exactly one page, and
    /// free lists hold no duplicates.
    pub fn audit(&self) -> Result<(), String> {
        let mut owner: Vec<Vec<Option<PageId>>> = self.tiers.iter().map(|f| vec![None; f.capacity]).collect();
        for (slot, pte) in self.table.iter().enumerate() {
            if let Placement::InMemory { tier, frame } = pte_placement(pte.load(Ordering::Acquire)) {
                let cell = owner
                    .get_mut(tier.index())
                    .and_then(|t| t.get_mut(frame as usize))
                    .ok_or_else(|| format!("P{slot} maps to nonexistent frame {tier}/{frame}"))?;
                if let Some(other) = cell.replace(PageId(slot as u64)) {
                    return Err(format!("frame {tier}/{frame} shared by {other} and P{slot}"));
                }
            }
        }
        for (t, frames) in self.tiers.iter().enumerate() {
            let free = frames.free.lock();
            let mut seen = vec![false; frames.capacity];
            for &f in free.iter() {
                if std::mem::replace(&mut seen[f as usize], true) {
                    return Err(format!("frame tier{t}/{f} twice on the free list"));
                }
                if let Some(pid) = owner[t][f as usize] {
                    return Err(format!("frame tier{t}/{f} is free but backs {pid}"));
                }
            }
            let used = owner[t].iter().filter(|o| o.is_some()).count();
            if used + free.len() != frames.capacity {
                return Err(format!(
                    "tier{t}: {used} used + {} free != capacity {}",
                    free.len(),
                    frames.capacity
                ));
            }
            if used != frames.used.load(Ordering::Relaxed) {
                return Err(format!("tier{t}: occupancy counter disagrees with page table"));
            }
        }
        Ok(())
    }
}
