//! The 64-bit page state word.
//!
//! Layout, most significant bits first:
//!
//! ```text
//! | lock byte (8) | tier bits (ceil(log2(memory tiers))) | version (rest) |
//! ```
//!
//! The lock byte is `0` for unlocked, `1..=252` for the shared-lock count,
//! `253` for exclusively locked, `254` for marked (clock victim) and `255`
//! for evicted. Tier bits name the memory tier whose frame currently backs
//! the page; they are meaningless while the page is evicted and are kept at
//! zero in that state.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

pub const MAX_SHARED: u8 = 252;
const LOCKED: u8 = 253;
const MARKED: u8 = 254;
const EVICTED: u8 = 255;

const LOCK_SHIFT: u32 = 56;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LockState {
    Unlocked,
    LockedShared(u8),
    Locked,
    Marked,
    Evicted,
}

impl LockState {
    pub fn from_byte(byte: u8) -> Self {
        match byte {
            0 => LockState::Unlocked,
            LOCKED => LockState::Locked,
            MARKED => LockState::Marked,
            EVICTED => LockState::Evicted,
            n => LockState::LockedShared(n),
        }
    }

    /// Panics on a shared count outside `1..=252`; use [`StateLayout::encode`]
    /// for checked construction.
    pub fn to_byte(self) -> u8 {
        match self {
            LockState::Unlocked => 0,
            LockState::LockedShared(n) => {
                assert!((1..=MAX_SHARED).contains(&n), "shared count {n} out of range");
                n
            }
            LockState::Locked => LOCKED,
            LockState::Marked => MARKED,
            LockState::Evicted => EVICTED,
        }
    }

    /// Unlocked or marked: nobody holds the page and readers may proceed.
    pub fn is_free(self) -> bool {
        matches!(self, LockState::Unlocked | LockState::Marked)
    }
}

/// A memory tier. Tier 0 is local DRAM; higher indices are slower memory.
/// The disk is not a `TierId`; on-disk residency is the `Evicted` state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TierId(pub u8);

impl TierId {
    pub const LOCAL: TierId = TierId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tier{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct StateWord(pub u64);

impl StateWord {
    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn lock(self) -> LockState {
        LockState::from_byte((self.0 >> LOCK_SHIFT) as u8)
    }
}

impl fmt::Debug for StateWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateWord({:#018x})", self.0)
    }
}

/// Decoded view of a state word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PageState {
    pub lock: LockState,
    pub tier: TierId,
    pub version: u64,
}

/// The edges of the page state machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transition {
    LockExclusive,
    LockShared,
    UnlockExclusive { dirty: bool },
    UnlockShared,
    Mark,
    Evict,
    SetTier(TierId),
    FaultIn(TierId),
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum StateError {
    #[error("a tier hierarchy needs at least one memory tier and the disk, got {0} tiers")]
    TooFewTiers(usize),
    #[error("{0} memory tiers do not fit in the tier field")]
    TooManyTiers(usize),
    #[error("{tier} is not a memory tier (memory tiers: {memory_tiers})")]
    TierOutOfRange { tier: TierId, memory_tiers: usize },
    #[error("version {version} exceeds the {bits}-bit version field")]
    VersionOutOfRange { version: u64, bits: u32 },
    #[error("shared lock count {0} outside 1..=252")]
    SharedCount(u8),
}

/// A transition was not applicable to the observed word, or the
/// compare-and-swap lost a race.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("state transition refused")]
pub struct Refused;

/// Bit layout of the state word for a hierarchy of `tiers` levels
/// (memory tiers plus disk).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateLayout {
    memory_tiers: usize,
    tier_bits: u32,
    version_bits: u32,
}

impl StateLayout {
    pub fn new(tiers: usize) -> Result<Self, StateError> {
        if tiers < 2 {
            return Err(StateError::TooFewTiers(tiers));
        }
        let memory_tiers = tiers - 1;
        if memory_tiers > u8::MAX as usize {
            return Err(StateError::TooManyTiers(memory_tiers));
        }
        let tier_bits = if memory_tiers <= 1 {
            0
        } else {
            usize::BITS - (memory_tiers - 1).leading_zeros()
        };
        Ok(StateLayout {
            memory_tiers,
            tier_bits,
            version_bits: LOCK_SHIFT - tier_bits,
        })
    }

    pub fn memory_tiers(&self) -> usize {
        self.memory_tiers
    }

    pub fn tier_bits(&self) -> u32 {
        self.tier_bits
    }

    pub fn version_bits(&self) -> u32 {
        self.version_bits
    }

    pub fn max_version(&self) -> u64 {
        (1u64 << self.version_bits) - 1
    }

    fn tier_mask(&self) -> u64 {
        ((1u64 << self.tier_bits) - 1) << self.version_bits
    }

    fn check_tier(&self, tier: TierId) -> Result<(), StateError> {
        if tier.index() < self.memory_tiers {
            Ok(())
        } else {
            Err(StateError::TierOutOfRange { tier, memory_tiers: self.memory_tiers })
        }
    }

    pub fn encode(&self, lock: LockState, tier: TierId, version: u64) -> Result<StateWord, StateError> {
        if let LockState::LockedShared(n) = lock {
            if !(1..=MAX_SHARED).contains(&n) {
                return Err(StateError::SharedCount(n));
            }
        }
        self.check_tier(tier)?;
        if version > self.max_version() {
            return Err(StateError::VersionOutOfRange { version, bits: self.version_bits });
        }
        Ok(self.pack(lock.to_byte(), tier, version))
    }

    fn pack(&self, lock: u8, tier: TierId, version: u64) -> StateWord {
        StateWord(((lock as u64) << LOCK_SHIFT) | ((tier.0 as u64) << self.version_bits) | version)
    }

    pub fn decode(&self, word: StateWord) -> PageState {
        PageState {
            lock: word.lock(),
            tier: self.tier(word),
            version: self.version(word),
        }
    }

    pub fn tier(&self, word: StateWord) -> TierId {
        TierId(((word.0 & self.tier_mask()) >> self.version_bits) as u8)
    }

    pub fn version(&self, word: StateWord) -> u64 {
        word.0 & self.max_version()
    }

    /// The canonical state of a page that lives only on disk.
    pub fn evicted(&self, version: u64) -> StateWord {
        self.pack(EVICTED, TierId::LOCAL, version & self.max_version())
    }

    /// Pure successor function of the state machine. Returns `Refused` for
    /// every edge not present in the diagram.
    pub fn transition(&self, word: StateWord, edge: Transition) -> Result<StateWord, Refused> {
        let tier = self.tier(word);
        let version = self.version(word);
        let bump = (version + 1) & self.max_version();
        let next = match (word.lock(), edge) {
            (LockState::Unlocked, Transition::LockShared) => self.pack(1, tier, version),
            (LockState::LockedShared(n), Transition::LockShared) if n < MAX_SHARED => {
                self.pack(n + 1, tier, version)
            }
            (LockState::LockedShared(1), Transition::UnlockShared) => self.pack(0, tier, version),
            (LockState::LockedShared(n), Transition::UnlockShared) => self.pack(n - 1, tier, version),
            (LockState::Unlocked | LockState::Marked, Transition::LockExclusive) => {
                self.pack(LOCKED, tier, version)
            }
            (LockState::Locked, Transition::UnlockExclusive { dirty }) => {
                self.pack(0, tier, if dirty { bump } else { version })
            }
            (LockState::Unlocked, Transition::Mark) => self.pack(MARKED, tier, version),
            (LockState::Locked, Transition::Evict) => self.pack(EVICTED, TierId::LOCAL, bump),
            (LockState::Locked, Transition::SetTier(t)) if self.check_tier(t).is_ok() => {
                self.pack(LOCKED, t, version)
            }
            (LockState::Evicted, Transition::FaultIn(t)) if self.check_tier(t).is_ok() => {
                self.pack(LOCKED, t, version)
            }
            _ => return Err(Refused),
        };
        Ok(next)
    }

    /// Applies `edge` to `cell` if it still holds `expected`.
    pub fn try_apply(&self, cell: &AtomicU64, expected: StateWord, edge: Transition) -> Result<StateWord, Refused> {
        let next = self.transition(expected, edge)?;
        cell.compare_exchange(expected.0, next.0, Ordering::SeqCst, Ordering::SeqCst)
            .map(|_| next)
            .map_err(|_| Refused)
    }

    /// Loads `cell` and applies `edge` once.
    pub fn apply(&self, cell: &AtomicU64, edge: Transition) -> Result<StateWord, Refused> {
        let current = StateWord(cell.load(Ordering::SeqCst));
        self.try_apply(cell, current, edge)
    }
}
