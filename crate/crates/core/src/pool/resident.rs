//! Per-tier index of resident pages: open addressing, linear probing,
//! tombstones, plus the clock hand used for replacement.

use crate::page::PageId;

const EMPTY: u64 = u64::MAX;
const TOMBSTONE: u64 = u64::MAX - 1;

pub struct ResidentSet {
    slots: Box<[u64]>,
    shift: u32,
    live: usize,
    tombstones: usize,
    hand: usize,
}

impl ResidentSet {
    /// Table of the next power of two at least twice `capacity`.
    pub fn with_capacity(capacity: usize) -> Self {
        let size = (capacity.max(1) * 2).next_power_of_two().max(4);
        ResidentSet {
            slots: vec![EMPTY; size].into_boxed_slice(),
            shift: 64 - size.trailing_zeros(),
            live: 0,
            tombstones: 0,
            hand: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    pub fn table_size(&self) -> usize {
        self.slots.len()
    }

    fn home(&self, pid: PageId) -> usize {
        (pid.0.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> self.shift) as usize
    }

    fn find(&self, pid: PageId) -> Option<usize> {
        let mask = self.slots.len() - 1;
        let mut i = self.home(pid);
        loop {
            match self.slots[i] {
                EMPTY => return None,
                v if v == pid.0 => return Some(i),
                _ => i = (i + 1) & mask,
            }
        }
    }

    pub fn contains(&self, pid: PageId) -> bool {
        self.find(pid).is_some()
    }

    /// Returns false if `pid` was already present.
    pub fn insert(&mut self, pid: PageId) -> bool {
        debug_assert!(pid.0 < TOMBSTONE);
        if self.contains(pid) {
            return false;
        }
        assert!(self.live < self.slots.len() / 2, "resident set over capacity");
        if (self.live + self.tombstones + 1) * 4 > self.slots.len() * 3 {
            self.rebuild();
        }
        let mask = self.slots.len() - 1;
        let mut i = self.home(pid);
        loop {
            match self.slots[i] {
                EMPTY => break,
                TOMBSTONE => {
                    self.tombstones -= 1;
                    break;
                }
                _ => i = (i + 1) & mask,
            }
        }
        self.slots[i] = pid.0;
        self.live += 1;
        true
    }

    pub fn remove(&mut self, pid: PageId) -> bool {
        match self.find(pid) {
            Some(i) => {
                self.slots[i] = TOMBSTONE;
                self.live -= 1;
                self.tombstones += 1;
                true
            }
            None => false,
        }
    }

    fn rebuild(&mut self) {
        let fresh = vec![EMPTY; self.slots.len()].into_boxed_slice();
        let old = std::mem::replace(&mut self.slots, fresh);
        self.live = 0;
        self.tombstones = 0;
        for v in old.iter().copied().filter(|&v| v < TOMBSTONE) {
            self.insert(PageId(v));
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = PageId> + '_ {
        self.slots.iter().copied().filter(|&v| v < TOMBSTONE).map(PageId)
    }

    /// Advances the clock hand over at most `steps` table slots, calling
    /// `visit` for each resident page until it returns false.
    pub fn sweep(&mut self, steps: usize, mut visit: impl FnMut(PageId) -> bool) {
        let mask = self.slots.len() - 1;
        for _ in 0..steps {
            let v = self.slots[self.hand];
            self.hand = (self.hand + 1) & mask;
            if v < TOMBSTONE && !visit(PageId(v)) {
                return;
            }
        }
    }
}
