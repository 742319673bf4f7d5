//! B+tree over [`BufferPool`] pages.
//!
//! Page 0 holds the allocator (next unused page id), page 1 is the root and
//! never moves. Nodes are slotted pages:
//!
//! ```text
//! 0      kind (1 leaf, 2 inner)
//! 2..4   entry count
//! 4..6   heap top; entry bytes grow down from the end of the page
//! 8..16  rightmost child (inner nodes)
//! 16..24 lower fence offset/len, fence flags, upper fence offset/len
//! 24..   slots: offset u16, key len u8, payload len u8
//! ```
//!
//! A node covers the keys in `(lower, upper]`. Inner entry `(k, c)` sends
//! keys up to `k` to `c`; larger keys go to the rightmost child. Readers
//! descend with optimistic reads and restart from the root when a node's
//! fences do not cover the key. Writers lock the leaf; a leaf that would
//! overflow sends the insert down the pessimistic path, which couples
//! exclusive locks from the root and keeps only ancestors that may split.

use std::cmp::Ordering;
use std::ops::Bound;

use rand::Rng;

use crate::error::{PoolError, Result};
use crate::page::{PageId, PageView, PageViewMut};
use crate::pool::{AccessMode, BufferPool, PageGuard};

pub const MAX_KEY: usize = 64;
pub const MAX_VALUE: usize = 128;

pub const META: PageId = PageId(0);
pub const ROOT: PageId = PageId(1);
const MAGIC: u64 = u64::from_le_bytes(*b"tpbtree1");

const HDR: usize = 24;
const SLOT: usize = 4;
const CHILD: usize = 8;
const LEAF: u8 = 1;
const INNER: u8 = 2;
const NO_LOWER: u8 = 1;
const NO_UPPER: u8 = 2;

/// Largest entry an inner node may have to absorb from a child split.
const MAX_SEPARATOR: usize = SLOT + MAX_KEY + CHILD;

fn count(p: &PageView<'_>) -> usize {
    (p.u16_at(2) as usize).min((p.len() - HDR) / SLOT)
}

fn slot(p: &PageView<'_>, i: usize) -> (usize, usize, usize) {
    let at = HDR + i * SLOT;
    (p.u16_at(at) as usize, p.u8_at(at + 2) as usize, p.u8_at(at + 3) as usize)
}

fn key_at<'b>(p: &PageView<'_>, i: usize, buf: &'b mut [u8; 256]) -> &'b [u8] {
    let (off, klen, _) = slot(p, i);
    p.read(off, &mut buf[..klen]);
    &buf[..klen]
}

fn payload_at(p: &PageView<'_>, i: usize) -> Vec<u8> {
    let (off, klen, vlen) = slot(p, i);
    let mut v = vec![0u8; vlen];
    p.read(off + klen, &mut v);
    v
}

fn child_at(p: &PageView<'_>, i: usize) -> PageId {
    let (off, klen, _) = slot(p, i);
    PageId(p.u64_at(off + klen))
}

fn fence(p: &PageView<'_>, upper: bool) -> Option<Vec<u8>> {
    let flags = p.u8_at(19);
    let (at, missing) = if upper { (20, NO_UPPER) } else { (16, NO_LOWER) };
    if flags & missing != 0 {
        return None;
    }
    let off = p.u16_at(at) as usize;
    let len = p.u8_at(at + 2) as usize;
    let mut v = vec![0u8; len];
    p.read(off, &mut v);
    Some(v)
}

fn cmp_fence(p: &PageView<'_>, upper: bool, key: &[u8]) -> Option<Ordering> {
    let flags = p.u8_at(19);
    let (at, missing) = if upper { (20, NO_UPPER) } else { (16, NO_LOWER) };
    if flags & missing != 0 {
        return None;
    }
    let mut buf = [0u8; 256];
    let len = p.u8_at(at + 2) as usize;
    p.read(p.u16_at(at) as usize, &mut buf[..len]);
    Some(buf[..len].cmp(key))
}

/// A search position: a key itself, or the gap just after it.
#[derive(Clone, Copy)]
struct Probe<'k> {
    key: &'k [u8],
    after: bool,
}

impl Probe<'_> {
    /// Whether the node's `(lower, upper]` range contains the probe.
    fn covered_by(&self, p: &PageView<'_>) -> bool {
        let lower_ok = match cmp_fence(p, false, self.key) {
            None => true,
            Some(o) => o == Ordering::Less || (self.after && o == Ordering::Equal),
        };
        let upper_ok = match cmp_fence(p, true, self.key) {
            None => true,
            Some(o) => o == Ordering::Greater || (!self.after && o == Ordering::Equal),
        };
        lower_ok && upper_ok
    }

    /// Index of the first entry at or beyond the probe, and whether it holds
    /// the key exactly.
    fn position(&self, p: &PageView<'_>) -> (usize, bool) {
        let (mut lo, mut hi) = (0, count(p));
        let mut buf = [0u8; 256];
        while lo < hi {
            let mid = (lo + hi) / 2;
            match key_at(p, mid, &mut buf).cmp(self.key) {
                Ordering::Less => lo = mid + 1,
                Ordering::Equal if self.after => lo = mid + 1,
                Ordering::Equal => return (mid, true),
                Ordering::Greater => hi = mid,
            }
        }
        (lo, false)
    }

    fn child(&self, p: &PageView<'_>) -> PageId {
        let (i, _) = self.position(p);
        if i < count(p) {
            child_at(p, i)
        } else {
            PageId(p.u64_at(8))
        }
    }
}

enum Step<T> {
    Descend(PageId),
    Done(T),
    Restart,
}

/// Decoded node, used for splits and compaction.
#[derive(Clone, Debug, Default)]
struct Node {
    leaf: bool,
    lower: Option<Vec<u8>>,
    upper: Option<Vec<u8>>,
    entries: Vec<(Vec<u8>, Vec<u8>)>,
    right: u64,
}

impl Node {
    fn read(p: &PageView<'_>) -> Node {
        let mut buf = [0u8; 256];
        Node {
            leaf: p.u8_at(0) == LEAF,
            lower: fence(p, false),
            upper: fence(p, true),
            entries: (0..count(p)).map(|i| (key_at(p, i, &mut buf).to_vec(), payload_at(p, i))).collect(),
            right: p.u64_at(8),
        }
    }

    fn size(&self) -> usize {
        HDR + self.lower.as_ref().map_or(0, Vec::len)
            + self.upper.as_ref().map_or(0, Vec::len)
            + self.entries.iter().map(|(k, v)| SLOT + k.len() + v.len()).sum::<usize>()
    }

    fn write(&self, p: &mut PageViewMut<'_>) {
        debug_assert!(self.size() <= p.len());
        let mut top = p.len();
        let mut put = |p: &mut PageViewMut<'_>, bytes: &[u8]| {
            top -= bytes.len();
            p.write(top, bytes);
            top
        };
        let mut flags = 0;
        let mut fences = [(0usize, 0usize); 2];
        for (i, (f, missing)) in [(&self.lower, NO_LOWER), (&self.upper, NO_UPPER)].into_iter().enumerate() {
            match f {
                Some(k) => fences[i] = (put(p, k), k.len()),
                None => flags |= missing,
            }
        }
        for (i, (k, v)) in self.entries.iter().enumerate() {
            let off = put(p, v);
            let off = put(p, k).min(off);
            let at = HDR + i * SLOT;
            p.set_u16(at, off as u16);
            p.set_u8(at + 2, k.len() as u8);
            p.set_u8(at + 3, v.len() as u8);
        }
        p.set_u8(0, if self.leaf { LEAF } else { INNER });
        p.set_u8(1, 0);
        p.set_u16(2, self.entries.len() as u16);
        p.set_u16(4, top as u16);
        p.set_u16(6, 0);
        p.set_u64(8, self.right);
        p.set_u16(16, fences[0].0 as u16);
        p.set_u8(18, fences[0].1 as u8);
        p.set_u8(19, flags);
        p.set_u16(20, fences[1].0 as u16);
        p.set_u8(22, fences[1].1 as u8);
        p.set_u8(23, 0);
    }

    fn search(&self, key: &[u8]) -> std::result::Result<usize, usize> {
        self.entries.binary_search_by(|(k, _)| k.as_slice().cmp(key))
    }

    fn upsert(&mut self, key: &[u8], value: &[u8]) {
        match self.search(key) {
            Ok(i) => self.entries[i].1 = value.to_vec(),
            Err(i) => self.entries.insert(i, (key.to_vec(), value.to_vec())),
        }
    }

    /// Splits an overfull node into `(left, separator, right)`. With
    /// `append` (the newest key went to the end of a leaf) the left node
    /// keeps everything but that key, so ascending loads fill pages.
    fn split(self, append: bool, page_size: usize) -> (Node, Vec<u8>, Node) {
        let n = self.entries.len();
        let sizes: Vec<usize> = self.entries.iter().map(|(k, v)| SLOT + k.len() + v.len()).collect();
        let fence_len = |f: &Option<Vec<u8>>| f.as_ref().map_or(0, Vec::len);
        let fits = |m: usize| {
            // leaf separators are copied into both halves; inner ones move up
            let sep = self.entries[m - 1].0.len();
            let left_entries: usize = if self.leaf { sizes[..m].iter().sum() } else { sizes[..m - 1].iter().sum() };
            let left = HDR + fence_len(&self.lower) + sep + left_entries;
            let right = HDR + sep + fence_len(&self.upper) + sizes[m..].iter().sum::<usize>();
            left <= page_size && right <= page_size
        };
        let total: usize = sizes.iter().sum();
        let mut balanced = 1;
        let mut acc = sizes[0];
        while balanced < n - 1 && acc * 2 < total {
            acc += sizes[balanced];
            balanced += 1;
        }
        let m = if append && self.leaf && fits(n - 1) {
            n - 1
        } else {
            (1..n)
                .filter(|&m| fits(m))
                .min_by_key(|&m| m.abs_diff(balanced))
                .expect("an overfull node always has a valid split point")
        };
        let mut entries = self.entries;
        let right_entries = entries.split_off(m);
        if self.leaf {
            let sep = entries.last().expect("left half non-empty").0.clone();
            let left = Node {
                leaf: true,
                lower: self.lower,
                upper: Some(sep.clone()),
                entries,
                right: 0,
            };
            let right = Node { leaf: true, lower: Some(sep.clone()), upper: self.upper, entries: right_entries, right: 0 };
            (left, sep, right)
        } else {
            // the middle entry moves up; its child becomes the left's rightmost
            let (sep, mid_child) = entries.pop().expect("left half non-empty");
            let left = Node {
                leaf: false,
                lower: self.lower,
                upper: Some(sep.clone()),
                entries,
                right: u64::from_le_bytes(mid_child.try_into().expect("child id")),
            };
            let right =
                Node { leaf: false, lower: Some(sep.clone()), upper: self.upper, entries: right_entries, right: self.right };
            (left, sep, right)
        }
    }
}

/// Live bytes of a node (without garbage left by overwrites).
fn live_size(p: &PageView<'_>) -> usize {
    let flags = p.u8_at(19);
    let mut size = HDR;
    if flags & NO_LOWER == 0 {
        size += p.u8_at(18) as usize;
    }
    if flags & NO_UPPER == 0 {
        size += p.u8_at(22) as usize;
    }
    for i in 0..count(p) {
        let (_, k, v) = slot(p, i);
        size += SLOT + k + v;
    }
    size
}

/// Inserts or overwrites in place if the node's free gap allows.
fn upsert_in_place(p: &mut PageViewMut<'_>, key: &[u8], value: &[u8]) -> bool {
    let view = p.as_view();
    let (i, found) = Probe { key, after: false }.position(&view);
    let n = count(&view);
    if found {
        let (off, klen, vlen) = slot(&view, i);
        if vlen == value.len() {
            p.write(off + klen, value);
            return true;
        }
    }
    let top = view.u16_at(4) as usize;
    let slots_end = HDR + (n + usize::from(!found)) * SLOT;
    let need = key.len() + value.len();
    if top < slots_end + need {
        return false;
    }
    let off = top - need;
    p.write(off, key);
    p.write(off + key.len(), value);
    if !found {
        p.copy_within(HDR + i * SLOT, HDR + (i + 1) * SLOT, (n - i) * SLOT);
        p.set_u16(2, (n + 1) as u16);
    }
    let at = HDR + i * SLOT;
    p.set_u16(at, off as u16);
    p.set_u8(at + 2, key.len() as u8);
    p.set_u8(at + 3, value.len() as u8);
    p.set_u16(4, off as u16);
    true
}

/// A B+tree whose pages live in a [`BufferPool`].
pub struct BTree<'p> {
    pool: &'p BufferPool,
}

impl<'p> BTree<'p> {
    /// Formats an empty tree. Pages 0 and 1 must never have been used.
    pub fn create<R: Rng + ?Sized>(pool: &'p BufferPool, rng: &mut R) -> Result<Self> {
        let page_size = pool.backend().page_size();
        if page_size > u16::MAX as usize || page_size < 512 {
            return Err(PoolError::InvalidArgument(format!("b+tree pages must be 512..=32768 bytes, got {page_size}")));
        }
        if pool.slot_count() < 2 {
            return Err(PoolError::OutOfPages);
        }
        {
            let mut meta = pool.fix_new(META, rng)?;
            let mut p = meta.page_mut();
            p.set_u64(0, MAGIC);
            p.set_u64(8, ROOT.0 + 1);
        }
        let mut root = pool.fix_new(ROOT, rng)?;
        Node { leaf: true, ..Default::default() }.write(&mut root.page_mut());
        drop(root);
        Ok(BTree { pool })
    }

    /// Attaches to a tree previously created in this pool's disk image.
    pub fn open<R: Rng + ?Sized>(pool: &'p BufferPool, rng: &mut R) -> Result<Self> {
        let magic = pool.optimistic_read(META, rng, |p| p.u64_at(0))?;
        if magic != MAGIC {
            return Err(PoolError::InvalidArgument("page 0 does not hold a b+tree".into()));
        }
        Ok(BTree { pool })
    }

    pub fn pool(&self) -> &'p BufferPool {
        self.pool
    }

    /// Pages handed out so far, including the meta page and the root.
    pub fn allocated_pages<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        self.pool.optimistic_read(META, rng, |p| p.u64_at(8))
    }

    fn allocate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PageGuard<'p>> {
        let pid = {
            let mut meta = self.pool.fix(META, AccessMode::Exclusive, rng)?;
            let next = meta.page().u64_at(8);
            if next as usize >= self.pool.slot_count() {
                return Err(PoolError::OutOfPages);
            }
            meta.page_mut().set_u64(8, next + 1);
            PageId(next)
        };
        self.pool.fix_new(pid, rng)
    }

    fn check_key(key: &[u8]) -> Result<()> {
        if key.is_empty() || key.len() > MAX_KEY {
            return Err(PoolError::InvalidArgument(format!("key length {} outside 1..={MAX_KEY}", key.len())));
        }
        Ok(())
    }

    /// Optimistic descent to the leaf covering `probe`, then `at_leaf` on it.
    fn descend<R, T, F>(&self, probe: Probe<'_>, rng: &mut R, mut at_leaf: F) -> Result<(PageId, T)>
    where
        R: Rng + ?Sized,
        F: FnMut(&PageView<'_>) -> T,
    {
        'restart: loop {
            let mut pid = ROOT;
            loop {
                let step = self.pool.optimistic_read(pid, rng, |p| {
                    if !probe.covered_by(&p) {
                        Step::Restart
                    } else if p.u8_at(0) == LEAF {
                        Step::Done(at_leaf(&p))
                    } else {
                        Step::Descend(probe.child(&p))
                    }
                })?;
                match step {
                    Step::Descend(child) => pid = child,
                    Step::Done(v) => return Ok((pid, v)),
                    Step::Restart => continue 'restart,
                }
            }
        }
    }

    pub fn lookup<R: Rng + ?Sized>(&self, key: &[u8], rng: &mut R) -> Result<Option<Vec<u8>>> {
        Self::check_key(key)?;
        let probe = Probe { key, after: false };
        let (_, v) = self.descend(probe, rng, |p| match probe.position(p) {
            (i, true) => Some(payload_at(p, i)),
            _ => None,
        })?;
        Ok(v)
    }

    /// Up to `limit` entries with keys at or after `from`, in key order.
    pub fn scan<R: Rng + ?Sized>(&self, from: &[u8], limit: usize, rng: &mut R) -> Result<Vec<(Vec<u8>, Vec<u8>)>> {
        let mut out = Vec::new();
        let mut cursor: Bound<Vec<u8>> = Bound::Included(from.to_vec());
        while out.len() < limit {
            let probe = match &cursor {
                Bound::Included(k) => Probe { key: k, after: false },
                Bound::Excluded(k) => Probe { key: k, after: true },
                Bound::Unbounded => unreachable!(),
            };
            let want = limit - out.len();
            let (_, (mut entries, upper)) = self.descend(probe, rng, |p| {
                let mut buf = [0u8; 256];
                let (start, _) = probe.position(p);
                let end = count(p).min(start + want);
                let entries: Vec<_> = (start..end).map(|i| (key_at(p, i, &mut buf).to_vec(), payload_at(p, i))).collect();
                (entries, fence(p, true))
            })?;
            out.append(&mut entries);
            match upper {
                Some(u) => cursor = Bound::Excluded(u),
                None => break,
            }
        }
        Ok(out)
    }

    /// Inserts `key`, replacing any previous value.
    pub fn insert<R: Rng + ?Sized>(&self, key: &[u8], value: &[u8], rng: &mut R) -> Result<()> {
        Self::check_key(key)?;
        if value.len() > MAX_VALUE {
            return Err(PoolError::InvalidArgument(format!("value length {} above {MAX_VALUE}", value.len())));
        }
        let probe = Probe { key, after: false };
        loop {
            let (leaf, ()) = self.descend(probe, rng, |_| ())?;
            let mut g = self.pool.fix(leaf, AccessMode::Exclusive, rng)?;
            let view = g.page();
            if view.u8_at(0) != LEAF || !probe.covered_by(&view) {
                continue;
            }
            let fits = upsert_in_place(&mut g.page_mut(), key, value);
            if fits {
                return Ok(());
            }
            drop(g);
            return self.insert_pessimistic(key, value, rng);
        }
    }

    fn insert_pessimistic<R: Rng + ?Sized>(&self, key: &[u8], value: &[u8], rng: &mut R) -> Result<()> {
        let probe = Probe { key, after: false };
        let page_size = self.pool.backend().page_size();
        // exclusive guards from the highest ancestor that may split down to the leaf
        let mut path: Vec<PageGuard<'p>> = vec![self.pool.fix(ROOT, AccessMode::Exclusive, rng)?];
        loop {
            let view = path.last().expect("path").page();
            if view.u8_at(0) == LEAF {
                break;
            }
            let child = self.pool.fix(probe.child(&view), AccessMode::Exclusive, rng)?;
            let cv = child.page();
            let safe = if cv.u8_at(0) == LEAF {
                let mut n = Node::read(&cv);
                n.upsert(key, value);
                n.size() <= page_size
            } else {
                live_size(&cv) + MAX_SEPARATOR <= page_size
            };
            if safe {
                path.clear();
            }
            path.push(child);
        }

        let mut level = path.len() - 1;
        let mut node = Node::read(&path[level].page());
        let append = node.entries.last().is_none_or(|(k, _)| k.as_slice() < key);
        node.upsert(key, value);
        loop {
            if node.size() <= page_size {
                node.write(&mut path[level].page_mut());
                return Ok(());
            }
            let (left, sep, right) = node.split(append, page_size);
            if path[level].pid() == ROOT {
                let mut lg = self.allocate(rng)?;
                let mut rg = self.allocate(rng)?;
                left.write(&mut lg.page_mut());
                right.write(&mut rg.page_mut());
                let root = Node {
                    leaf: false,
                    entries: vec![(sep, lg.pid().0.to_le_bytes().to_vec())],
                    right: rg.pid().0,
                    ..Default::default()
                };
                root.write(&mut path[level].page_mut());
                return Ok(());
            }
            // the new page takes the left half; the node keeps its id and the right half
            let mut lg = self.allocate(rng)?;
            left.write(&mut lg.page_mut());
            right.write(&mut path[level].page_mut());
            let left_pid = lg.pid();
            drop(lg);
            level = level.checked_sub(1).expect("splitting node has a locked parent");
            node = Node::read(&path[level].page());
            node.upsert(&sep, &left_pid.0.to_le_bytes());
        }
    }

    /// Walks the whole tree under shared locks, checking key order, fences
    /// and leaf depth. Returns the number of entries.
    pub fn check<R: Rng + ?Sized>(&self, rng: &mut R) -> std::result::Result<usize, String> {
        let mut depth = None;
        self.check_node(ROOT, None, None, 0, &mut depth, rng)
    }

    fn check_node<R: Rng + ?Sized>(
        &self,
        pid: PageId,
        lower: Option<&[u8]>,
        upper: Option<&[u8]>,
        level: usize,
        leaf_depth: &mut Option<usize>,
        rng: &mut R,
    ) -> std::result::Result<usize, String> {
        let node = {
            let g = self.pool.fix(pid, AccessMode::Shared, rng).map_err(|e| e.to_string())?;
            Node::read(&g.page())
        };
        if node.lower.as_deref() != lower || node.upper.as_deref() != upper {
            return Err(format!("{pid}: fences {:?}..{:?}, parent says {lower:?}..{upper:?}", node.lower, node.upper));
        }
        for w in node.entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(format!("{pid}: keys out of order"));
            }
        }
        for (k, _) in &node.entries {
            if lower.is_some_and(|l| k.as_slice() <= l) || upper.is_some_and(|u| k.as_slice() > u) {
                return Err(format!("{pid}: key outside fences"));
            }
        }
        if node.leaf {
            if *leaf_depth.get_or_insert(level) != level {
                return Err(format!("{pid}: leaf at depth {level}"));
            }
            return Ok(node.entries.len());
        }
        let mut total = 0;
        let mut lo = lower;
        for (k, c) in &node.entries {
            let child = PageId(u64::from_le_bytes(c.as_slice().try_into().map_err(|_| format!("{pid}: bad child"))?));
            total += self.check_node(child, lo, Some(k), level + 1, leaf_depth, rng)?;
            lo = Some(k);
        }
        total += self.check_node(PageId(node.right), lo, upper, level + 1, leaf_depth, rng)?;
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::TierTopology;
    use crate::pool::PoolConfig;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn pool(pages: usize) -> BufferPool {
        BufferPool::new(PoolConfig::new(TierTopology::three_tier(pages, 2 * pages, 4096).with_page_size(1024))).unwrap()
    }

    #[test]
    fn insert_then_lookup() {
        let pool = pool(64);
        let mut rng = StdRng::seed_from_u64(1);
        let t = BTree::create(&pool, &mut rng).unwrap();
        t.insert(b"apple", b"red", &mut rng).unwrap();
        assert_eq!(t.lookup(b"apple", &mut rng).unwrap().as_deref(), Some(&b"red"[..]));
        assert_eq!(t.lookup(b"pear", &mut rng).unwrap(), None);
        t.insert(b"apple", b"green!", &mut rng).unwrap();
        assert_eq!(t.lookup(b"apple", &mut rng).unwrap().as_deref(), Some(&b"green!"[..]));
    }

    #[test]
    fn sorted_inserts_scan_in_order() {
        let pool = pool(64);
        let mut rng = StdRng::seed_from_u64(2);
        let t = BTree::create(&pool, &mut rng).unwrap();
        for i in 0u64..3000 {
            t.insert(&i.to_be_bytes(), &[i as u8; 40], &mut rng).unwrap();
        }
        assert_eq!(t.check(&mut rng).unwrap(), 3000);
        let all = t.scan(&0u64.to_be_bytes(), usize::MAX, &mut rng).unwrap();
        assert_eq!(all.len(), 3000);
        for (i, (k, v)) in all.iter().enumerate() {
            assert_eq!(k.as_slice(), (i as u64).to_be_bytes());
            assert_eq!(v[0], i as u8);
        }
        let mid = t.scan(&1500u64.to_be_bytes(), 10, &mut rng).unwrap();
        assert_eq!(mid.first().unwrap().0, 1500u64.to_be_bytes());
        assert_eq!(mid.len(), 10);
    }

    #[test]
    fn ascending_load_fills_leaves() {
        let pool = pool(256);
        let mut rng = StdRng::seed_from_u64(3);
        let t = BTree::create(&pool, &mut rng).unwrap();
        // 8-byte keys, 120-byte values: 7 entries per 1 KiB leaf
        for i in 0u64..700 {
            t.insert(&i.to_be_bytes(), &[0; 120], &mut rng).unwrap();
        }
        let leaves = t.allocated_pages(&mut rng).unwrap();
        assert!(leaves <= 2 + 100 + 20, "{leaves} pages used");
    }

    #[test]
    fn rejects_bad_arguments() {
        let pool = pool(16);
        let mut rng = StdRng::seed_from_u64(4);
        let t = BTree::create(&pool, &mut rng).unwrap();
        assert!(t.insert(b"", b"x", &mut rng).is_err());
        assert!(t.insert(&[1; MAX_KEY + 1], b"x", &mut rng).is_err());
        assert!(t.insert(b"k", &[0; MAX_VALUE + 1], &mut rng).is_err());
        t.insert(&[1; MAX_KEY], &[0; MAX_VALUE], &mut rng).unwrap();
    }
}
