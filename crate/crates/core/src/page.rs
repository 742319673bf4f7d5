//! Page identifiers and byte views over frames.
//!
//! Frames are stored as arrays of `AtomicU64` so that optimistic readers may
//! race with writers without undefined behaviour; a torn read is caught by
//! version validation afterwards. All accesses are relaxed. Bytes are laid
//! out little-endian within each word, so a frame copied to disk is the plain
//! byte image of the page.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

/// A page's slot in the reserved page space. Never changes for the page's
/// lifetime, whatever frame currently backs it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PageId(pub u64);

impl PageId {
    pub fn slot(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

/// Read access to one page image.
///
/// Reads beyond the end of the page return zeroes instead of panicking:
/// an optimistic reader may follow a garbage offset out of a torn page, and
/// the result is discarded on validation anyway.
#[derive(Clone, Copy)]
pub struct PageView<'a> {
    words: &'a [AtomicU64],
}

impl<'a> PageView<'a> {
    pub fn new(words: &'a [AtomicU64]) -> Self {
        PageView { words }
    }

    pub fn len(&self) -> usize {
        self.words.len() * 8
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, index: usize) -> u64 {
        self.words.get(index).map_or(0, |w| w.load(Ordering::Relaxed))
    }

    pub fn u8_at(&self, offset: usize) -> u8 {
        (self.word(offset / 8) >> ((offset % 8) * 8)) as u8
    }

    pub fn u16_at(&self, offset: usize) -> u16 {
        let mut buf = [0u8; 2];
        self.read(offset, &mut buf);
        u16::from_le_bytes(buf)
    }

    pub fn u32_at(&self, offset: usize) -> u32 {
        let mut buf = [0u8; 4];
        self.read(offset, &mut buf);
        u32::from_le_bytes(buf)
    }

    pub fn u64_at(&self, offset: usize) -> u64 {
        if offset.is_multiple_of(8) {
            return self.word(offset / 8);
        }
        let mut buf = [0u8; 8];
        self.read(offset, &mut buf);
        u64::from_le_bytes(buf)
    }

    pub fn read(&self, offset: usize, out: &mut [u8]) {
        let mut pos = offset;
        let mut done = 0;
        while done < out.len() {
            let shift = pos % 8;
            let word = self.word(pos / 8).to_le_bytes();
            let take = (8 - shift).min(out.len() - done);
            out[done..done + take].copy_from_slice(&word[shift..shift + take]);
            done += take;
            pos += take;
        }
    }

    pub fn to_vec(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len()];
        self.read(0, &mut out);
        out
    }

    pub fn copy_to(&self, dst: &[AtomicU64]) {
        for (d, s) in dst.iter().zip(self.words) {
            d.store(s.load(Ordering::Relaxed), Ordering::Relaxed);
        }
    }
}

/// Write access to one page image. Only handed out under an exclusive lock.
pub struct PageViewMut<'a> {
    words: &'a [AtomicU64],
}

impl<'a> PageViewMut<'a> {
    pub fn new(words: &'a [AtomicU64]) -> Self {
        PageViewMut { words }
    }

    pub fn as_view(&self) -> PageView<'_> {
        PageView::new(self.words)
    }

    pub fn len(&self) -> usize {
        self.words.len() * 8
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn set_word(&mut self, index: usize, value: u64) {
        self.words[index].store(value, Ordering::Relaxed);
    }

    pub fn write(&mut self, offset: usize, bytes: &[u8]) {
        assert!(offset + bytes.len() <= self.len(), "write past end of page");
        let mut pos = offset;
        let mut done = 0;
        while done < bytes.len() {
            let shift = pos % 8;
            let take = (8 - shift).min(bytes.len() - done);
            let cell = &self.words[pos / 8];
            let value = if take == 8 {
                u64::from_le_bytes(bytes[done..done + 8].try_into().unwrap())
            } else {
                let mut word = cell.load(Ordering::Relaxed).to_le_bytes();
                word[shift..shift + take].copy_from_slice(&bytes[done..done + take]);
                u64::from_le_bytes(word)
            };
            cell.store(value, Ordering::Relaxed);
            done += take;
            pos += take;
        }
    }

    pub fn set_u8(&mut self, offset: usize, v: u8) {
        self.write(offset, &[v]);
    }

    pub fn set_u16(&mut self, offset: usize, v: u16) {
        self.write(offset, &v.to_le_bytes());
    }

    pub fn set_u32(&mut self, offset: usize, v: u32) {
        self.write(offset, &v.to_le_bytes());
    }

    pub fn set_u64(&mut self, offset: usize, v: u64) {
        if offset.is_multiple_of(8) {
            self.set_word(offset / 8, v);
        } else {
            self.write(offset, &v.to_le_bytes());
        }
    }

    pub fn fill(&mut self, byte: u8) {
        let w = u64::from_ne_bytes([byte; 8]);
        for cell in self.words {
            cell.store(w, Ordering::Relaxed);
        }
    }

    /// Moves `len` bytes from `src` to `dst` within the page, like `memmove`.
    pub fn copy_within(&mut self, src: usize, dst: usize, len: usize) {
        if len == 0 || src == dst {
            return;
        }
        let mut tmp = vec![0u8; len];
        self.as_view().read(src, &mut tmp);
        self.write(dst, &tmp);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(words: usize) -> Vec<AtomicU64> {
        (0..words).map(|_| AtomicU64::new(0)).collect()
    }

    #[test]
    fn unaligned_round_trip() {
        let f = frame(8);
        let mut m = PageViewMut::new(&f);
        m.set_u16(3, 0xBEEF);
        m.set_u64(9, 0x0102_0304_0506_0708);
        m.write(30, b"hello, tiers");
        let v = PageView::new(&f);
        assert_eq!(v.u16_at(3), 0xBEEF);
        assert_eq!(v.u64_at(9), 0x0102_0304_0506_0708);
        let mut out = [0u8; 12];
        v.read(30, &mut out);
        assert_eq!(&out, b"hello, tiers");
    }

    #[test]
    fn little_endian_image() {
        let f = frame(1);
        PageViewMut::new(&f).write(0, &[1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(f[0].load(Ordering::Relaxed), u64::from_le_bytes([1, 2, 3, 4, 5, 6, 7, 8]));
    }

    #[test]
    fn reads_past_end_are_zero() {
        let f = frame(2);
        PageViewMut::new(&f).fill(0xAA);
        let v = PageView::new(&f);
        assert_eq!(v.u8_at(15), 0xAA);
        assert_eq!(v.u32_at(14), 0x0000_AAAA);
        assert_eq!(v.u64_at(1 << 20), 0);
    }

    #[test]
    fn copy_within_overlapping() {
        let f = frame(4);
        let mut m = PageViewMut::new(&f);
        m.write(0, b"abcdefghij");
        m.copy_within(0, 2, 10);
        let mut out = [0u8; 12];
        m.as_view().read(0, &mut out);
        assert_eq!(&out, b"ababcdefghij");
    }
}
