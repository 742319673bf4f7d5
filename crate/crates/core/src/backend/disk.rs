//! Simulated disk. In memory by default; optionally a flat file with page
//! `i` at byte offset `i * page_size`, raw little-endian page images.

use std::fs::{File, OpenOptions};
use std::io;
use std::os::unix::fs::FileExt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

enum Store {
    Memory(Box<[AtomicU64]>),
    File(File),
}

pub struct SimDisk {
    store: Store,
    pages: usize,
    page_size: usize,
}

impl SimDisk {
    pub fn in_memory(pages: usize, page_size: usize) -> Self {
        let words = pages * page_size / 8;
        let store = (0..words).map(|_| AtomicU64::new(0)).collect();
        SimDisk { store: Store::Memory(store), pages, page_size }
    }

    /// Opens or creates the backing file, growing it to `pages` pages.
    /// Existing contents are kept.
    pub fn open_file(path: &Path, pages: usize, page_size: usize) -> io::Result<Self> {
        let file = OpenOptions::new().read(true).write(true).create(true).truncate(false).open(path)?;
        let want = (pages * page_size) as u64;
        if file.metadata()?.len() < want {
            file.set_len(want)?;
        }
        Ok(SimDisk { store: Store::File(file), pages, page_size })
    }

    pub fn pages(&self) -> usize {
        self.pages
    }

    pub fn is_file_backed(&self) -> bool {
        matches!(self.store, Store::File(_))
    }

    pub fn read_page(&self, slot: usize, dst: &[AtomicU64]) -> io::Result<()> {
        debug_assert!(slot < self.pages);
        match &self.store {
            Store::Memory(words) => {
                let base = slot * self.page_size / 8;
                for (d, s) in dst.iter().zip(&words[base..base + dst.len()]) {
                    d.store(s.load(Ordering::Relaxed), Ordering::Relaxed);
                }
            }
            Store::File(file) => {
                let mut buf = vec![0u8; self.page_size];
                file.read_exact_at(&mut buf, (slot * self.page_size) as u64)?;
                for (d, chunk) in dst.iter().zip(buf.chunks_exact(8)) {
                    d.store(u64::from_le_bytes(chunk.try_into().unwrap()), Ordering::Relaxed);
                }
            }
        }
        Ok(())
    }

    pub fn write_page(&self, slot: usize, src: &[AtomicU64]) -> io::Result<()> {
        debug_assert!(slot < self.pages);
        match &self.store {
            Store::Memory(words) => {
                let base = slot * self.page_size / 8;
                for (d, s) in words[base..base + src.len()].iter().zip(src) {
                    d.store(s.load(Ordering::Relaxed), Ordering::Relaxed);
                }
            }
            Store::File(file) => {
                let mut buf = Vec::with_capacity(self.page_size);
                for w in src {
                    buf.extend_from_slice(&w.load(Ordering::Relaxed).to_le_bytes());
                }
                file.write_all_at(&buf, (slot * self.page_size) as u64)?;
            }
        }
        Ok(())
    }

    /// Raw bytes of a page as stored, for tests and tooling.
    pub fn snapshot(&self, slot: usize) -> io::Result<Vec<u8>> {
        let words: Vec<AtomicU64> = (0..self.page_size / 8).map(|_| AtomicU64::new(0)).collect();
        self.read_page(slot, &words)?;
        Ok(words.iter().flat_map(|w| w.load(Ordering::Relaxed).to_le_bytes()).collect())
    }

    pub fn sync(&self) -> io::Result<()> {
        match &self.store {
            Store::Memory(_) => Ok(()),
            Store::File(f) => f.sync_data(),
        }
    }
}
