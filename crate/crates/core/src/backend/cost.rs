use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

pub const DEFAULT_SHOOTDOWN_NS: u64 = 4_000;

/// Simulated latencies. When disabled every charge is free, which keeps unit
/// tests fast; benchmarks turn it on so tier asymmetry shows up in wall time.
#[derive(Debug)]
pub struct CostModel {
    enabled: AtomicBool,
    shootdown_ns: AtomicU64,
    charged_ns: AtomicU64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            enabled: AtomicBool::new(false),
            shootdown_ns: AtomicU64::new(DEFAULT_SHOOTDOWN_NS),
            charged_ns: AtomicU64::new(0),
        }
    }
}

impl CostModel {
    pub fn is_enabled(&self) -> bool {
        self.enabled.load(Ordering::Relaxed)
    }

    pub fn set_enabled(&self, on: bool) {
        self.enabled.store(on, Ordering::Relaxed);
    }

    pub fn shootdown_ns(&self) -> u64 {
        self.shootdown_ns.load(Ordering::Relaxed)
    }

    pub fn set_shootdown_ns(&self, ns: u64) {
        self.shootdown_ns.store(ns, Ordering::Relaxed);
    }

    /// Total simulated time charged so far.
    pub fn charged_ns(&self) -> u64 {
        self.charged_ns.load(Ordering::Relaxed)
    }

    pub fn charge(&self, ns: u64) {
        if ns == 0 || !self.is_enabled() {
            return;
        }
        self.charged_ns.fetch_add(ns, Ordering::Relaxed);
        spin_for(Duration::from_nanos(ns));
    }

    pub fn charge_shootdown(&self) {
        self.charge(self.shootdown_ns());
    }
}

fn spin_for(d: Duration) {
    let start = Instant::now();
    while start.elapsed() < d {
        std::hint::spin_loop();
    }
}

/// Nanoseconds to move `bytes` at `mb_s` megabytes per second.
pub fn copy_ns(bytes: usize, mb_s: u64) -> u64 {
    if mb_s == 0 {
        return 0;
    }
    (bytes as u64 * 1_000).div_ceil(mb_s)
}
