use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Barrier;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tierpool::{AccessMode, BufferPool, MigrationPolicy, PageId, PoolConfig, TierId, TierTopology};

fn pool(local: usize, remote: usize, disk: usize, policy: MigrationPolicy) -> BufferPool {
    BufferPool::new(PoolConfig::new(TierTopology::three_tier(local, remote, disk).with_page_size(512)).policy(policy))
        .unwrap()
}

fn mixed_policy() -> MigrationPolicy {
    MigrationPolicy { dr: 0.6, dw: 0.5, rr: 0.3, rw: 0.8, evict_batch: 6, promote_batch: 4, ..Default::default() }
}

/// Each written page stores (tag, !tag) in its first two words; pages never
/// written are all zero.
fn check_pair(p: tierpool::PageView<'_>) -> bool {
    let (a, b) = (p.u64_at(0), p.u64_at(8));
    a == !b || (a == 0 && b == 0)
}

#[test]
fn randomized_ops_keep_residency_coherent() {
    const THREADS: usize = 8;
    const BARRIERS: usize = 100;
    const OPS_PER_PHASE: usize = 150;
    let pool = pool(32, 64, 4096, mixed_policy());
    let barrier = Barrier::new(THREADS + 1);
    let torn = AtomicBool::new(false);
    let mut violations = Vec::new();
    std::thread::scope(|s| {
        for t in 0..THREADS {
            let (pool, barrier, torn) = (&pool, &barrier, &torn);
            s.spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(t as u64);
                for _ in 0..BARRIERS {
                    for _ in 0..OPS_PER_PHASE {
                        // a hot range keeps the upper tiers busy
                        let pid = PageId(if rng.random_bool(0.7) {
                            rng.random_range(0..96)
                        } else {
                            rng.random_range(0..4096)
                        });
                        match rng.random_range(0..10) {
                            0..=3 => {
                                let ok = pool.optimistic_read(pid, &mut rng, check_pair).unwrap();
                                if !ok {
                                    torn.store(true, Ordering::SeqCst);
                                }
                            }
                            4..=5 => {
                                let g = pool.fix(pid, AccessMode::Shared, &mut rng).unwrap();
                                if !check_pair(g.page()) {
                                    torn.store(true, Ordering::SeqCst);
                                }
                            }
                            6..=7 => {
                                let mut g = pool.fix(pid, AccessMode::Exclusive, &mut rng).unwrap();
                                let tag: u64 = rng.random();
                                let mut p = g.page_mut();
                                p.set_u64(0, tag);
                                p.set_u64(8, !tag);
                            }
                            8 => {
                                let g = pool.fix(pid, AccessMode::Exclusive, &mut rng).unwrap();
                                pool.promote_batch(&g, &mut rng).unwrap();
                            }
                            _ => {
                                let tier = TierId(rng.random_range(0..2));
                                pool.evict_batch(tier, &mut rng).unwrap();
                            }
                        }
                    }
                    barrier.wait();
                    barrier.wait();
                }
            });
        }
        for phase in 0..BARRIERS {
            barrier.wait();
            // record instead of panicking so the workers are never left at the barrier
            if let Err(e) = pool.audit() {
                violations.push(format!("phase {phase}: {e}"));
            }
            barrier.wait();
        }
    });
    assert!(violations.is_empty(), "{violations:?}");
    assert!(!torn.load(Ordering::SeqCst));
    let s = pool.stats();
    assert_eq!(s.threshold_violations, 0);
    assert_eq!(s.accesses, s.total_hits() + s.faults);
    assert!(s.promotions > 0 && s.demotions > 0 && s.evictions > 0);
}

#[test]
fn concurrent_increments_are_not_lost() {
    const THREADS: u64 = 8;
    const INCREMENTS: u64 = 2_000;
    const PAGES: u64 = 64;
    let pool = pool(16, 32, 256, mixed_policy());
    let done = AtomicBool::new(false);
    std::thread::scope(|s| {
        let (pool_ref, done_ref) = (&pool, &done);
        // keep pages moving between tiers
        s.spawn(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            while !done_ref.load(Ordering::SeqCst) {
                pool_ref.evict_batch(TierId(rng.random_range(0..2)), &mut rng).unwrap();
                std::thread::yield_now();
            }
        });
        let workers: Vec<_> = (0..THREADS)
            .map(|t| {
                s.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(t);
                    let mut last_seen = vec![0u64; PAGES as usize];
                    for _ in 0..INCREMENTS {
                        let pid = PageId(rng.random_range(0..PAGES));
                        {
                            let mut g = pool_ref.fix(pid, AccessMode::Exclusive, &mut rng).unwrap();
                            let v = g.page().u64_at(0) + 1;
                            let mut p = g.page_mut();
                            p.set_u64(0, v);
                            p.set_u64(8, !v);
                        }
                        let probe = PageId(rng.random_range(0..PAGES));
                        let (v, ok) = pool_ref
                            .optimistic_read(probe, &mut rng, |p| (p.u64_at(0), check_pair(p)))
                            .unwrap();
                        assert!(ok, "torn read of {probe}");
                        // a reader never observes a counter going backwards
                        assert!(v >= last_seen[probe.slot()]);
                        last_seen[probe.slot()] = v;
                    }
                })
            })
            .collect();
        let joined: Vec<_> = workers.into_iter().map(|w| w.join()).collect();
        done.store(true, Ordering::SeqCst);
        for r in joined {
            r.unwrap();
        }
    });
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let total: u64 = (0..PAGES).map(|i| pool.optimistic_read(PageId(i), &mut rng, |p| p.u64_at(0)).unwrap()).sum();
    assert_eq!(total, THREADS * INCREMENTS);
    pool.audit().unwrap();
}

#[test]
fn optimistic_read_sees_latest_committed_write() {
    let pool = pool(8, 16, 128, mixed_policy());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut truth = vec![0u64; 128];
    for step in 1..5000u64 {
        let pid = PageId(rng.random_range(0..128));
        if rng.random_bool(0.5) {
            let mut g = pool.fix(pid, AccessMode::Exclusive, &mut rng).unwrap();
            g.page_mut().set_u64(0, step);
            truth[pid.slot()] = step;
        } else {
            let v = pool.optimistic_read(pid, &mut rng, |p| p.u64_at(0)).unwrap();
            assert_eq!(v, truth[pid.slot()]);
        }
    }
    pool.audit().unwrap();
}
