//! Acceptance checks. Each test prints one `PASS` or `FAIL` line with its
//! measurement before asserting. Tests hold a shared lock so the timed and
//! throughput checks never compete with each other for CPU.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Barrier, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tierpool::migration::status;
use tierpool::{
    AccessMode, BTree, Backend, BufferPool, FailureInjector, Fault, LockState, MigrationEngine, MigrationMode,
    MigrationPolicy, MigrationRequest, PageId, PageView, Placement, PoolConfig, StateLayout, StateWord, TierId,
    TierTopology, Transition,
};
use tierpool_bench::{Interval, Latencies, RunConfig, RunReport, Stop, TierSizes, WorkloadKind, WorkloadSpec};

static SERIAL: Mutex<()> = Mutex::new(());

const LIMIT_STATE_TABLE: Duration = Duration::from_secs(1);
const LIMIT_ROUND_TRIP: Duration = Duration::from_secs(1);
const LIMIT_FUZZ: Duration = Duration::from_secs(120);
const LIMIT_INCREMENTS: Duration = Duration::from_secs(60);
const LIMIT_TREND: Duration = Duration::from_secs(300);
const LIMIT_BTREE: Duration = Duration::from_secs(60);
const MIN_BATCHING_RATIO: f64 = 1.2;
const MIN_REMOTE_RATIO: f64 = 1.0;
const THRESHOLD: f64 = 0.95;

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, name: &str, ok: bool, detail: String) {
    println!("\n{} criterion {n:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

// ---------------------------------------------------------------------------
// 1: state word transitions against a hand table

const V: u64 = 1234;

fn table(lock: u8, tier: u8, edge: Transition) -> Option<(u8, u8, u64)> {
    use Transition::*;
    match (edge, lock) {
        (LockShared, 0) => Some((1, tier, V)),
        (LockShared, 1..=251) => Some((lock + 1, tier, V)),
        (UnlockShared, 1..=252) => Some((lock - 1, tier, V)),
        (LockExclusive, 0 | 254) => Some((253, tier, V)),
        (UnlockExclusive { dirty }, 253) => Some((0, tier, V + dirty as u64)),
        (Mark, 0) => Some((254, tier, V)),
        (Evict, 253) => Some((255, 0, V + 1)),
        (SetTier(t), 253) if t.0 < 2 => Some((253, t.0, V)),
        (FaultIn(t), 255) if t.0 < 2 => Some((253, t.0, V)),
        _ => None,
    }
}

#[test]
fn criterion_01_state_transitions_match_table() {
    let _g = serial();
    let start = Instant::now();
    let layout = StateLayout::new(3).unwrap();
    let raw = |l: u8, t: u8, v: u64| ((l as u64) << 56) | ((t as u64) << 55) | v;
    let mut edges = vec![
        Transition::LockShared,
        Transition::UnlockShared,
        Transition::LockExclusive,
        Transition::UnlockExclusive { dirty: false },
        Transition::UnlockExclusive { dirty: true },
        Transition::Mark,
        Transition::Evict,
    ];
    for t in 0..3 {
        edges.push(Transition::SetTier(TierId(t)));
        edges.push(Transition::FaultIn(TierId(t)));
    }
    let (mut checked, mut disagreements) = (0, 0);
    for lock in 0..=255u8 {
        for tier in 0..2u8 {
            for &edge in &edges {
                let got = layout.transition(StateWord(raw(lock, tier, V)), edge).ok().map(|w| w.0);
                let want = table(lock, tier, edge).map(|(l, t, v)| raw(l, t, v));
                checked += 1;
                disagreements += (got != want) as u32;
            }
        }
    }
    let took = start.elapsed();
    verdict(
        1,
        "state transitions",
        disagreements == 0 && took < LIMIT_STATE_TABLE,
        format!("{checked} edges, {disagreements} disagreements, {took:?}"),
    );
}

// ---------------------------------------------------------------------------
// 2: bit layout round trip

#[test]
fn criterion_02_layout_round_trip() {
    let _g = serial();
    let start = Instant::now();
    let l = StateLayout::new(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0u32;
    let mut check = |lock: LockState, tier: TierId, version: u64| {
        let d = l.decode(l.encode(lock, tier, version).unwrap());
        bad += ((d.lock, d.tier, d.version) != (lock, tier, version)) as u32;
    };
    for _ in 0..1_000_000 {
        let lock = LockState::from_byte(rng.random());
        check(lock, TierId(rng.random_range(0..2)), rng.random::<u64>() & l.max_version());
    }
    for byte in [0, 1, 252, 253, 254, 255] {
        for tier in 0..2 {
            for version in [0, 1, l.max_version() - 1, l.max_version()] {
                check(LockState::from_byte(byte), TierId(tier), version);
            }
        }
    }
    let took = start.elapsed();
    verdict(
        2,
        "layout round trip",
        bad == 0 && l.max_version() == (1 << 55) - 1 && took < LIMIT_ROUND_TRIP,
        format!("10^6 samples plus boundaries, {bad} mismatches, {took:?}"),
    );
}

// ---------------------------------------------------------------------------
// 3: shootdown arithmetic

fn local_backend(n: usize) -> Backend {
    Backend::reserve(TierTopology::three_tier(n, n, n).with_page_size(512)).unwrap()
}

#[test]
fn criterion_03_shootdown_arithmetic() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = Vec::new();
    for case in 0..2000 {
        let n = rng.random_range(0..200);
        let cap = rng.random_range(1..64);
        let b = local_backend(n.max(1));
        let placed: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        // long same-target runs make multi-chunk rounds likely
        let mut targets = Vec::with_capacity(n);
        let mut t = 0u8;
        for _ in 0..n {
            if rng.random_bool(0.1) {
                t ^= 1;
            }
            targets.push(t);
        }
        for (i, &p) in placed.iter().enumerate() {
            b.bind_zeroed(PageId(i as u64), TierId(p)).unwrap();
        }
        let req = MigrationRequest {
            pages: (0..n as u64).map(PageId).collect(),
            targets: targets.iter().map(|&t| TierId(t)).collect(),
            mode: MigrationMode::Sync,
            max_batch: cap,
        };
        let out = MigrationEngine::new(&b).move_pages2(&req, &FailureInjector::none()).unwrap();
        // rounds are maximal same-target runs; only pages that actually move count
        let mut rounds: Vec<usize> = Vec::new();
        let mut prev = None;
        for i in 0..n {
            if prev != Some(targets[i]) {
                rounds.push(0);
                prev = Some(targets[i]);
            }
            if placed[i] != targets[i] {
                *rounds.last_mut().unwrap() += 1;
            }
        }
        let want: u64 = rounds.iter().map(|r| r.div_ceil(cap) as u64).sum();
        if out.shootdowns != want {
            bad.push(format!("case {case}: {} != {want}", out.shootdowns));
        }
    }
    let mut sweep = Vec::new();
    for cap in [128, 512, 1024] {
        let b = local_backend(1024);
        for i in 0..1024 {
            b.bind_zeroed(PageId(i), TierId(0)).unwrap();
        }
        let req = MigrationRequest::uniform((0..1024).map(PageId).collect(), TierId(1), MigrationMode::Sync, cap);
        sweep.push(MigrationEngine::new(&b).move_pages2(&req, &FailureInjector::none()).unwrap().shootdowns);
    }
    verdict(
        3,
        "shootdown arithmetic",
        bad.is_empty() && sweep == [8, 2, 1],
        format!("2000 fuzzed requests, {} mismatches {:?}; cap sweep {sweep:?}", bad.len(), bad.first()),
    );
}

// ---------------------------------------------------------------------------
// 4: optimistic vs abort-on-failure

#[test]
fn criterion_04_optimistic_vs_abort() {
    let _g = serial();
    let (n, cap) = (2000usize, 512usize);
    let mut lines = Vec::new();
    let mut ok = true;
    for k in [0, 1, n / 2, n - 1] {
        let inj = FailureInjector::none().with(PageId(k as u64), Fault::AccessFailure);
        let req = MigrationRequest::uniform((0..n as u64).map(PageId).collect(), TierId(1), MigrationMode::Sync, cap);
        let fresh = || {
            let b = local_backend(n);
            for i in 0..n as u64 {
                b.bind_zeroed(PageId(i), TierId(0)).unwrap();
            }
            b
        };
        let b = fresh();
        let mp2 = MigrationEngine::new(&b).move_pages2(&req, &inj).unwrap();
        let b = fresh();
        let legacy = MigrationEngine::new(&b).move_pages_legacy(&req, &inj).unwrap();
        let skipped = legacy.status.iter().filter(|&&s| s == status::SKIPPED).count();
        let legacy_want = (k / cap) * cap + k % cap;
        ok &= mp2.migrated == n - 1 && legacy.migrated == legacy_want && skipped == n - k - 1;
        lines.push(format!("k={k}: mp2 {} legacy {} skipped {skipped}", mp2.migrated, legacy.migrated));
    }
    verdict(4, "optimistic vs abort", ok, lines.join("; "));
}

// ---------------------------------------------------------------------------
// 5 and 7: residency coherence, frame conservation, eviction threshold

fn check_pair(p: PageView<'_>) -> bool {
    let (a, b) = (p.u64_at(0), p.u64_at(8));
    a == !b || (a == 0 && b == 0)
}

/// Independent of the pool's own audit: placements, resident sets, free
/// lists and the state words must tell the same story.
fn coherence(pool: &BufferPool) -> Result<(), String> {
    let backend = pool.backend();
    let mut placed = [0usize; 2];
    for i in 0..pool.slot_count() as u64 {
        let pid = PageId(i);
        let st = pool.state(pid);
        match (pool.placement(pid), st.lock()) {
            (Placement::OnDisk, LockState::Evicted) => {}
            (Placement::OnDisk, l) => return Err(format!("{pid} on disk but {l:?}")),
            (Placement::InMemory { tier, .. }, LockState::Evicted) => {
                return Err(format!("{pid} in tier {} but evicted", tier.0))
            }
            (Placement::InMemory { tier, .. }, LockState::Unlocked | LockState::Marked) => {
                if pool.layout().tier(st) != tier {
                    return Err(format!("{pid} tier bits disagree with placement"));
                }
                placed[tier.index()] += 1;
            }
            (_, l) => return Err(format!("{pid} still {l:?} at a quiescent point")),
        }
    }
    for t in 0..2u8 {
        let tier = TierId(t);
        let cap = backend.capacity(tier);
        if backend.free_frames(tier) + placed[t as usize] != cap {
            return Err(format!("tier {t}: {} free + {} placed != {cap}", backend.free_frames(tier), placed[t as usize]));
        }
        if pool.resident_count(tier) != placed[t as usize] {
            return Err(format!("tier {t}: resident set {} vs {} placed", pool.resident_count(tier), placed[t as usize]));
        }
        if placed[t as usize] as f64 >= THRESHOLD * cap as f64 {
            return Err(format!("tier {t}: {} of {cap} frames used", placed[t as usize]));
        }
    }
    pool.audit()
}

#[test]
fn criterion_05_07_fuzz_coherence_and_threshold() {
    let _g = serial();
    const THREADS: usize = 8;
    const BARRIERS: usize = 1000;
    const OPS_PER_PHASE: usize = 125;
    let start = Instant::now();
    let policy =
        MigrationPolicy { dr: 0.6, dw: 0.5, rr: 0.3, rw: 0.8, evict_batch: 6, promote_batch: 4, ..Default::default() };
    let pool =
        BufferPool::new(PoolConfig::new(TierTopology::three_tier(32, 64, 4096).with_page_size(512)).policy(policy))
            .unwrap();
    let barrier = Barrier::new(THREADS + 1);
    let torn = AtomicBool::new(false);
    let ops = AtomicU64::new(0);
    // occupancy right after each threshold-triggered or explicit evict_batch
    let over_threshold = AtomicU64::new(0);
    let mut violations = Vec::new();
    std::thread::scope(|s| {
        for t in 0..THREADS {
            let (pool, barrier, torn, ops, over) = (&pool, &barrier, &torn, &ops, &over_threshold);
            s.spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(0xacce ^ t as u64);
                for _ in 0..BARRIERS {
                    for _ in 0..OPS_PER_PHASE {
                        let pid = PageId(if rng.random_bool(0.7) {
                            rng.random_range(0..128)
                        } else {
                            rng.random_range(0..4096)
                        });
                        match rng.random_range(0..10) {
                            0..=3 => {
                                if !pool.optimistic_read(pid, &mut rng, check_pair).unwrap() {
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
                                let cap = pool.backend().capacity(tier) as f64;
                                if pool.occupancy(tier) as f64 >= THRESHOLD * cap {
                                    over.fetch_add(1, Ordering::Relaxed);
                                }
                            }
                        }
                        ops.fetch_add(1, Ordering::Relaxed);
                    }
                    barrier.wait();
                    barrier.wait();
                }
            });
        }
        for phase in 0..BARRIERS {
            barrier.wait();
            if let Err(e) = coherence(&pool) {
                violations.push(format!("barrier {phase}: {e}"));
            }
            barrier.wait();
        }
    });
    let took = start.elapsed();
    let s = pool.stats();
    let ops = ops.load(Ordering::Relaxed);
    let accounting = s.accesses == s.total_hits() + s.faults;
    verdict(
        5,
        "fuzz coherence",
        violations.is_empty() && !torn.load(Ordering::SeqCst) && accounting && ops == 1_000_000 && took < LIMIT_FUZZ,
        format!(
            "{ops} ops, {BARRIERS} barriers, {} violations {:?}, torn {}, {took:?}",
            violations.len(),
            violations.first(),
            torn.load(Ordering::SeqCst)
        ),
    );
    let over = over_threshold.load(Ordering::Relaxed);
    verdict(
        7,
        "eviction threshold",
        over == 0 && s.threshold_violations == 0 && s.evictions > 0 && s.demotions > 0,
        format!(
            "{} demotions, {} evictions, {over} post-evict readings and {} triggered evictions at or above {THRESHOLD}",
            s.demotions, s.evictions, s.threshold_violations
        ),
    );
}

// ---------------------------------------------------------------------------
// 6: no lost updates, no torn reads

#[test]
fn criterion_06_no_lost_updates() {
    let _g = serial();
    const THREADS: u64 = 8;
    const INCREMENTS: u64 = 10_000;
    const PAGES: u64 = 64;
    let start = Instant::now();
    let policy = MigrationPolicy { dr: 0.5, rr: 0.5, rw: 0.8, evict_batch: 4, promote_batch: 4, ..Default::default() };
    let pool =
        BufferPool::new(PoolConfig::new(TierTopology::three_tier(16, 32, 256).with_page_size(512)).policy(policy))
            .unwrap();
    let done = AtomicBool::new(false);
    let torn = AtomicU64::new(0);
    let backwards = AtomicU64::new(0);
    std::thread::scope(|s| {
        let (pool, done, torn, backwards) = (&pool, &done, &torn, &backwards);
        s.spawn(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(66);
            while !done.load(Ordering::SeqCst) {
                pool.evict_batch(TierId(rng.random_range(0..2)), &mut rng).unwrap();
                std::thread::yield_now();
            }
        });
        let workers: Vec<_> = (0..THREADS)
            .map(|t| {
                s.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(600 + t);
                    let mut seen = vec![0u64; PAGES as usize];
                    for _ in 0..INCREMENTS {
                        let pid = PageId(rng.random_range(0..PAGES));
                        {
                            let mut g = pool.fix(pid, AccessMode::Exclusive, &mut rng).unwrap();
                            let v = g.page().u64_at(0) + 1;
                            let mut p = g.page_mut();
                            p.set_u64(0, v);
                            p.set_u64(8, !v);
                        }
                        let probe = PageId(rng.random_range(0..PAGES));
                        let (v, ok) =
                            pool.optimistic_read(probe, &mut rng, |p| (p.u64_at(0), check_pair(p))).unwrap();
                        if !ok {
                            torn.fetch_add(1, Ordering::Relaxed);
                        }
                        if v < seen[probe.slot()] {
                            backwards.fetch_add(1, Ordering::Relaxed);
                        }
                        seen[probe.slot()] = v;
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
    let took = start.elapsed();
    let s = pool.stats();
    let (torn, backwards) = (torn.load(Ordering::Relaxed), backwards.load(Ordering::Relaxed));
    verdict(
        6,
        "no lost updates",
        total == THREADS * INCREMENTS && torn == 0 && backwards == 0 && pool.audit().is_ok() && took < LIMIT_INCREMENTS,
        format!(
            "sum {total} of {}, {torn} torn, {backwards} regressions, {} migrated pages, {took:?}",
            THREADS * INCREMENTS,
            s.migrated_pages
        ),
    );
}

// ---------------------------------------------------------------------------
// 8 and 9: throughput trends under the cost model

fn mib(n: usize) -> usize {
    n * 1024 * 1024 / 4096
}

fn trend_config(kind: WorkloadKind, tiers: TierSizes, dataset_pages: usize) -> RunConfig {
    RunConfig {
        tiers,
        page_size: 4096,
        workload: WorkloadSpec { kind, dataset_pages, read_fraction: 0.7, zipf: 0.8, txn_keys: 4, threads: 1, seed: 8 },
        policy: MigrationPolicy::default(),
        engine: Default::default(),
        cost_model: true,
        latencies: Latencies::default(),
        stop: Stop::Ops(100_000),
        interval: Interval::Ops(25_000),
        warmup_ops: 100_000,
        csv: None,
    }
}

fn pct_ok(r: &RunReport) -> bool {
    r.rows.iter().all(|row| (row.pct_sum() - 100.0).abs() <= 0.5)
        && r.rows.iter().all(|row| row.accesses == row.tier0_hits + row.tier1_hits + row.faults)
}

#[test]
fn criterion_08_batching_beats_single_page_migration() {
    let _g = serial();
    let start = Instant::now();
    let tiers = TierSizes { local: mib(64), remote: mib(128), disk: mib(320) };
    let mut mp2 = trend_config(WorkloadKind::RandomRead, tiers, mib(256));
    mp2.policy.evict_batch = 512;
    mp2.policy.nr_max_batched_migration = 1024;
    let mut mbind = mp2.clone();
    mbind.engine.kind = tierpool::EngineKind::Mbind;
    let cmp = tierpool_bench::compare(&mbind, &mp2).unwrap();
    let took = start.elapsed();
    let (a, b) = (&cmp.a.total, &cmp.b.total);
    verdict(
        8,
        "batching beats mbind",
        cmp.ratio() >= MIN_BATCHING_RATIO
            && a.time_migration_pct > b.time_migration_pct
            && pct_ok(&cmp.a)
            && pct_ok(&cmp.b)
            && took < LIMIT_TREND,
        format!(
            "mp2 {:.0} ops/s vs mbind {:.0} ops/s, ratio {:.2} (need {MIN_BATCHING_RATIO}); migration share mbind {:.1}% vs mp2 {:.1}%; {took:?}",
            cmp.b.ops_per_sec,
            cmp.a.ops_per_sec,
            cmp.ratio(),
            a.time_migration_pct,
            b.time_migration_pct
        ),
    );
}

#[test]
fn criterion_09_remote_tier_helps() {
    let _g = serial();
    let start = Instant::now();
    let local = mib(16);
    let mut two = trend_config(WorkloadKind::MixedTxn, TierSizes { local, remote: 0, disk: mib(128) }, 4 * local);
    two.stop = Stop::Ops(50_000);
    two.warmup_ops = 50_000;
    // promote a tenth of remote hits so migrations do not swamp the savings
    two.policy.rr = 0.1;
    let mut three = two.clone();
    three.tiers.remote = 2 * local;
    let latency_gap = three.latencies.disk_read_ns as f64 / three.latencies.remote_read_ns as f64;
    let cmp = tierpool_bench::compare(&two, &three).unwrap();
    let took = start.elapsed();
    verdict(
        9,
        "remote tier helps",
        cmp.ratio() > MIN_REMOTE_RATIO
            && latency_gap >= 20.0
            && cmp.b.total.disk_reads < cmp.a.total.disk_reads
            && pct_ok(&cmp.a)
            && pct_ok(&cmp.b)
            && took < LIMIT_TREND,
        format!(
            "3-tier {:.0} ops/s vs 2-tier {:.0} ops/s, ratio {:.2}; disk reads {} vs {}; disk/remote latency {latency_gap:.0}x; {took:?}",
            cmp.b.ops_per_sec,
            cmp.a.ops_per_sec,
            cmp.ratio(),
            cmp.b.total.disk_reads,
            cmp.a.total.disk_reads
        ),
    );
}

// ---------------------------------------------------------------------------
// 10: B+tree against an ordered map

#[test]
fn criterion_10_btree_matches_ordered_map() {
    let _g = serial();
    let start = Instant::now();
    let policy = MigrationPolicy { dr: 0.5, rr: 0.5, evict_batch: 8, promote_batch: 4, ..Default::default() };
    let pool =
        BufferPool::new(PoolConfig::new(TierTopology::three_tier(32, 64, 16384).with_page_size(1024)).policy(policy))
            .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let tree = BTree::create(&pool, &mut rng).unwrap();
    let mut oracle: BTreeMap<Vec<u8>, Vec<u8>> = BTreeMap::new();
    let mut mismatches = Vec::new();
    let (mut cycles, mut promoted) = (0, 0);
    for step in 0..100_000u32 {
        let k = rng.random_range(0..40_000u64).to_be_bytes().to_vec();
        match rng.random_range(0..20) {
            0..=9 => {
                let len = rng.random_range(0..=120);
                let v: Vec<u8> = (0..len).map(|_| rng.random()).collect();
                tree.insert(&k, &v, &mut rng).unwrap();
                oracle.insert(k, v);
            }
            10..=16 => {
                if tree.lookup(&k, &mut rng).unwrap().as_ref() != oracle.get(&k) {
                    mismatches.push(format!("lookup at step {step}"));
                }
            }
            _ => {
                let limit = rng.random_range(0..50);
                let want: Vec<_> = oracle.range(k.clone()..).take(limit).map(|(a, b)| (a.clone(), b.clone())).collect();
                if tree.scan(&k, limit, &mut rng).unwrap() != want {
                    mismatches.push(format!("scan at step {step}"));
                }
            }
        }
        if step % 1000 == 999 {
            // demote, then pull some remote tree pages back up
            pool.evict_batch(TierId(0), &mut rng).unwrap();
            pool.evict_batch(TierId(1), &mut rng).unwrap();
            let pages = tree.allocated_pages(&mut rng).unwrap();
            for _ in 0..8 {
                let pid = PageId(rng.random_range(0..pages));
                if pool.placement(pid).tier() == Some(TierId(1)) {
                    let g = pool.fix(pid, AccessMode::Exclusive, &mut rng).unwrap();
                    promoted += pool.promote_batch(&g, &mut rng).unwrap();
                }
            }
            cycles += 1;
        }
    }
    let counted = tree.check(&mut rng);
    let all = tree.scan(&[], usize::MAX, &mut rng).unwrap();
    let full_scan_ok = all.len() == oracle.len() && all.iter().zip(&oracle).all(|((a, b), (c, d))| a == c && b == d);
    let took = start.elapsed();
    verdict(
        10,
        "btree oracle",
        mismatches.is_empty()
            && counted == Ok(oracle.len())
            && full_scan_ok
            && promoted > 0
            && pool.stats().demotions > 0
            && took < LIMIT_BTREE,
        format!(
            "10^5 ops, {} keys, {} mismatches {:?}, {cycles} demote cycles, {promoted} promoted, {took:?}",
            oracle.len(),
            mismatches.len(),
            mismatches.first()
        ),
    );
}
