//! Single-threaded model check: a reference model replays the pool's
//! placement log and must agree with the pool after every operation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tierpool::{
    AccessMode, BufferPool, EngineConfig, EngineKind, LockState, MigrationMode, MigrationPolicy, PageId, PoolConfig,
    PoolEvent, TierId, TierTopology,
};

const PAGES: usize = 300;

struct Model {
    /// `None` = on disk.
    tier: Vec<Option<TierId>>,
    value: Vec<u64>,
    limits: [usize; 2],
}

impl Model {
    fn apply(&mut self, e: PoolEvent) {
        match e {
            PoolEvent::FaultIn { pid, tier } => {
                assert_eq!(self.tier[pid.slot()], None, "{e:?}");
                self.tier[pid.slot()] = Some(tier);
            }
            PoolEvent::Migrated { pid, from, to } => {
                assert_eq!(self.tier[pid.slot()], Some(from), "{e:?}");
                assert_ne!(from, to);
                self.tier[pid.slot()] = Some(to);
            }
            PoolEvent::Evicted { pid, from, .. } => {
                assert_eq!(self.tier[pid.slot()], Some(from), "{e:?}");
                self.tier[pid.slot()] = None;
            }
        }
        for t in 0..2 {
            let n = self.tier.iter().filter(|&&x| x == Some(TierId(t as u8))).count();
            assert!(n <= self.limits[t], "tier {t} holds {n} pages after {e:?}");
        }
    }
}

fn run(seed: u64, policy: MigrationPolicy, engine: EngineConfig) {
    let mut cfg = PoolConfig::new(TierTopology::three_tier(24, 40, PAGES).with_page_size(512))
        .policy(policy)
        .engine(engine);
    cfg.record_events = true;
    let pool = BufferPool::new(cfg).unwrap();
    let mut model = Model {
        tier: vec![None; PAGES],
        value: vec![0; PAGES],
        limits: [pool.tier_limit(TierId(0)), pool.tier_limit(TierId(1))],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut hits, mut faults) = ([0u64; 2], 0u64);
    for step in 0..4000u64 {
        let pid = PageId(if rng.random_bool(0.8) { rng.random_range(0..60) } else { rng.random_range(0..PAGES as u64) });
        let before = model.tier[pid.slot()];
        let op = rng.random_range(0..10);
        match op {
            0..=3 => {
                let v = pool.optimistic_read(pid, &mut rng, |p| p.u64_at(0)).unwrap();
                assert_eq!(v, model.value[pid.slot()]);
            }
            4..=5 => {
                let g = pool.fix(pid, AccessMode::Shared, &mut rng).unwrap();
                assert_eq!(g.page().u64_at(0), model.value[pid.slot()]);
            }
            6..=8 => {
                let mut g = pool.fix(pid, AccessMode::Exclusive, &mut rng).unwrap();
                g.page_mut().set_u64(0, step);
                model.value[pid.slot()] = step;
            }
            _ => {
                pool.evict_batch(TierId(rng.random_range(0..2)), &mut rng).unwrap();
            }
        }
        if op < 9 {
            match before {
                Some(t) => hits[t.index()] += 1,
                None => faults += 1,
            }
        }
        for e in pool.take_events() {
            model.apply(e);
        }
        for i in 0..PAGES {
            let pid = PageId(i as u64);
            assert_eq!(pool.placement(pid).tier(), model.tier[i], "step {step}, {pid}");
            assert_eq!(pool.state(pid).lock() == LockState::Evicted, model.tier[i].is_none());
        }
    }
    pool.audit().unwrap();
    let s = pool.stats();
    assert_eq!(s.hits, hits.to_vec());
    assert_eq!(s.faults, faults);
    assert_eq!(s.accesses, hits.iter().sum::<u64>() + faults);
}

#[test]
fn default_policy_matches_model() {
    run(1, MigrationPolicy { evict_batch: 5, ..Default::default() }, EngineConfig::default());
}

#[test]
fn probabilistic_policy_matches_model() {
    let policy = MigrationPolicy { dr: 0.5, dw: 0.3, rr: 0.4, rw: 0.6, evict_batch: 7, promote_batch: 3, ..Default::default() };
    for seed in 2..6 {
        run(seed, policy.clone(), EngineConfig::default());
    }
}

#[test]
fn every_engine_matches_model() {
    let policy = MigrationPolicy { dr: 0.5, rr: 0.5, evict_batch: 8, ..Default::default() };
    for kind in [EngineKind::MovePages2, EngineKind::Legacy, EngineKind::Mbind] {
        for mode in [MigrationMode::Sync, MigrationMode::Async] {
            run(7, policy.clone(), EngineConfig { kind, mode });
        }
    }
}
