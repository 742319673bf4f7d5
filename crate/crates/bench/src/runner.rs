use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tierpool::{BTree, BufferPool, PoolConfig, PoolError};

use crate::config::{Interval, RunConfig, Stop};
use crate::report::{Row, RunReport, Sample};
use crate::workload::{initial_value, key, run_op, Applied, KeyChooser};
use crate::BenchError;

const LOAD_STREAM: u64 = 0x4c4f_4144;
const WARMUP_STREAM: u64 = 0x5741_524d;

fn worker_seed(seed: u64, worker: usize) -> u64 {
    seed ^ (worker as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Builds the pool, loads the dataset, then leaves every page on disk.
pub fn prepare(cfg: &RunConfig) -> Result<BufferPool, BenchError> {
    cfg.validate()?;
    let pool = BufferPool::new(PoolConfig::new(cfg.topology()).policy(cfg.policy.clone()).engine(cfg.engine))?;
    pool.backend().cost().set_enabled(false);
    {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.workload.seed ^ LOAD_STREAM);
        let tree = BTree::create(&pool, &mut rng)?;
        for index in 0..cfg.records() {
            tree.insert(&key(index), &initial_value(index), &mut rng)?;
        }
    }
    pool.flush_all()?;
    pool.evict_all()?;
    Ok(pool)
}

pub fn run(cfg: &RunConfig) -> Result<RunReport, BenchError> {
    run_inner(cfg, false).map(|(report, _)| report)
}

/// Like [`run`], also returning every applied operation in order per worker.
pub fn run_logged(cfg: &RunConfig) -> Result<(RunReport, Vec<Vec<Applied>>), BenchError> {
    run_inner(cfg, true)
}

struct Shared<'a> {
    tree: BTree<'a>,
    chooser: KeyChooser,
    stop: AtomicBool,
    claimed: AtomicU64,
    done: AtomicU64,
    finished: AtomicUsize,
    samples: Mutex<Vec<Sample>>,
    start: Instant,
}

fn run_inner(cfg: &RunConfig, log: bool) -> Result<(RunReport, Vec<Vec<Applied>>), BenchError> {
    let pool = prepare(cfg)?;
    let cost = pool.backend().cost();
    cost.set_shootdown_ns(cfg.latencies.shootdown_ns);
    cost.set_enabled(cfg.cost_model);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.workload.seed ^ WARMUP_STREAM);
    let tree = BTree::open(&pool, &mut rng)?;
    let chooser = KeyChooser::new(&cfg.workload, cfg.records());
    for _ in 0..cfg.warmup_ops {
        run_op(&tree, &cfg.workload, &chooser, &mut rng, None)?;
    }

    let baseline = Sample { elapsed_s: 0.0, ops: 0, stats: pool.stats() };
    let shared = Shared {
        tree,
        chooser,
        stop: AtomicBool::new(false),
        claimed: AtomicU64::new(0),
        done: AtomicU64::new(0),
        finished: AtomicUsize::new(0),
        samples: Mutex::new(vec![baseline.clone()]),
        start: Instant::now(),
    };
    let threads = cfg.workload.threads;
    let results: Vec<Result<(u64, Vec<Applied>), PoolError>> = thread::scope(|s| {
        let handles: Vec<_> = (0..threads).map(|w| s.spawn({
            let shared = &shared;
            move || {
                let r = worker(cfg, shared, w, log);
                if r.is_err() {
                    shared.stop.store(true, Ordering::Relaxed);
                }
                shared.finished.fetch_add(1, Ordering::Release);
                r
            }
        })).collect();
        supervise(cfg, &shared, &pool);
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });

    let mut updates = 0;
    let mut logs = Vec::with_capacity(threads);
    for r in results {
        let (u, l) = r?;
        updates += u;
        logs.push(l);
    }
    let elapsed_s = shared.start.elapsed().as_secs_f64();
    let ops = shared.done.load(Ordering::Acquire);
    let mut samples = shared.samples.into_inner().expect("sample lock poisoned");
    samples.sort_by_key(|s| s.ops);
    let end = Sample { elapsed_s, ops, stats: pool.stats() };
    if samples.last().is_some_and(|s| s.ops < ops) {
        samples.push(end.clone());
    }
    let rows = samples.windows(2).map(|w| Row::between(&w[0], &w[1], threads)).collect();
    let total = Row::between(&baseline, &end, threads);
    let hits = end.stats.hits.iter().zip(&baseline.stats.hits).map(|(b, a)| b - a).collect();
    Ok((
        RunReport {
            rows,
            total,
            elapsed_s,
            ops_per_sec: if elapsed_s > 0.0 { ops as f64 / elapsed_s } else { 0.0 },
            hits,
            updates,
        },
        logs,
    ))
}

fn worker(cfg: &RunConfig, shared: &Shared<'_>, w: usize, log: bool) -> Result<(u64, Vec<Applied>), PoolError> {
    let mut rng = ChaCha8Rng::seed_from_u64(worker_seed(cfg.workload.seed, w));
    let mut applied = Vec::new();
    let mut updates = 0;
    let pool = shared.tree.pool();
    while !shared.stop.load(Ordering::Relaxed) {
        if let Stop::Ops(n) = cfg.stop {
            if shared.claimed.fetch_add(1, Ordering::Relaxed) >= n {
                break;
            }
        }
        updates += run_op(&shared.tree, &cfg.workload, &shared.chooser, &mut rng, log.then_some(&mut applied))?;
        let done = shared.done.fetch_add(1, Ordering::AcqRel) + 1;
        if let Interval::Ops(k) = cfg.interval {
            if done.is_multiple_of(k) {
                let sample = Sample { elapsed_s: shared.start.elapsed().as_secs_f64(), ops: done, stats: pool.stats() };
                shared.samples.lock().expect("sample lock poisoned").push(sample);
            }
        }
    }
    Ok((updates, applied))
}

/// Runs on the calling thread while workers are busy: samples timed
/// intervals and enforces a duration limit.
fn supervise(cfg: &RunConfig, shared: &Shared<'_>, pool: &BufferPool) {
    let deadline = match cfg.stop {
        Stop::Seconds(s) => Some(s),
        Stop::Ops(_) => None,
    };
    let period = match cfg.interval {
        Interval::Seconds(s) => Some(s),
        Interval::Ops(_) => None,
    };
    let mut next = period.unwrap_or(f64::INFINITY);
    while shared.finished.load(Ordering::Acquire) < cfg.workload.threads {
        let now = shared.start.elapsed().as_secs_f64();
        if deadline.is_some_and(|d| now >= d) {
            shared.stop.store(true, Ordering::Relaxed);
            break;
        }
        if now >= next {
            let sample = Sample { elapsed_s: now, ops: shared.done.load(Ordering::Acquire), stats: pool.stats() };
            shared.samples.lock().expect("sample lock poisoned").push(sample);
            next += period.unwrap_or(f64::INFINITY);
        }
        let until = next.min(deadline.unwrap_or(f64::INFINITY)) - now;
        thread::sleep(Duration::from_secs_f64(until.clamp(0.0, 0.005)));
    }
}
