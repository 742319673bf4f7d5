use rand::Rng;
use rand_distr::{Distribution, Zipf};
use tierpool::{BTree, Result};

use crate::config::{WorkloadKind, WorkloadSpec, KEY_BYTES, VALUE_BYTES};

/// Multiplier that scatters Zipf ranks over the key space, so hot keys do
/// not cluster in neighbouring leaves.
const SCATTER: u128 = 2_305_843_009_213_693_951;

pub fn key(index: u64) -> [u8; KEY_BYTES] {
    index.to_be_bytes()
}

/// Initial value of record `index`: a zero counter followed by a pattern
/// derived from the index.
pub fn initial_value(index: u64) -> [u8; VALUE_BYTES] {
    let mut v = [0u8; VALUE_BYTES];
    for (i, chunk) in v[8..].chunks_mut(8).enumerate() {
        let word = index.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i as u64);
        chunk.copy_from_slice(&word.to_le_bytes()[..chunk.len()]);
    }
    v
}

pub fn counter_of(value: &[u8]) -> u64 {
    u64::from_le_bytes(value[..8].try_into().expect("value shorter than a counter"))
}

/// Draws record indices.
#[derive(Clone, Debug)]
pub enum KeyChooser {
    Uniform { records: u64 },
    Zipf { records: u64, dist: Zipf<f64> },
}

impl KeyChooser {
    pub fn new(spec: &WorkloadSpec, records: u64) -> Self {
        match spec.kind {
            WorkloadKind::RandomRead => KeyChooser::Uniform { records },
            WorkloadKind::MixedTxn => {
                let dist = Zipf::new(records as f64, spec.zipf).expect("validated zipf parameters");
                KeyChooser::Zipf { records, dist }
            }
        }
    }

    pub fn next<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            KeyChooser::Uniform { records } => rng.random_range(0..*records),
            KeyChooser::Zipf { records, dist } => {
                let rank = (dist.sample(rng) as u64).clamp(1, *records) - 1;
                ((rank as u128 * SCATTER) % *records as u128) as u64
            }
        }
    }
}

/// What one operation did, for the ops-applied log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Applied {
    Read { index: u64, found: bool },
    Update { index: u64, counter: u64 },
}

/// Executes one operation: a lookup for `RandomRead`, a transaction for
/// `MixedTxn`. Returns the number of record updates performed.
pub fn run_op<R: Rng + ?Sized>(
    tree: &BTree<'_>,
    spec: &WorkloadSpec,
    chooser: &KeyChooser,
    rng: &mut R,
    mut log: Option<&mut Vec<Applied>>,
) -> Result<u64> {
    match spec.kind {
        WorkloadKind::RandomRead => {
            let index = chooser.next(rng);
            let found = tree.lookup(&key(index), rng)?.is_some();
            if let Some(log) = log {
                log.push(Applied::Read { index, found });
            }
            Ok(0)
        }
        WorkloadKind::MixedTxn => {
            let read_only = rng.random_bool(spec.read_fraction);
            let mut updates = 0;
            for _ in 0..spec.txn_keys {
                let index = chooser.next(rng);
                let k = key(index);
                let current = tree.lookup(&k, rng)?;
                if read_only {
                    if let Some(log) = log.as_deref_mut() {
                        log.push(Applied::Read { index, found: current.is_some() });
                    }
                    continue;
                }
                let mut value = current.unwrap_or_else(|| initial_value(index).to_vec());
                let counter = counter_of(&value) + 1;
                value[..8].copy_from_slice(&counter.to_le_bytes());
                tree.insert(&k, &value, rng)?;
                updates += 1;
                if let Some(log) = log.as_deref_mut() {
                    log.push(Applied::Update { index, counter });
                }
            }
            Ok(updates)
        }
    }
}
