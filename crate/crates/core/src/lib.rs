//! A buffer pool over several memory tiers and a disk, with page migration
//! between tiers issued in batches.
//!
//! ```
//! use rand::SeedableRng;
//! use tierpool::{AccessMode, BufferPool, PageId, PoolConfig, TierTopology};
//!
//! let pool = BufferPool::new(PoolConfig::new(TierTopology::three_tier(64, 128, 1024))).unwrap();
//! let mut rng = rand::rngs::StdRng::seed_from_u64(1);
//! {
//!     let mut g = pool.fix(PageId(7), AccessMode::Exclusive, &mut rng).unwrap();
//!     g.page_mut().set_u64(0, 42);
//! }
//! let v = pool.optimistic_read(PageId(7), &mut rng, |p| p.u64_at(0)).unwrap();
//! assert_eq!(v, 42);
//! ```

pub mod backend;
pub mod btree;
pub mod error;
pub mod exec;
pub mod migration;
pub mod page;
pub mod pool;
pub mod state;

pub use backend::{Backend, CostModel, Placement, TierSpec, TierTopology};
pub use btree::BTree;
pub use error::{BackendError, ConfigError, PoolError, Result};
pub use exec::Execution;
pub use migration::{FailureInjector, Fault, MigrationEngine, MigrationMode, MigrationOutcome, MigrationRequest};
pub use page::{PageId, PageView, PageViewMut};
pub use pool::{AccessMode, BufferPool, EngineConfig, EngineKind, MigrationPolicy, PageGuard, PoolConfig, PoolEvent, PoolStats};
pub use state::{LockState, StateLayout, StateWord, TierId, Transition};
