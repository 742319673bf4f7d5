use std::io;

use thiserror::Error;

use crate::page::PageId;
use crate::state::{StateError, TierId};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("page size {0} must be a power of two of at least 512 bytes")]
    PageSize(usize),
    #[error("{0} has zero capacity")]
    ZeroCapacity(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("{0} has no free frame")]
    TierFull(TierId),
    #[error("{pid}: {reason}")]
    IllegalState { pid: PageId, reason: &'static str },
    #[error("{0} is not a memory tier")]
    NoSuchTier(TierId),
    #[error("{0} is outside the page space")]
    OutOfRange(PageId),
    #[error("disk i/o: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum PoolError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("gave up on {0} after too many retries")]
    Timeout(PageId),
    #[error("{0} is outside the page space")]
    OutOfRange(PageId),
    #[error("page space exhausted")]
    OutOfPages,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = PoolError> = std::result::Result<T, E>;
