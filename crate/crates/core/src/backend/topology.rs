use crate::error::ConfigError;

/// Capacity and simulated costs of one level of the hierarchy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TierSpec {
    pub capacity_pages: usize,
    /// Charged once per page access (memory tiers) or page read (disk).
    pub read_latency_ns: u64,
    pub write_latency_ns: u64,
    /// Copy bandwidth used to price frame-to-frame migrations.
    pub bandwidth_mb_s: u64,
}

impl TierSpec {
    pub fn local(capacity_pages: usize) -> Self {
        TierSpec { capacity_pages, read_latency_ns: 0, write_latency_ns: 0, bandwidth_mb_s: 10_000 }
    }

    pub fn remote(capacity_pages: usize) -> Self {
        TierSpec { capacity_pages, read_latency_ns: 1_000, write_latency_ns: 1_500, bandwidth_mb_s: 5_000 }
    }

    pub fn disk(capacity_pages: usize) -> Self {
        TierSpec { capacity_pages, read_latency_ns: 25_000, write_latency_ns: 30_000, bandwidth_mb_s: 2_000 }
    }

    pub fn with_latency(mut self, read_ns: u64, write_ns: u64) -> Self {
        self.read_latency_ns = read_ns;
        self.write_latency_ns = write_ns;
        self
    }
}

pub const DEFAULT_PAGE_SIZE: usize = 4096;

/// Memory tiers (fastest first) followed by the disk. The disk capacity
/// defines the page-id space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TierTopology {
    pub memory: Vec<TierSpec>,
    pub disk: TierSpec,
    pub page_size: usize,
}

impl TierTopology {
    pub fn new(memory: Vec<TierSpec>, disk: TierSpec) -> Self {
        TierTopology { memory, disk, page_size: DEFAULT_PAGE_SIZE }
    }

    /// Local DRAM, one remote tier and disk with default costs.
    pub fn three_tier(local: usize, remote: usize, disk: usize) -> Self {
        Self::new(vec![TierSpec::local(local), TierSpec::remote(remote)], TierSpec::disk(disk))
    }

    /// Local DRAM and disk only.
    pub fn two_tier(local: usize, disk: usize) -> Self {
        Self::new(vec![TierSpec::local(local)], TierSpec::disk(disk))
    }

    pub fn with_page_size(mut self, page_size: usize) -> Self {
        self.page_size = page_size;
        self
    }

    /// Total number of levels including the disk.
    pub fn tiers(&self) -> usize {
        self.memory.len() + 1
    }

    pub fn memory_tiers(&self) -> usize {
        self.memory.len()
    }

    pub fn page_words(&self) -> usize {
        self.page_size / 8
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.page_size < 512 || !self.page_size.is_power_of_two() {
            return Err(ConfigError::PageSize(self.page_size));
        }
        if self.memory.is_empty() {
            return Err(ConfigError::Invalid("at least one memory tier is required".into()));
        }
        if self.memory.len() > u8::MAX as usize {
            return Err(ConfigError::Invalid(format!("{} memory tiers is too many", self.memory.len())));
        }
        for (i, tier) in self.memory.iter().enumerate() {
            if tier.capacity_pages == 0 {
                return Err(ConfigError::ZeroCapacity(format!("memory tier {i}")));
            }
            if tier.capacity_pages > u32::MAX as usize {
                return Err(ConfigError::Invalid(format!("memory tier {i} has too many frames")));
            }
        }
        if self.disk.capacity_pages == 0 {
            return Err(ConfigError::ZeroCapacity("disk".into()));
        }
        Ok(())
    }
}
