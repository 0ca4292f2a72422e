//! Deterministic random streams.
//!
//! Every sampling call takes an explicit generator. Generators are derived
//! from a single root seed, a stream name, and a counter, so a run is
//! bit-reproducible regardless of how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub type Rng = ChaCha20Rng;

/// Root of all randomness in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedTree {
    pub seed: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Independent generator for `(name, index)`.
    pub fn stream(&self, name: &str, index: u64) -> Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update((name.len() as u64).to_le_bytes());
        hasher.update(name.as_bytes());
        hasher.update(index.to_le_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha20Rng::from_seed(key)
    }

    /// Child tree, for handing a sub-task its own namespace.
    pub fn child(&self, name: &str, index: u64) -> SeedTree {
        use rand::RngCore;
        SeedTree::new(self.stream(name, index).next_u64())
    }
}
