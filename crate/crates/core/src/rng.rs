//! Deterministic random-number streams.
//!
//! Every simulation cell owns a stream derived by hashing
//! `(master_seed, test_id, policy_id, replication)` into a ChaCha8 seed.
//! Derivation is counter-based: no stream depends on how many draws another
//! stream made, so parallel execution order cannot change results. Identical
//! keys always produce identical sequences, on any platform, in any process.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// A deterministic random stream owned by exactly one running simulation.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    /// Stream for `(master_seed, test_id, policy_id, replication)`.
    ///
    /// Each component is length-prefixed before hashing so distinct keys can
    /// never collide by concatenation.
    pub fn derive(master_seed: u64, test_id: &str, policy_id: &str, replication: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(master_seed.to_le_bytes());
        for part in [test_id.as_bytes(), policy_id.as_bytes()] {
            hasher.update((part.len() as u64).to_le_bytes());
            hasher.update(part);
        }
        hasher.update(replication.to_le_bytes());
        let seed: [u8; 32] = hasher.finalize().into();
        RngStream { rng: ChaCha8Rng::from_seed(seed) }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        rand::Rng::random(&mut self.rng)
    }

    /// Uniform index in `[0, n)`.
    pub fn next_index(&mut self, n: usize) -> usize {
        rand::Rng::random_range(&mut self.rng, 0..n)
    }

    /// Bernoulli draw at probability `p` (requires `0 <= p <= 1`).
    pub fn bernoulli(&mut self, p: f64) -> bool {
        rand::Rng::random_bool(&mut self.rng, p)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}
