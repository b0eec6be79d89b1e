use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Deterministic nonce source.
///
/// Nonces are derived from `(seed, counter)` so that a session replayed from the
/// same seed mints the same ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdGen {
    pub seed: u64,
    pub counter: u64,
}

impl IdGen {
    pub fn new(seed: u64) -> Self {
        IdGen { seed, counter: 0 }
    }

    pub fn resume(seed: u64, counter: u64) -> Self {
        IdGen { seed, counter }
    }

    /// Nine decimal digits.
    pub fn next_nonce(&mut self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(self.counter.to_le_bytes());
        self.counter += 1;
        let digest = hasher.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        format!("{:09}", u64::from_le_bytes(bytes) % 1_000_000_000)
    }

    pub fn next_id(&mut self, prefix: &str) -> String {
        format!("{prefix}-{}", self.next_nonce())
    }
}

/// Stable 64-bit hash of a string, used to derive seeds from content.
pub fn stable_hash(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
