//! Seed splitting.
//!
//! Stream `i` is ChaCha8 keyed by `SHA-256("zodiac-stream" ‖ seed ‖ i ‖ salt)`,
//! integers little-endian. Agent streams use their index; the master stream
//! (initial iterates, baseline sampling) uses `u64::MAX`. Changing the agent
//! count therefore never reshuffles another agent's randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const MASTER_STREAM: u64 = u64::MAX;

/// Environment variable that, when set, salts every derived stream.
pub const SEED_SALT_ENV: &str = "ZODIAC_SEED_SALT";

pub fn stream(seed: u64, index: u64, salt: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"zodiac-stream");
    h.update(seed.to_le_bytes());
    h.update(index.to_le_bytes());
    h.update(salt.as_bytes());
    let key: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(key)
}

pub fn agent_stream(seed: u64, agent: usize, salt: &str) -> ChaCha8Rng {
    stream(seed, agent as u64, salt)
}

pub fn master_stream(seed: u64, salt: &str) -> ChaCha8Rng {
    stream(seed, MASTER_STREAM, salt)
}

/// Salt from [`SEED_SALT_ENV`], empty when unset.
pub fn env_salt() -> String {
    std::env::var(SEED_SALT_ENV).unwrap_or_default()
}
