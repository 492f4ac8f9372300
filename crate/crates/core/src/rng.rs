//! Deterministic random streams.
//!
//! Every replicate `b` of a resampling loop draws from
//! `ChaCha8(seed).stream(b)`, so a replicate's draws are fixed by
//! `(seed, b)` alone and loops can be split across workers freely.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Generator for a single stream of the master seed.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Generator keyed by an arbitrary string, e.g. an image id.
pub fn keyed_rng(seed: u64, key: &str) -> ChaCha8Rng {
    let digest = Sha256::digest(key.as_bytes());
    let mut stream = [0u8; 8];
    stream.copy_from_slice(&digest[..8]);
    replicate_rng(seed, u64::from_le_bytes(stream))
}
