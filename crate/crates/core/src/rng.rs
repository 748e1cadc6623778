//! Deterministic random streams.
//!
//! Each consumer (a protocol role, a channel component, one experiment trial)
//! gets its own ChaCha stream keyed by `SHA-256(seed || label || index)`, so a
//! run is a pure function of its seed no matter how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha20Rng;

pub fn stream(seed: u64, label: &str, index: u64) -> StreamRng {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update((label.len() as u32).to_be_bytes());
    h.update(label.as_bytes());
    h.update(index.to_be_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha20Rng::from_seed(digest)
}

/// A 64-bit child seed, for handing to components that take a plain seed.
pub fn child_seed(seed: u64, label: &str, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, label, index).next_u64()
}
