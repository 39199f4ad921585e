//! Deterministic RNG stream derivation.
//!
//! A single master seed expands into independent named streams so that every
//! sub-experiment (scenario draws, exploration noise, weight initialization,
//! optimizer starts) reproduces on its own, independent of execution order
//! and thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Derive an independent ChaCha20 stream from `(master, label, index)`.
///
/// The 32-byte seed is laid out as `master || label || index`, so distinct
/// labels (up to 16 bytes) and indices can never collide.
pub fn stream(master: u64, label: &str, index: u64) -> ChaCha20Rng {
    let bytes = label.as_bytes();
    assert!(bytes.len() <= 16, "stream label too long: {label}");
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master.to_le_bytes());
    seed[8..8 + bytes.len()].copy_from_slice(bytes);
    seed[24..].copy_from_slice(&index.to_le_bytes());
    ChaCha20Rng::from_seed(seed)
}

/// Pack a (sweep point, scenario) pair into one stream index.
pub fn compose_index(point: usize, scenario: usize) -> u64 {
    ((point as u64) << 32) | scenario as u64
}
