//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator whose 256-bit key holds the user seed
//! and whose stream number is the task id. Work split into fixed batches
//! therefore draws the same numbers regardless of thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent stream for `(seed, task)`.
pub fn stream(seed: u64, task: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(b"rearrnge");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(task);
    rng
}

/// Derives a child seed for a named sub-computation, so nested experiments
/// do not reuse the parent's streams.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, mixed with the seed through one ChaCha draw.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    stream(seed, h).random()
}

pub fn uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Standard normal draw (Box–Muller, one value per call).
pub fn normal(rng: &mut StreamRng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
