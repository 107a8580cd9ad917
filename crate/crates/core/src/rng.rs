//! Seeded random streams. One seed fans out to independent per-purpose
//! streams so that, for example, enabling an attack never shifts the benign
//! arrival sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers. Values are part of the reproducibility contract.
pub mod stream {
    pub const ARRIVALS: u64 = 1;
    pub const SERVICE: u64 = 2;
    pub const JAMMING: u64 = 3;
    pub const ATTRIBUTES: u64 = 4;
    /// Flood profile `i` uses `FLOOD + i`.
    pub const FLOOD: u64 = 1 << 16;
    /// Jam interference of profile `i` uses `JAM_TRAFFIC + i`.
    pub const JAM_TRAFFIC: u64 = 2 << 16;
    pub const TWIN_SAMPLING: u64 = 3 << 16;
    pub const MLP_INIT: u64 = 4 << 16;
    pub const MLP_SHUFFLE: u64 = 5 << 16;
    pub const KMEANS: u64 = 6 << 16;
    pub const SVM: u64 = 7 << 16;
    pub const SPLIT: u64 = 8 << 16;
    pub const COMPOSE: u64 = 9 << 16;
    pub const SYNTHETIC: u64 = 10 << 16;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
