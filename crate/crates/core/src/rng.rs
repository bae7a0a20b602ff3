//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by
//! `(seed, domain)` and positioned on stream `id`. A single user seed drives
//! everything; the domain separates subsystems and the stream id separates
//! strata, runs or replications within a subsystem.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Subsystem tags mixed into the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Positions = 1,
    SimulateStratum = 2,
    Controls = 3,
    Split = 4,
    FitStart = 5,
    Replication = 6,
    Scratch = 7,
}

/// The generator for `(seed, domain)` on stream `id`.
pub fn substream(seed: u64, domain: Domain, id: u64) -> Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    key[16..24].copy_from_slice(b"hyprloom");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(id);
    rng
}

/// Derives a child seed, e.g. the seed of replication `id` in a study.
pub fn child_seed(seed: u64, domain: Domain, id: u64) -> u64 {
    use rand::Rng as _;
    substream(seed, domain, id).random()
}
