//! Seeded random streams.
//!
//! Every Monte Carlo consumer derives its per-run generator from one master
//! seed with the same rule: ChaCha20 keyed by `seed_from_u64(master)`, with
//! the run index selecting the ChaCha stream. Streams never overlap, and a
//! run's draws do not depend on how many other runs exist or on the order in
//! which they execute.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

/// Generator for run `index` under `master`.
pub fn stream(master: u64, index: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Generator for a named sub-purpose of a run, e.g. sampling vs. readout.
///
/// The purpose tag is folded into the high bits of the stream id so that
/// `stream(master, i)` and `substream(master, i, tag)` stay disjoint for
/// any run index below 2^48.
pub fn substream(master: u64, index: u64, purpose: u16) -> Rng {
    stream(master, ((purpose as u64 + 1) << 48) | (index & 0xFFFF_FFFF_FFFF))
}
