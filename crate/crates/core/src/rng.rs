//! Deterministic random-number streams.
//!
//! Every stochastic operation derives its generator from a master seed plus a
//! stream index, so chains, reads, and test patterns can fan out across
//! workers and still reproduce bit-identically in any execution order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for one chain/read: master seed selects the key, `stream`
/// selects an independent ChaCha stream.
pub fn derive_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream index for repetition `rpt` of seed-state `idx`.
///
/// Keeping the index layout stable in `rpt` means the chain set for
/// `n_rpt = r` is a strict subset of the chain set for `n_rpt = r + 1`.
pub fn chain_stream(idx: usize, rpt: usize) -> u64 {
    ((rpt as u64) << 32) | (idx as u64 & 0xffff_ffff)
}
