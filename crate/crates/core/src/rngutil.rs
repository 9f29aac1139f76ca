//! Deterministic RNG derivation.
//!
//! Every randomized routine takes an explicit seed. Independent trials use
//! `trial_rng(seed, i)` for trial i, which is stable under any parallel
//! schedule because the stream index, not the draw order, separates trials.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for a (seed, stream) pair. Trial i of an experiment uses stream i;
/// nested stages derive sub-streams by offsetting with a stage tag.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
