//! Seeded, portable random streams.
//!
//! All randomness comes from ChaCha8 seeded with `seed_from_u64(seed)` and
//! switched to a numbered stream, so independent consumers (restarts,
//! generated trajectories) never share state and results do not depend on
//! evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
