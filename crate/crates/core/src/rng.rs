//! Seeded random streams.
//!
//! Every consumer draws from `ChaCha8Rng::seed_from_u64(seed)` with a fixed
//! stream id, so e.g. the sketch for mode 2 does not depend on whether mode 1
//! was sketched first.
//!
//! | stream            | consumer                              |
//! |-------------------|---------------------------------------|
//! | `n`               | sketch matrix for mode `n`            |
//! | `INIT + n`        | initial factor columns for mode `n`   |
//! | `SYNTH + n`       | ground-truth factor for mode `n`      |
//! | `NOISE`           | additive noise field                  |
//! | `VIDEO`           | toy-video phases                      |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const INIT: u64 = 1 << 20;
pub const SYNTH: u64 = 2 << 20;
pub const NOISE: u64 = 3 << 20;
pub const VIDEO: u64 = 4 << 20;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
