//! Deterministic random substreams.
//!
//! Every stream is a ChaCha8 generator keyed by the user seed with a 64-bit
//! stream id, so results do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags packed into the low bits of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Posterior = 0,
    Imputation = 1,
}

/// Stream for imputation index `m` and the given purpose.
pub fn substream(seed: u64, m: usize, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((m as u64) << 1) | purpose as u64);
    rng
}
