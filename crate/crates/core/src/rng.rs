//! Reproducible random streams.
//!
//! Every random draw comes from ChaCha12 keyed by the run seed, with the
//! 64-bit stream id `(index << 2) | purpose`. Trials (or design restarts)
//! therefore never share a stream, and results do not depend on the order in
//! which they are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Channel = 0,
    Noise = 1,
    Data = 2,
    Design = 3,
}

pub const MAX_STREAM_INDEX: u64 = u64::MAX >> 2;

pub fn stream(seed: u64, index: u64, purpose: Purpose) -> ChaCha12Rng {
    assert!(index <= MAX_STREAM_INDEX, "stream index {index} too large");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream((index << 2) | purpose as u64);
    rng
}
