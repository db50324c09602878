//! Seeded random streams.
//!
//! Every consumer of randomness in a run gets its own ChaCha8 stream derived
//! from the run seed: `ChaCha8Rng::seed_from_u64(seed)` followed by
//! `set_stream(stream as u64)`. Adding draws in one consumer therefore never
//! shifts another consumer's sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RunRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Sampler = 1,
    ModelInit = 2,
    TrainData = 3,
    TestData = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> RunRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
