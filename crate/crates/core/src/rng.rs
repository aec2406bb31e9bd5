//! Named random streams derived from one master seed.
//!
//! Every consumer of randomness draws from its own ChaCha stream, so adding a
//! consumer (another algorithm, another timeline component) never shifts the
//! draws seen by the others.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Bandwidth,
    Sinr,
    Offsets,
    SwitchingWeights,
    Availability,
    Gains,
    Quantizer,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Bandwidth => 1,
            Stream::Sinr => 2,
            Stream::Offsets => 3,
            Stream::SwitchingWeights => 4,
            Stream::Availability => 5,
            Stream::Gains => 6,
            Stream::Quantizer => 7,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}
