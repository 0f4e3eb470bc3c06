//! Named random substreams.
//!
//! Every consumer of randomness gets its own ChaCha8 stream derived from the
//! run seed and a fixed stream number. Streams never share state, so adding
//! draws in one subsystem cannot shift the draws seen by another, and two
//! policy arms run with the same seed see the same disease draws for as long
//! as their histories coincide.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Fixed stream assignment. Changing any value changes every output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    RegionLayout,
    Demographics,
    Attachments,
    /// Per-individual agenda stream; the individual id is added to the base.
    Agenda(u32),
    SimInit,
    Environmental,
    PersonToPerson,
    Disease,
    Testing,
}

impl Stream {
    fn number(self) -> u64 {
        match self {
            Stream::RegionLayout => 1,
            Stream::Demographics => 2,
            Stream::Attachments => 3,
            Stream::SimInit => 10,
            Stream::Environmental => 11,
            Stream::PersonToPerson => 12,
            Stream::Disease => 13,
            Stream::Testing => 14,
            Stream::Agenda(id) => (1 << 32) + u64::from(id),
        }
    }
}

pub fn substream(seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.number());
    rng
}
