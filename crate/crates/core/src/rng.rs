//! Seeded random streams, one per concern.
//!
//! Every concern draws from its own ChaCha stream derived from the master
//! seed, so adding a draw in one place never shifts another concern's
//! sequence. Topology and event streams are therefore identical across
//! protocols for a shared seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Topology,
    Events,
    Shadowing,
}

impl Purpose {
    fn stream_id(self) -> u64 {
        match self {
            Purpose::Topology => 1,
            Purpose::Events => 2,
            Purpose::Shadowing => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StreamSet {
    seed: u64,
}

impl StreamSet {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, purpose: Purpose) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(purpose.stream_id());
        rng
    }
}
