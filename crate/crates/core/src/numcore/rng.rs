use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent consumers of randomness within one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RngStream {
    Init,
    Dropout,
    Batching,
    Synthesis,
}

impl RngStream {
    fn id(self) -> u64 {
        match self {
            RngStream::Init => 1,
            RngStream::Dropout => 2,
            RngStream::Batching => 3,
            RngStream::Synthesis => 4,
        }
    }
}

/// Derives one ChaCha8 generator per [`RngStream`] from a single seed.
///
/// All streams share the key derived from `seed` and differ only in the
/// ChaCha stream number, so drawing from one never perturbs another.
#[derive(Clone, Copy, Debug)]
pub struct SeedSplitter {
    seed: u64,
}

impl SeedSplitter {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, stream: RngStream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream.id());
        rng
    }
}
