//! Named counter-based random streams.
//!
//! Every draw comes from ChaCha8 keyed by `(seed, stream)`. ChaCha is a
//! counter-mode cipher, so a stream's output depends only on its key and
//! word position; tagged particles keep the same stream for every `N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const GENERATOR: &str = "ChaCha8";

/// Stream of the merged candidate clock for untagged particles.
pub const MERGED_STREAM: u64 = 0;
/// Stream used by the i.i.d. type assignment.
pub const ASSIGNMENT_STREAM: u64 = u64::MAX;

/// Stream of the `index`-th tagged particle.
pub fn tagged_stream(index: usize) -> u64 {
    1 + index as u64
}

#[derive(Clone, Debug)]
pub struct Stream {
    rng: ChaCha8Rng,
    seed: u64,
    id: u64,
}

/// Position of a stream at the end of a run, recorded in manifests.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamCounter {
    pub stream: u64,
    pub word_pos: String,
}

impl Stream {
    pub fn new(seed: u64, id: u64) -> Stream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        Stream { rng, seed, id }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Exponential waiting time with the given rate; `+inf` for rate 0.
    #[inline]
    pub fn exp_gap(&mut self, rate: f64) -> f64 {
        let u = self.uniform();
        if rate > 0.0 {
            -(-u).ln_1p() / rate
        } else {
            f64::INFINITY
        }
    }

    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn counter(&self) -> StreamCounter {
        StreamCounter {
            stream: self.id,
            word_pos: self.rng.get_word_pos().to_string(),
        }
    }
}
