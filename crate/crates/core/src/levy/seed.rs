//! Per-path random streams.
//!
//! A stream is a ChaCha8 keystream keyed by the master seed, with the path
//! index as the stream id. Distinct `(master, path)` pairs therefore address
//! disjoint keystreams. The epsilon index is deliberately not part of the
//! derivation: every noise level of an order study sees the same path.
//! This mapping is part of the output contract and must not change.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamSeed {
    pub master: u64,
    pub stream: u64,
}

impl StreamSeed {
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

pub fn derive_seed(master_seed: u64, path_index: u64, _epsilon_index: usize) -> StreamSeed {
    StreamSeed {
        master: master_seed,
        stream: path_index,
    }
}
