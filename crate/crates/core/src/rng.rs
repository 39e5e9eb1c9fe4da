//! Seeded random streams.
//!
//! Every consumer of randomness draws from a ChaCha8 stream addressed by a
//! base seed plus a [`StreamKey`]. Distinct keys select distinct ChaCha
//! stream ids, so concurrently running replications never share state and
//! never overlap.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose-tagged stream address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamKey {
    /// Instance construction (positions, radii, capacities, timings, model).
    Instance,
    /// Training samples of one SAA replication.
    Training { round: u32, replication: u32 },
    /// High-fidelity evaluation samples of one SAA replication.
    Evaluation { round: u32, replication: u32 },
    /// Genetic search control stream of one replication.
    Search { round: u32, replication: u32 },
    /// Shared held-out evaluation set of an experiment.
    HeldOut,
    /// Randomized baseline draw `index`.
    Policy { index: u32 },
    /// Application shape and composition model of an instance.
    Application,
    /// Timing constants of an instance.
    Timing,
    /// SBS capacities of an instance.
    Capacity,
    /// Free-form stream for callers outside the fixed namespaces.
    Custom(u32),
}

impl StreamKey {
    fn stream_id(self) -> u64 {
        let (ns, hi, lo): (u64, u32, u32) = match self {
            StreamKey::Instance => (1, 0, 0),
            StreamKey::Training { round, replication } => (2, round, replication),
            StreamKey::Evaluation { round, replication } => (3, round, replication),
            StreamKey::Search { round, replication } => (4, round, replication),
            StreamKey::HeldOut => (5, 0, 0),
            StreamKey::Policy { index } => (6, 0, index),
            StreamKey::Custom(id) => (7, 0, id),
            StreamKey::Application => (8, 0, 0),
            StreamKey::Timing => (9, 0, 0),
            StreamKey::Capacity => (10, 0, 0),
        };
        // 8 bits namespace, 24 bits round, 32 bits index.
        (ns << 56) | ((u64::from(hi) & 0x00ff_ffff) << 32) | u64::from(lo)
    }
}

/// Opens the stream `key` under `seed`.
pub fn stream(seed: u64, key: StreamKey) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key.stream_id());
    rng
}
