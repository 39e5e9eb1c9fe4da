//! Genetic search over slot-encoded placement vectors minimizing `ĝ_R`.

use rand::Rng;

use crate::application::CompositionSample;
use crate::error::{Error, Result};
use crate::evaluator::Instance;
use crate::ga::{self, Encoding, GaConfig, SearchOutcome};
use crate::placement::{random_segment, PlacementVector};
use crate::rng::{stream, StreamKey};

/// Exchanges every per-SBS segment from SBS `j` (zero-based) onward.
/// `j = 0` swaps the vectors entirely.
pub fn crossover_at(a: &mut PlacementVector, b: &mut PlacementVector, j: usize) {
    assert_eq!(a.sbs_count(), b.sbs_count(), "parents differ in SBS count");
    for k in j..a.sbs_count() {
        let sa = a.segment_mut(k);
        let sb = b.segment_mut(k);
        assert_eq!(sa.len(), sb.len(), "parents differ in capacity at SBS {}", k + 1);
        sa.swap_with_slice(sb);
    }
}

/// Single-point crossover at an SBS boundary drawn uniformly.
pub fn crossover<R: Rng + ?Sized>(a: &mut PlacementVector, b: &mut PlacementVector, rng: &mut R) {
    let m = a.sbs_count();
    if m == 0 {
        return;
    }
    let j = rng.random_range(0..m);
    crossover_at(a, b, j);
}

/// Re-draws the slots of one uniformly chosen SBS.
pub fn mutate_segment<R: Rng + ?Sized>(x: &mut PlacementVector, total_candidates: usize, rng: &mut R) {
    let m = x.sbs_count();
    if m == 0 {
        return;
    }
    let j = rng.random_range(0..m);
    random_segment(x.segment_mut(j), total_candidates, rng);
}

/// Mutation gate: with probability `p_m` applies [`mutate_segment`].
/// Returns whether `x` was touched.
pub fn mutate<R: Rng + ?Sized>(x: &mut PlacementVector, p_m: f64, total_candidates: usize, rng: &mut R) -> bool {
    if rng.random::<f64>() < p_m {
        mutate_segment(x, total_candidates, rng);
        true
    } else {
        false
    }
}

/// Chromosome = the placement vector itself.
#[derive(Debug, Clone)]
pub struct SlotEncoding {
    pub capacities: Vec<usize>,
    pub total_candidates: usize,
}

impl Encoding for SlotEncoding {
    type Genome = PlacementVector;

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> PlacementVector {
        let mut x = PlacementVector::empty(&self.capacities);
        for j in 0..x.sbs_count() {
            random_segment(x.segment_mut(j), self.total_candidates, rng);
        }
        x
    }

    fn crossover<R: Rng + ?Sized>(&self, a: &mut PlacementVector, b: &mut PlacementVector, rng: &mut R) {
        crossover(a, b, rng);
    }

    fn mutate<R: Rng + ?Sized>(&self, x: &mut PlacementVector, rng: &mut R) {
        mutate_segment(x, self.total_candidates, rng);
    }

    fn decode(&self, x: &PlacementVector) -> PlacementVector {
        x.clone()
    }
}

/// GASS on the fixed sample set `batches`, drawing from `rng`.
pub fn run_gass_with_rng<R: Rng + ?Sized>(
    instance: &Instance,
    batches: &[CompositionSample],
    config: &GaConfig,
    rng: &mut R,
) -> Result<SearchOutcome> {
    if batches.is_empty() {
        return Err(Error::InvalidParameter("GASS needs at least one sample batch".into()));
    }
    let encoding = SlotEncoding {
        capacities: instance.capacities(),
        total_candidates: instance.spec.total_candidates(),
    };
    ga::run(&encoding, |x| instance.saa_objective(x, batches), config, rng)
}

/// GASS seeded from `config.seed` on the default search stream.
pub fn run_gass(instance: &Instance, batches: &[CompositionSample], config: &GaConfig) -> Result<SearchOutcome> {
    let mut rng = stream(config.seed, StreamKey::Search { round: 0, replication: 0 });
    run_gass_with_rng(instance, batches, config, &mut rng)
}
