//! Benchmark placement policies.
//!
//! `rp1` and `ga1` never deploy a candidate on more than one SBS; `rp2` and
//! `gp2` may.

use rand::seq::index;
use rand::Rng;

use crate::application::{ApplicationSpec, CompositionModel, CompositionSample, EMPTY_SLOT};
use crate::error::{Error, Result};
use crate::evaluator::Instance;
use crate::ga::{self, Encoding, GaConfig, SearchOutcome};
use crate::placement::PlacementVector;

fn with_room(x: &PlacementVector) -> Vec<usize> {
    (0..x.sbs_count()).filter(|&j| x.segment(j).contains(&EMPTY_SLOT)).collect()
}

/// Usable slots per SBS when each SBS may hold at most `limit` candidates.
pub fn limited_capacities(capacities: &[usize], limit: Option<usize>) -> Vec<usize> {
    capacities.iter().map(|&b| limit.map_or(b, |l| b.min(l))).collect()
}

fn open_sites(x: &PlacementVector, usable: &[usize]) -> Vec<usize> {
    (0..x.sbs_count())
        .filter(|&j| x.segment(j).iter().filter(|&&g| g != EMPTY_SLOT).count() < usable[j])
        .collect()
}

/// Each candidate, in global-index order, goes to one SBS drawn uniformly
/// among those with a usable free slot. Stops when none is left. With
/// `per_sbs_limit = Some(l)` an SBS accepts at most `l` candidates; the
/// vector keeps all `b_j` slots.
pub fn rp1<R: Rng + ?Sized>(
    capacities: &[usize],
    spec: &ApplicationSpec,
    per_sbs_limit: Option<usize>,
    rng: &mut R,
) -> PlacementVector {
    let usable = limited_capacities(capacities, per_sbs_limit);
    let mut x = PlacementVector::empty(capacities);
    for g in 1..=spec.total_candidates() {
        let open = open_sites(&x, &usable);
        if open.is_empty() {
            break;
        }
        let j = open[rng.random_range(0..open.len())];
        x.try_place(j, g);
    }
    x
}

/// Each candidate, in global-index order, draws `m` uniformly from `0..=M`
/// and goes to `min(m, open)` distinct SBSs drawn uniformly among those with
/// a free slot. Stops when no slot is left.
pub fn rp2<R: Rng + ?Sized>(capacities: &[usize], spec: &ApplicationSpec, rng: &mut R) -> PlacementVector {
    let mut x = PlacementVector::empty(capacities);
    let m_total = capacities.len();
    for g in 1..=spec.total_candidates() {
        let open = with_room(&x);
        if open.is_empty() {
            break;
        }
        let m = rng.random_range(0..=m_total).min(open.len());
        for k in index::sample(rng, open.len(), m) {
            x.try_place(open[k], g);
        }
    }
    x
}

/// Per-candidate SBS assignment; `None` leaves the candidate to the cloud.
#[derive(Debug, Clone)]
pub struct AssignmentEncoding {
    /// Slot counts of the decoded vector.
    pub capacities: Vec<usize>,
    /// Candidates each SBS may actually take, at most `capacities`.
    pub usable: Vec<usize>,
    pub total_candidates: usize,
}

impl AssignmentEncoding {
    /// Moves every candidate beyond its SBS's capacity, and every unplaced
    /// candidate, to a random SBS with room, or to the cloud if none is left.
    /// Earlier candidates keep their site.
    pub fn repair<R: Rng + ?Sized>(&self, genome: &mut [Option<usize>], rng: &mut R) {
        let mut load = vec![0usize; self.capacities.len()];
        let mut overflow = Vec::new();
        for (g, site) in genome.iter().enumerate() {
            match *site {
                Some(j) if load[j] < self.usable[j] => load[j] += 1,
                _ => overflow.push(g),
            }
        }
        for g in overflow {
            let open: Vec<usize> = (0..load.len()).filter(|&j| load[j] < self.usable[j]).collect();
            genome[g] = if open.is_empty() {
                None
            } else {
                let j = open[rng.random_range(0..open.len())];
                load[j] += 1;
                Some(j)
            };
        }
    }
}

impl Encoding for AssignmentEncoding {
    type Genome = Vec<Option<usize>>;

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Genome {
        let m = self.capacities.len();
        let mut genome: Vec<Option<usize>> = (0..self.total_candidates)
            .map(|_| (m > 0).then(|| rng.random_range(0..m)))
            .collect();
        self.repair(&mut genome, rng);
        genome
    }

    fn crossover<R: Rng + ?Sized>(&self, a: &mut Self::Genome, b: &mut Self::Genome, rng: &mut R) {
        if self.total_candidates == 0 {
            return;
        }
        let cut = rng.random_range(0..self.total_candidates);
        a[cut..].swap_with_slice(&mut b[cut..]);
        self.repair(a, rng);
        self.repair(b, rng);
    }

    fn mutate<R: Rng + ?Sized>(&self, genome: &mut Self::Genome, rng: &mut R) {
        let m = self.capacities.len();
        if self.total_candidates == 0 || m == 0 {
            return;
        }
        let g = rng.random_range(0..self.total_candidates);
        genome[g] = Some(rng.random_range(0..m));
        self.repair(genome, rng);
    }

    fn decode(&self, genome: &Self::Genome) -> PlacementVector {
        let mut x = PlacementVector::empty(&self.capacities);
        for (g, site) in genome.iter().enumerate() {
            if let Some(j) = *site {
                let placed = x.try_place(j, g + 1);
                debug_assert!(placed, "repair left SBS {} over capacity", j + 1);
            }
        }
        x
    }
}

/// GA over one-site-per-candidate assignments with the same rates as GASS.
/// `per_sbs_limit` as in [`rp1`].
pub fn ga1<R: Rng + ?Sized>(
    instance: &Instance,
    batches: &[CompositionSample],
    config: &GaConfig,
    per_sbs_limit: Option<usize>,
    rng: &mut R,
) -> Result<SearchOutcome> {
    if batches.is_empty() {
        return Err(Error::InvalidParameter("GA1 needs at least one sample batch".into()));
    }
    let capacities = instance.capacities();
    let encoding = AssignmentEncoding {
        usable: limited_capacities(&capacities, per_sbs_limit),
        capacities,
        total_candidates: instance.spec.total_candidates(),
    };
    ga::run(&encoding, |x| instance.saa_objective(x, batches), config, rng)
}

/// Global candidates ordered by request popularity: the most probable
/// candidate of every microservice (microservices sorted by that
/// probability), then every second-ranked candidate, and so on. Ties go to
/// the smaller index.
pub fn popularity_order(model: &CompositionModel) -> Vec<usize> {
    let spec = model.spec();
    let marginals = model.marginals();
    let ranked: Vec<Vec<(f64, usize)>> = marginals
        .iter()
        .enumerate()
        .map(|(q, probs)| {
            let mut v: Vec<(f64, usize)> = probs.iter().enumerate().map(|(c, &p)| (p, spec.global(q, c))).collect();
            v.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            v
        })
        .collect();
    let depth = ranked.iter().map(Vec::len).max().unwrap_or(0);
    let mut order = Vec::with_capacity(spec.total_candidates());
    for rank in 0..depth {
        let mut tier: Vec<(f64, usize)> = ranked.iter().filter_map(|v| v.get(rank).copied()).collect();
        tier.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        order.extend(tier.into_iter().map(|(_, g)| g));
    }
    order
}

/// Every SBS filled to capacity with the head of [`popularity_order`].
pub fn gp2(capacities: &[usize], model: &CompositionModel) -> PlacementVector {
    let order = popularity_order(model);
    let mut x = PlacementVector::empty(capacities);
    for (j, &b) in capacities.iter().enumerate() {
        for &g in order.iter().take(b) {
            x.try_place(j, g);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamKey};

    fn spec(c: &[usize]) -> ApplicationSpec {
        ApplicationSpec::new(c.to_vec()).unwrap()
    }

    fn max_redundancy(x: &PlacementVector, total: usize) -> usize {
        x.deployment_index(total).iter().map(Vec::len).max().unwrap_or(0)
    }

    #[test]
    fn rp1_zero_capacity_and_counting() {
        let s = spec(&[3, 2]);
        let mut rng = stream(0, StreamKey::Custom(0));
        assert_eq!(rp1(&[0, 0], &s, None, &mut rng).used_slots(), 0);
        for caps in [vec![1, 1], vec![2, 5], vec![0, 3, 1]] {
            let x = rp1(&caps, &s, None, &mut rng);
            assert_eq!(x.used_slots(), caps.iter().sum::<usize>().min(5));
            assert!(max_redundancy(&x, 5) <= 1);
            assert_eq!(x.validate(&caps, &s), Ok(()));
        }
    }

    #[test]
    fn rp1_single_candidate_per_sbs() {
        let s = spec(&[3, 2, 4]);
        let caps = vec![3, 5, 1, 4];
        let mut rng = stream(1, StreamKey::Custom(0));
        for _ in 0..100 {
            let x = rp1(&caps, &s, Some(1), &mut rng);
            assert_eq!(x.validate(&caps, &s), Ok(()));
            assert_eq!(x.used_slots(), 4);
            assert!((0..4).all(|j| x.segment(j).iter().filter(|&&g| g != 0).count() == 1));
        }
    }

    #[test]
    fn rp2_valid_and_redundant() {
        let s = spec(&[3, 4, 2, 5]);
        let caps = vec![3, 5, 4, 3, 4, 5, 3, 4, 5, 3];
        let mut redundant = 0;
        for seed in 0..10_000 {
            let x = rp2(&caps, &s, &mut stream(seed, StreamKey::Policy { index: 0 }));
            assert_eq!(x.validate(&caps, &s), Ok(()));
            if max_redundancy(&x, s.total_candidates()) >= 2 {
                redundant += 1;
            }
        }
        assert!(redundant > 9_000, "{redundant}");
    }

    #[test]
    fn assignment_repair_respects_capacity() {
        let enc = AssignmentEncoding {
            capacities: vec![1, 2],
            usable: vec![1, 2],
            total_candidates: 5,
        };
        let mut rng = stream(3, StreamKey::Custom(0));
        let mut g = vec![Some(0); 5];
        enc.repair(&mut g, &mut rng);
        assert_eq!(g[0], Some(0));
        assert_eq!(g.iter().filter(|s| **s == Some(1)).count(), 2);
        assert_eq!(g.iter().filter(|s| s.is_none()).count(), 2);
        let s = spec(&[5]);
        for _ in 0..1000 {
            let mut a = enc.random(&mut rng);
            let mut b = enc.random(&mut rng);
            enc.crossover(&mut a, &mut b, &mut rng);
            enc.mutate(&mut a, &mut rng);
            for genome in [&a, &b] {
                let x = enc.decode(genome);
                assert_eq!(x.validate(&[1, 2], &s), Ok(()));
                assert_eq!(x.used_slots(), 3);
            }
        }
    }

    #[test]
    fn gp2_ranks_by_marginal() {
        let s = spec(&[2]);
        let model = CompositionModel::independent(s.clone(), vec![vec![0.1, 0.9]]).unwrap();
        let x = gp2(&[1, 1, 1], &model);
        for j in 0..3 {
            assert_eq!(x.segment(j), &[2]);
        }
        let s = spec(&[2, 3]);
        let model = CompositionModel::independent(s, vec![vec![0.6, 0.4], vec![0.1, 0.2, 0.7]]).unwrap();
        // Rank-1 tier: c23 (0.7) then c11 (0.6); rank 2: c12 (0.4), c22 (0.2); rank 3: c21.
        assert_eq!(popularity_order(&model), vec![5, 1, 2, 4, 3]);
        let x = gp2(&[2, 5, 0], &model);
        assert_eq!(x.segment(0), &[5, 1]);
        assert_eq!(x.segment(1), &[5, 1, 2, 4, 3]);
    }

    #[test]
    fn gp2_fully_correlated_chain() {
        let s = spec(&[2, 2]);
        let model = CompositionModel::new(s, vec![0.0, 1.0], vec![vec![vec![1.0, 0.0], vec![1.0, 0.0]]]).unwrap();
        let x = gp2(&[2, 2], &model);
        let mut seg = x.segment(0).to_vec();
        seg.sort();
        assert_eq!(seg, vec![2, 3]);
    }
}
