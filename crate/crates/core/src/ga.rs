//! Generational GA loop shared by the slot-encoded search and the
//! one-site-per-candidate baseline.
//!
//! Each iteration walks the population once. Position `p` first passes a
//! crossover gate; on success two distinct parents are drawn with probability
//! inversely proportional to their objective and exchange tails. Position `p`
//! then passes a mutation gate. Objectives are refreshed once per iteration.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::placement::PlacementVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub iterations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    /// Keep the incumbent best in the population across generations.
    pub elitism: bool,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 10,
            iterations: 300,
            crossover_prob: 0.8,
            mutation_prob: 0.1,
            elitism: true,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidParameter("population must be at least 2".into()));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidParameter("iterations must be at least 1".into()));
        }
        for (name, p) in [("crossover", self.crossover_prob), ("mutation", self.mutation_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Best objective after each completed iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTrace {
    pub best_objective: Vec<f64>,
    /// Iteration (0 = initial population) at which the reported best first
    /// appeared.
    pub found_at: Vec<usize>,
}

impl ConvergenceTrace {
    /// `iteration,best_objective_ms`, one row per iteration, one-based.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "best_objective_ms"])?;
        for (t, v) in self.best_objective.iter().enumerate() {
            w.write_record([(t + 1).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: PlacementVector,
    pub best_objective: f64,
    pub trace: ConvergenceTrace,
}

/// Chromosome representation plugged into [`run`].
pub trait Encoding: Sync {
    type Genome: Clone + Send + Sync;

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Genome;
    fn crossover<R: Rng + ?Sized>(&self, a: &mut Self::Genome, b: &mut Self::Genome, rng: &mut R);
    /// Unconditional mutation; the gate lives in the GA loop.
    fn mutate<R: Rng + ?Sized>(&self, genome: &mut Self::Genome, rng: &mut R);
    fn decode(&self, genome: &Self::Genome) -> PlacementVector;
}

/// Single-draw selection probabilities `(1/f_p) / Σ 1/f_p'`.
pub fn selection_probabilities(objectives: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = objectives.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return Err(Error::NumericDomain(format!(
            "selection needs positive finite objectives, found {bad}"
        )));
    }
    let inv: Vec<f64> = objectives.iter().map(|f| 1.0 / f).collect();
    let sum: f64 = inv.iter().sum();
    Ok(inv.into_iter().map(|w| w / sum).collect())
}

fn pick<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Draws one index by inverse-objective roulette.
pub fn select_one<R: Rng + ?Sized>(objectives: &[f64], rng: &mut R) -> Result<usize> {
    Ok(pick(&selection_probabilities(objectives)?, rng))
}

/// Draws two distinct parents by inverse-objective roulette; the second draw
/// repeats until it differs from the first.
pub fn select_parent_pair<R: Rng + ?Sized>(objectives: &[f64], rng: &mut R) -> Result<(usize, usize)> {
    if objectives.len() < 2 {
        return Err(Error::InvalidParameter("parent selection needs at least two chromosomes".into()));
    }
    let probs = selection_probabilities(objectives)?;
    let first = pick(&probs, rng);
    loop {
        let second = pick(&probs, rng);
        if second != first {
            return Ok((first, second));
        }
    }
}

fn pair_mut<T>(items: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = items.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = items.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = k;
        }
    }
    best
}

fn argmax(values: &[f64]) -> usize {
    let mut worst = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[worst] {
            worst = k;
        }
    }
    worst
}

/// Runs the GA. `objective` must be pure; it is evaluated concurrently, and
/// the RNG is only touched by this thread, so results do not depend on the
/// thread pool.
pub fn run<E, F, R>(encoding: &E, objective: F, config: &GaConfig, rng: &mut R) -> Result<SearchOutcome>
where
    E: Encoding,
    F: Fn(&PlacementVector) -> f64 + Sync,
    R: Rng + ?Sized,
{
    config.validate()?;
    let evaluate = |genome: &E::Genome| objective(&encoding.decode(genome));

    let mut population: Vec<E::Genome> = (0..config.population).map(|_| encoding.random(rng)).collect();
    let mut fitness: Vec<f64> = population.par_iter().map(evaluate).collect();
    let mut dirty = vec![false; config.population];

    let first = argmin(&fitness);
    let mut incumbent = (population[first].clone(), fitness[first], 0usize);
    let mut trace = ConvergenceTrace::default();

    for t in 1..=config.iterations {
        for p in 0..config.population {
            if rng.random::<f64>() < config.crossover_prob {
                let (p1, p2) = select_parent_pair(&fitness, rng)?;
                let (a, b) = pair_mut(&mut population, p1, p2);
                encoding.crossover(a, b, rng);
                dirty[p1] = true;
                dirty[p2] = true;
            }
            if rng.random::<f64>() < config.mutation_prob {
                encoding.mutate(&mut population[p], rng);
                dirty[p] = true;
            }
        }

        let refreshed: Vec<Option<f64>> = population
            .par_iter()
            .zip(dirty.par_iter())
            .map(|(genome, &d)| d.then(|| evaluate(genome)))
            .collect();
        for (k, v) in refreshed.into_iter().enumerate() {
            if let Some(v) = v {
                fitness[k] = v;
            }
        }
        dirty.iter_mut().for_each(|d| *d = false);

        let best = argmin(&fitness);
        if config.elitism && fitness[best] > incumbent.1 {
            let worst = argmax(&fitness);
            population[worst] = incumbent.0.clone();
            fitness[worst] = incumbent.1;
        }
        let best = argmin(&fitness);
        if fitness[best] < incumbent.1 {
            incumbent = (population[best].clone(), fitness[best], t);
        }
        if config.elitism {
            trace.best_objective.push(incumbent.1);
            trace.found_at.push(incumbent.2);
        } else {
            trace.best_objective.push(fitness[best]);
            trace.found_at.push(t);
        }
    }

    let best = argmin(&fitness);
    Ok(SearchOutcome {
        best: encoding.decode(&population[best]),
        best_objective: fitness[best],
        trace,
    })
}
