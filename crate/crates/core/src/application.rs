//! Chained applications and their probabilistic composition model.
//!
//! A device's request picks one candidate per microservice. The first pick
//! follows `initial`; each later pick follows the row of the previous pick in
//! that step's transition matrix. A unit row expresses a hard fore-and-aft
//! correlation (bundle sale): the successor is forced.

use std::fs::File;
use std::io::{BufReader, Write};
use std::ops::Range;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zero-based candidate index within one microservice.
pub type Choice = u16;

/// Sentinel global index of an empty placement slot.
pub const EMPTY_SLOT: usize = 0;

const ROW_TOLERANCE: f64 = 1e-9;

/// Microservice chain shape: `C_q` candidates for each of `Q` steps.
///
/// Candidates carry one-based global indices ordered by microservice then
/// candidate; `0` is reserved for the empty slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ApplicationSpec {
    counts: Vec<usize>,
    offsets: Vec<usize>,
}

impl TryFrom<Vec<usize>> for ApplicationSpec {
    type Error = Error;

    fn try_from(counts: Vec<usize>) -> Result<Self> {
        Self::new(counts)
    }
}

impl From<ApplicationSpec> for Vec<usize> {
    fn from(spec: ApplicationSpec) -> Self {
        spec.counts
    }
}

impl ApplicationSpec {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParameter("application needs at least one microservice".into()));
        }
        if let Some(q) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidParameter(format!("microservice {} has no candidates", q + 1)));
        }
        if counts.iter().any(|&c| c > usize::from(Choice::MAX)) {
            return Err(Error::InvalidParameter("too many candidates for one microservice".into()));
        }
        let mut offsets = Vec::with_capacity(counts.len());
        let mut acc = 0;
        for &c in &counts {
            offsets.push(acc);
            acc += c;
        }
        Ok(Self { counts, offsets })
    }

    pub fn q_count(&self) -> usize {
        self.counts.len()
    }

    pub fn candidate_counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn candidates(&self, q: usize) -> usize {
        self.counts[q]
    }

    /// `ΣC_q`, the largest valid global index.
    pub fn total_candidates(&self) -> usize {
        self.offsets.last().copied().unwrap_or(0) + self.counts.last().copied().unwrap_or(0)
    }

    /// One-based global index of candidate `c` of microservice `q`.
    #[inline]
    pub fn global(&self, q: usize, c: usize) -> usize {
        debug_assert!(c < self.counts[q]);
        self.offsets[q] + c + 1
    }

    /// Inverse of [`ApplicationSpec::global`].
    pub fn locate(&self, g: usize) -> Result<(usize, usize)> {
        if g == EMPTY_SLOT || g > self.total_candidates() {
            return Err(Error::Domain(format!(
                "global candidate {g} outside 1..={}",
                self.total_candidates()
            )));
        }
        let q = self.offsets.partition_point(|&o| o < g) - 1;
        Ok((q, g - 1 - self.offsets[q]))
    }

    /// Global indices of microservice `q`'s candidates.
    pub fn globals_of(&self, q: usize) -> Range<usize> {
        let start = self.offsets[q] + 1;
        start..start + self.counts[q]
    }

    pub fn validate_scheme(&self, scheme: &[Choice]) -> Result<()> {
        if scheme.len() != self.q_count() {
            return Err(Error::Domain(format!(
                "scheme has {} entries, application has {} microservices",
                scheme.len(),
                self.q_count()
            )));
        }
        for (q, &c) in scheme.iter().enumerate() {
            if usize::from(c) >= self.counts[q] {
                return Err(Error::Domain(format!(
                    "candidate {} of microservice {} outside 1..={}",
                    c + 1,
                    q + 1,
                    self.counts[q]
                )));
            }
        }
        Ok(())
    }
}

/// Serialized form of [`CompositionModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    q: usize,
    candidate_counts: Vec<usize>,
    initial: Vec<f64>,
    /// `transitions[k]` is the `C_{k+1} × C_{k+2}` matrix (one-based steps).
    transitions: Vec<Vec<Vec<f64>>>,
}

/// Initial distribution plus one row-stochastic matrix per chain step.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionModel {
    spec: ApplicationSpec,
    initial: Vec<f64>,
    transitions: Vec<Vec<Vec<f64>>>,
    initial_cdf: Vec<f64>,
    transition_cdf: Vec<Vec<Vec<f64>>>,
}

fn check_row(row: &[f64], width: usize, what: &str) -> Result<()> {
    if row.len() != width {
        return Err(Error::Model(format!("{what} has {} entries, expected {width}", row.len())));
    }
    if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Model(format!("{what} has an entry outside [0, 1]")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::Model(format!("{what} sums to {sum}")));
    }
    Ok(())
}

fn cdf(row: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    row.iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// Inverse-CDF draw. Rounding slack past the last cumulative value falls on
/// the last candidate with positive mass.
fn draw<R: Rng + ?Sized>(row: &[f64], cdf: &[f64], rng: &mut R) -> Choice {
    let u: f64 = rng.random();
    match cdf.iter().position(|&c| u < c) {
        Some(k) if row[k] > 0.0 => k as Choice,
        _ => row.iter().rposition(|&p| p > 0.0).unwrap_or(0) as Choice,
    }
}

impl CompositionModel {
    pub fn new(spec: ApplicationSpec, initial: Vec<f64>, transitions: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let counts = spec.candidate_counts();
        check_row(&initial, counts[0], "initial distribution")?;
        if transitions.len() != counts.len() - 1 {
            return Err(Error::Model(format!(
                "expected {} transition matrices, found {}",
                counts.len() - 1,
                transitions.len()
            )));
        }
        for (k, matrix) in transitions.iter().enumerate() {
            if matrix.len() != counts[k] {
                return Err(Error::Model(format!(
                    "transition into microservice {} has {} rows, expected {}",
                    k + 2,
                    matrix.len(),
                    counts[k]
                )));
            }
            for (c, row) in matrix.iter().enumerate() {
                check_row(row, counts[k + 1], &format!("transition row {} into microservice {}", c + 1, k + 2))?;
            }
        }
        let initial_cdf = cdf(&initial);
        let transition_cdf = transitions
            .iter()
            .map(|m| m.iter().map(|r| cdf(r)).collect())
            .collect();
        Ok(Self {
            spec,
            initial,
            transitions,
            initial_cdf,
            transition_cdf,
        })
    }

    /// Independent microservices: every transition row repeats the next
    /// step's marginal.
    pub fn independent(spec: ApplicationSpec, marginals: Vec<Vec<f64>>) -> Result<Self> {
        if marginals.len() != spec.q_count() {
            return Err(Error::Model("one marginal per microservice required".into()));
        }
        let transitions = (1..spec.q_count())
            .map(|q| vec![marginals[q].clone(); spec.candidates(q - 1)])
            .collect();
        Self::new(spec, marginals[0].clone(), transitions)
    }

    /// Uniform initial distribution and uniform independent transitions.
    pub fn uniform_independent(spec: ApplicationSpec) -> Self {
        let marginals = spec
            .candidate_counts()
            .iter()
            .map(|&c| vec![1.0 / c as f64; c])
            .collect();
        Self::independent(spec, marginals).expect("uniform rows are stochastic")
    }

    pub fn spec(&self) -> &ApplicationSpec {
        &self.spec
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Transition matrix from microservice `q - 1` into `q` (zero-based q ≥ 1).
    pub fn transition(&self, q: usize) -> &[Vec<f64>] {
        &self.transitions[q - 1]
    }

    /// Joint probability of one composition scheme by the chain rule.
    pub fn scheme_probability(&self, scheme: &[Choice]) -> Result<f64> {
        self.spec.validate_scheme(scheme)?;
        let mut p = self.initial[usize::from(scheme[0])];
        for q in 1..scheme.len() {
            p *= self.transitions[q - 1][usize::from(scheme[q - 1])][usize::from(scheme[q])];
        }
        Ok(p)
    }

    /// Draws one scheme into `out` (length `Q`).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [Choice]) {
        out[0] = draw(&self.initial, &self.initial_cdf, rng);
        for q in 1..out.len() {
            let prev = usize::from(out[q - 1]);
            out[q] = draw(&self.transitions[q - 1][prev], &self.transition_cdf[q - 1][prev], rng);
        }
    }

    pub fn sample_composition<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Choice> {
        let mut out = vec![0; self.spec.q_count()];
        self.sample_into(rng, &mut out);
        out
    }

    /// One realization of every device's scheme.
    pub fn sample_devices<R: Rng + ?Sized>(&self, devices: usize, rng: &mut R) -> CompositionSample {
        let q = self.spec.q_count();
        let mut choices = vec![0; devices * q];
        for chunk in choices.chunks_exact_mut(q) {
            self.sample_into(rng, chunk);
        }
        CompositionSample { q_count: q, choices }
    }

    /// `r` independent realizations for `n` devices, batch-major.
    pub fn sample_batch<R: Rng + ?Sized>(&self, n: usize, r: usize, rng: &mut R) -> Vec<CompositionSample> {
        (0..r).map(|_| self.sample_devices(n, rng)).collect()
    }

    /// Marginal selection probability of every candidate, by a forward pass
    /// over the chain. `result[q][c]` is `P(E(s_q^c))`.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let mut out = vec![self.initial.clone()];
        for q in 1..self.spec.q_count() {
            let prev = &out[q - 1];
            let mut next = vec![0.0; self.spec.candidates(q)];
            for (c1, &weight) in prev.iter().enumerate() {
                for (c2, slot) in next.iter_mut().enumerate() {
                    *slot += weight * self.transitions[q - 1][c1][c2];
                }
            }
            out.push(next);
        }
        out
    }

    pub fn to_writer<W: Write>(&self, out: W) -> Result<()> {
        let file = ModelFile {
            q: self.spec.q_count(),
            candidate_counts: self.spec.candidate_counts().to_vec(),
            initial: self.initial.clone(),
            transitions: self.transitions.clone(),
        };
        serde_json::to_writer_pretty(out, &file)?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path)?;
        self.to_writer(&mut f)?;
        writeln!(f)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if file.q != file.candidate_counts.len() {
            return Err(Error::Model(format!(
                "q = {} but {} candidate counts listed",
                file.q,
                file.candidate_counts.len()
            )));
        }
        Self::new(ApplicationSpec::new(file.candidate_counts)?, file.initial, file.transitions)
    }
}

/// Samples a model whose initial distribution and every transition row are
/// uniform on the probability simplex (symmetric Dirichlet(1)).
pub fn uniform_model<R: Rng + ?Sized>(spec: &ApplicationSpec, rng: &mut R) -> CompositionModel {
    let mut simplex = |width: usize| -> Vec<f64> {
        if width == 1 {
            return vec![1.0];
        }
        // Normalized unit exponentials are Dirichlet(1, …, 1).
        let raw: Vec<f64> = (0..width)
            .map(|_| {
                let u: f64 = rng.random();
                -(1.0 - u).ln()
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|e| e / sum).collect()
    };
    let counts = spec.candidate_counts();
    let initial = simplex(counts[0]);
    let transitions = (1..counts.len())
        .map(|q| (0..counts[q - 1]).map(|_| simplex(counts[q])).collect())
        .collect();
    CompositionModel::new(spec.clone(), initial, transitions).expect("simplex rows are stochastic")
}

/// Every device's scheme under one realization `W^r`, stored flat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionSample {
    q_count: usize,
    choices: Vec<Choice>,
}

impl CompositionSample {
    pub fn from_schemes(q_count: usize, schemes: &[Vec<Choice>]) -> Self {
        let mut choices = Vec::with_capacity(q_count * schemes.len());
        for s in schemes {
            assert_eq!(s.len(), q_count, "scheme length mismatch");
            choices.extend_from_slice(s);
        }
        Self { q_count, choices }
    }

    pub fn device_count(&self) -> usize {
        self.choices.len().checked_div(self.q_count).unwrap_or(0)
    }

    #[inline]
    pub fn scheme(&self, i: usize) -> &[Choice] {
        &self.choices[i * self.q_count..(i + 1) * self.q_count]
    }

    pub fn schemes(&self) -> impl Iterator<Item = &[Choice]> {
        self.choices.chunks_exact(self.q_count)
    }
}

/// Every scheme of `spec` in lexicographic order. Exponential in `Q`; for
/// oracles on small chains.
pub fn enumerate_schemes(spec: &ApplicationSpec) -> Vec<Vec<Choice>> {
    let mut out = vec![Vec::new()];
    for &c in spec.candidate_counts() {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..c as Choice).map(move |k| {
                    let mut s = prefix.clone();
                    s.push(k);
                    s
                })
            })
            .collect();
    }
    out
}
