//! The deploy-or-not decision vector.
//!
//! SBS `j` owns exactly `b_j` slots, each holding a global candidate index or
//! [`EMPTY_SLOT`]. The capacity constraint therefore holds by construction;
//! the only extra rule is that a candidate occupies at most one slot per SBS.
//! A candidate may still appear on any number of SBSs, which is how
//! redundancy is expressed.

use std::fmt;
use std::io::Write;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::application::{ApplicationSpec, EMPTY_SLOT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlacementVector {
    slots: Vec<Vec<usize>>,
}

/// First rule broken by a candidate vector. SBS and slot numbers are zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SbsCount { expected: usize, found: usize },
    SlotCount { sbs: usize, expected: usize, found: usize },
    OutOfRange { sbs: usize, slot: usize, value: usize },
    Duplicate { sbs: usize, slot: usize, value: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::SbsCount { expected, found } => {
                write!(f, "placement covers {found} SBSs, topology has {expected}")
            }
            Violation::SlotCount { sbs, expected, found } => {
                write!(f, "SBS {} has {found} slots, capacity is {expected}", sbs + 1)
            }
            Violation::OutOfRange { sbs, slot, value } => {
                write!(f, "SBS {} slot {} holds out-of-range candidate {value}", sbs + 1, slot + 1)
            }
            Violation::Duplicate { sbs, slot, value } => {
                write!(f, "SBS {} slot {} repeats candidate {value}", sbs + 1, slot + 1)
            }
        }
    }
}

impl std::error::Error for Violation {}

impl PlacementVector {
    /// All-empty vector for the given per-SBS capacities.
    pub fn empty(capacities: &[usize]) -> Self {
        Self {
            slots: capacities.iter().map(|&b| vec![EMPTY_SLOT; b]).collect(),
        }
    }

    /// Wraps raw slot lists without checking them; see [`PlacementVector::validate`].
    pub fn from_slots(slots: Vec<Vec<usize>>) -> Self {
        Self { slots }
    }

    pub fn sbs_count(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Vec<usize>] {
        &self.slots
    }

    pub fn segment(&self, j: usize) -> &[usize] {
        &self.slots[j]
    }

    pub fn segment_mut(&mut self, j: usize) -> &mut [usize] {
        &mut self.slots[j]
    }

    pub fn hosts(&self, j: usize, g: usize) -> bool {
        g != EMPTY_SLOT && self.slots[j].contains(&g)
    }

    /// Places `g` into the first empty slot of SBS `j`. Returns false when
    /// `j` is full or already hosts `g`.
    pub fn try_place(&mut self, j: usize, g: usize) -> bool {
        if self.hosts(j, g) {
            return false;
        }
        match self.slots[j].iter_mut().find(|s| **s == EMPTY_SLOT) {
            Some(slot) => {
                *slot = g;
                true
            }
            None => false,
        }
    }

    /// `D(g)`: SBSs hosting candidate `g`, ascending.
    pub fn deployment_set(&self, g: usize, total_candidates: usize) -> Result<Vec<usize>> {
        if g == EMPTY_SLOT || g > total_candidates {
            return Err(Error::Domain(format!("global candidate {g} outside 1..={total_candidates}")));
        }
        Ok((0..self.slots.len()).filter(|&j| self.slots[j].contains(&g)).collect())
    }

    /// `D(g)` for every global index; entry 0 stays empty.
    pub fn deployment_index(&self, total_candidates: usize) -> Vec<Vec<usize>> {
        let mut index = vec![Vec::new(); total_candidates + 1];
        for (j, seg) in self.slots.iter().enumerate() {
            for &g in seg {
                if g != EMPTY_SLOT && g <= total_candidates && index[g].last() != Some(&j) {
                    index[g].push(j);
                }
            }
        }
        index
    }

    /// Number of occupied slots across all SBSs.
    pub fn used_slots(&self) -> usize {
        self.slots.iter().flatten().filter(|&&g| g != EMPTY_SLOT).count()
    }

    /// Order-free form: every segment sorted ascending with empty slots last.
    pub fn canonical(&self) -> Self {
        let slots = self
            .slots
            .iter()
            .map(|seg| {
                let mut s: Vec<usize> = seg.iter().copied().filter(|&g| g != EMPTY_SLOT).collect();
                s.sort_unstable();
                s.resize(seg.len(), EMPTY_SLOT);
                s
            })
            .collect();
        Self { slots }
    }

    pub fn validate(&self, capacities: &[usize], spec: &ApplicationSpec) -> Result<(), Violation> {
        if self.slots.len() != capacities.len() {
            return Err(Violation::SbsCount {
                expected: capacities.len(),
                found: self.slots.len(),
            });
        }
        let total = spec.total_candidates();
        for (sbs, (seg, &cap)) in self.slots.iter().zip(capacities).enumerate() {
            if seg.len() != cap {
                return Err(Violation::SlotCount {
                    sbs,
                    expected: cap,
                    found: seg.len(),
                });
            }
            for (slot, &value) in seg.iter().enumerate() {
                if value > total {
                    return Err(Violation::OutOfRange { sbs, slot, value });
                }
                if value != EMPTY_SLOT && seg[..slot].contains(&value) {
                    return Err(Violation::Duplicate { sbs, slot, value });
                }
            }
        }
        Ok(())
    }

    /// Occupied slots as `sbs_id,slot,global_candidate,microservice_q,candidate_c`
    /// rows, all one-based.
    pub fn write_csv<W: Write>(&self, spec: &ApplicationSpec, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sbs_id", "slot", "global_candidate", "microservice_q", "candidate_c"])?;
        for (j, seg) in self.slots.iter().enumerate() {
            for (k, &g) in seg.iter().enumerate() {
                if g == EMPTY_SLOT {
                    continue;
                }
                let (q, c) = spec.locate(g)?;
                w.write_record([j + 1, k + 1, g, q + 1, c + 1].map(|v| v.to_string()))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Fills `segment` with independent uniform draws over `{0, 1, …, total}`,
/// redrawing any nonzero value already present in the segment.
pub fn random_segment<R: Rng + ?Sized>(segment: &mut [usize], total_candidates: usize, rng: &mut R) {
    for k in 0..segment.len() {
        segment[k] = loop {
            let v = rng.random_range(0..=total_candidates);
            if v == EMPTY_SLOT || !segment[..k].contains(&v) {
                break v;
            }
        };
    }
}

pub fn random_placement<R: Rng + ?Sized>(capacities: &[usize], spec: &ApplicationSpec, rng: &mut R) -> PlacementVector {
    let mut x = PlacementVector::empty(capacities);
    let total = spec.total_candidates();
    for seg in &mut x.slots {
        random_segment(seg, total, rng);
    }
    x
}

/// Number of distinct canonical placements: per SBS,
/// `Σ_{k=0..min(b_j, ΣC)} C(ΣC, k)`, multiplied over SBSs.
pub fn solution_space_size(capacities: &[usize], total_candidates: usize) -> BigUint {
    let mut product = BigUint::from(1u32);
    for &b in capacities {
        let mut per_sbs = BigUint::from(0u32);
        let mut binom = BigUint::from(1u32);
        for k in 0..=b.min(total_candidates) {
            if k > 0 {
                binom = binom * BigUint::from(total_candidates - k + 1) / BigUint::from(k);
            }
            per_sbs += &binom;
        }
        product *= per_sbs;
    }
    product
}
