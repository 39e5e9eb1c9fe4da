//! Sample-average-approximation protocol around the genetic search.
//!
//! A round runs `L` independent replications. Replication `l` draws `R`
//! training batches, optimizes `ĝ_R` with GASS, and re-estimates its optimum
//! on `R'` fresh batches. The round converges when the worst re-estimate
//! exceeds the mean training optimum by less than `ε`; otherwise `R` and `R'`
//! grow by the escalation factor and a new round starts.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::application::CompositionModel;
use crate::error::{Error, Result};
use crate::evaluator::Instance;
use crate::ga::{ConvergenceTrace, GaConfig};
use crate::gass::run_gass_with_rng;
use crate::placement::PlacementVector;
use crate::rng::{stream, StreamKey, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaaConfig {
    pub r: usize,
    pub r_prime: usize,
    pub replications: usize,
    /// Gap tolerance in ms.
    pub epsilon: f64,
    pub escalation: f64,
    pub max_rounds: usize,
    pub seed: u64,
}

impl Default for SaaConfig {
    fn default() -> Self {
        Self {
            r: 500,
            r_prime: 100_000,
            replications: 10,
            epsilon: 2e-4,
            escalation: 2.0,
            max_rounds: 3,
            seed: 0,
        }
    }
}

impl SaaConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.r < 1 {
            return fail("R must be at least 1");
        }
        if self.r_prime < self.r {
            return fail("R' must be at least R");
        }
        if self.replications < 1 {
            return fail("L must be at least 1");
        }
        if !(self.epsilon > 0.0) {
            return fail("epsilon must be positive");
        }
        if !(self.escalation > 1.0) {
            return fail("escalation factor must exceed 1");
        }
        if self.max_rounds < 1 {
            return fail("max_rounds must be at least 1");
        }
        Ok(())
    }

    fn escalate(n: usize, factor: f64) -> usize {
        ((n as f64) * factor).ceil() as usize
    }
}

/// Optimum of one replication on its own training set.
#[derive(Debug, Clone)]
pub struct ReplicationOptimum {
    pub placement: PlacementVector,
    pub g_hat: f64,
    pub trace: ConvergenceTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    /// Zero-based replication index `l`.
    pub replication: usize,
    pub placement: PlacementVector,
    pub g_hat: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    /// Zero-based round index.
    pub round: usize,
    pub r: usize,
    pub r_prime: usize,
    pub replications: Vec<ReplicationResult>,
    pub v_bar: f64,
    pub v_worst: f64,
    pub gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaaOutcome {
    pub rounds: Vec<RoundReport>,
    /// Replication of the final round with minimal `v`, ties to the smallest `l`.
    pub best_replication: usize,
    pub best: PlacementVector,
    pub best_v: f64,
    pub converged: bool,
}

/// Training samples and GASS for replication `l` of `round`.
pub fn run_replication(
    instance: &Instance,
    model: &CompositionModel,
    r: usize,
    ga_config: &GaConfig,
    seed: u64,
    round: usize,
    l: usize,
) -> Result<ReplicationOptimum> {
    let (round, replication) = (round as u32, l as u32);
    let mut train = stream(seed, StreamKey::Training { round, replication });
    let batches = model.sample_batch(instance.topology.device_count(), r, &mut train);
    let mut search = stream(seed, StreamKey::Search { round, replication });
    let out = run_gass_with_rng(instance, &batches, ga_config, &mut search)?;
    Ok(ReplicationOptimum {
        placement: out.best,
        g_hat: out.best_objective,
        trace: out.trace,
    })
}

/// `v_{R'}`: mean of `G(x, W)` over `r_prime` fresh batches drawn from `rng`,
/// generated and consumed one at a time.
pub fn estimate_true_value(
    instance: &Instance,
    model: &CompositionModel,
    x: &PlacementVector,
    r_prime: usize,
    rng: &mut StreamRng,
) -> f64 {
    assert!(r_prime >= 1, "R' must be at least 1");
    let routed = instance.route(x);
    let n = instance.topology.device_count();
    let mut sum = 0.0;
    for _ in 0..r_prime {
        sum += routed.sample_objective(&model.sample_devices(n, rng));
    }
    sum / r_prime as f64
}

fn summarize(round: usize, r: usize, r_prime: usize, replications: Vec<ReplicationResult>, epsilon: f64) -> RoundReport {
    let v_bar = replications.iter().map(|x| x.g_hat).sum::<f64>() / replications.len() as f64;
    let v_worst = replications.iter().map(|x| x.v).fold(f64::NEG_INFINITY, f64::max);
    let gap = v_worst - v_bar;
    RoundReport {
        round,
        r,
        r_prime,
        replications,
        v_bar,
        v_worst,
        gap,
        converged: gap < epsilon,
    }
}

/// Index of the minimal `v`, ties to the smallest index.
pub fn best_replication(replications: &[ReplicationResult]) -> usize {
    let mut best = 0;
    for (k, x) in replications.iter().enumerate() {
        if x.v < replications[best].v {
            best = k;
        }
    }
    best
}

pub fn run_saa_rp(
    instance: &Instance,
    model: &CompositionModel,
    saa: &SaaConfig,
    ga_config: &GaConfig,
) -> Result<SaaOutcome> {
    saa.validate()?;
    ga_config.validate()?;
    let (mut r, mut r_prime) = (saa.r, saa.r_prime);
    let mut rounds = Vec::new();
    for round in 0..saa.max_rounds {
        let replications = (0..saa.replications)
            .into_par_iter()
            .map(|l| {
                let opt = run_replication(instance, model, r, ga_config, saa.seed, round, l)?;
                let mut eval = stream(
                    saa.seed,
                    StreamKey::Evaluation {
                        round: round as u32,
                        replication: l as u32,
                    },
                );
                let v = estimate_true_value(instance, model, &opt.placement, r_prime, &mut eval);
                Ok(ReplicationResult {
                    replication: l,
                    placement: opt.placement,
                    g_hat: opt.g_hat,
                    v,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let report = summarize(round, r, r_prime, replications, saa.epsilon);
        let done = report.converged;
        rounds.push(report);
        if done {
            break;
        }
        r = SaaConfig::escalate(r, saa.escalation);
        r_prime = SaaConfig::escalate(r_prime, saa.escalation);
    }
    let last = rounds.last().expect("max_rounds >= 1");
    let k = best_replication(&last.replications);
    Ok(SaaOutcome {
        best_replication: k,
        best: last.replications[k].placement.clone(),
        best_v: last.replications[k].v,
        converged: last.converged,
        rounds,
    })
}

impl SaaOutcome {
    /// Per-replication rows `round,replication,g_hat_ms,v_ms`, followed by a
    /// second header and one `round,v_bar_ms,v_worst_ms,gap_ms,converged` row
    /// per round. Rounds and replications are one-based; floats are written
    /// in shortest round-trip form.
    pub fn write_report<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(["round", "replication", "g_hat_ms", "v_ms"])?;
        for rd in &self.rounds {
            for x in &rd.replications {
                w.write_record([
                    (rd.round + 1).to_string(),
                    (x.replication + 1).to_string(),
                    x.g_hat.to_string(),
                    x.v.to_string(),
                ])?;
            }
        }
        w.write_record(["round", "v_bar_ms", "v_worst_ms", "gap_ms", "converged"])?;
        for rd in &self.rounds {
            w.write_record([
                (rd.round + 1).to_string(),
                rd.v_bar.to_string(),
                rd.v_worst.to_string(),
                rd.gap.to_string(),
                rd.converged.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Report rows read back from [`SaaOutcome::write_report`] output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedReport {
    /// `(round, replication, g_hat, v)`, one-based.
    pub replications: Vec<(usize, usize, f64, f64)>,
    /// `(round, v_bar, v_worst, gap, converged)`, one-based.
    pub summaries: Vec<(usize, f64, f64, f64, bool)>,
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, line: u64) -> Result<T> {
    rec.get(k).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
        path: "<report>".into(),
        line,
        message: format!("bad field {}", k + 1),
    })
}

pub fn parse_report<R: Read>(input: R) -> Result<ParsedReport> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut out = ParsedReport::default();
    let mut in_summary = false;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        match rec.get(1) {
            Some("replication") => in_summary = false,
            Some("v_bar_ms") => in_summary = true,
            _ if in_summary => out.summaries.push((
                field(&rec, 0, line)?,
                field(&rec, 1, line)?,
                field(&rec, 2, line)?,
                field(&rec, 3, line)?,
                field(&rec, 4, line)?,
            )),
            _ => out.replications.push((
                field(&rec, 0, line)?,
                field(&rec, 1, line)?,
                field(&rec, 2, line)?,
                field(&rec, 3, line)?,
            )),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SaaConfig::default().validate().is_ok());
        for bad in [
            SaaConfig { r: 0, ..SaaConfig::default() },
            SaaConfig { r_prime: 10, ..SaaConfig::default() },
            SaaConfig { replications: 0, ..SaaConfig::default() },
            SaaConfig { epsilon: 0.0, ..SaaConfig::default() },
            SaaConfig { escalation: 1.0, ..SaaConfig::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn escalation_rounds_up() {
        assert_eq!(SaaConfig::escalate(50, 2.0), 100);
        assert_eq!(SaaConfig::escalate(3, 1.5), 5);
    }

    #[test]
    fn best_replication_ties_to_first() {
        let x = PlacementVector::from_slots(vec![vec![0]]);
        let row = |l, v| ReplicationResult {
            replication: l,
            placement: x.clone(),
            g_hat: 1.0,
            v,
        };
        assert_eq!(best_replication(&[row(0, 3.0), row(1, 2.0), row(2, 2.0)]), 1);
    }
}
