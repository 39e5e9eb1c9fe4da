//! Instance construction and (policy, seed) cell execution.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use redplace::baselines::{ga1, gp2, rp1, rp2};
use redplace::saa::{estimate_true_value, SaaOutcome};
use redplace::scenario::{self, Scenario};
use redplace::topology::load_geolocation_csv;
use redplace::{run_gass, run_saa_rp, stream, ConvergenceTrace, PlacementVector, StreamKey};

use crate::config::{ExperimentConfig, Policy};

pub const SUMMARY_FILE: &str = "summary.csv";

/// One line of the summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub instance_id: String,
    pub policy: String,
    pub seed: u64,
    pub objective_ms: f64,
    #[serde(rename = "eval_R")]
    pub eval_r: usize,
    pub wall_ms: Option<u64>,
    pub config_hash: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Leave `wall_ms` empty so reruns are byte-identical.
    pub omit_timing: bool,
}

pub fn build_scenario(cfg: &ExperimentConfig) -> Result<Scenario> {
    let params = cfg.scenario();
    let scenario = match &cfg.dataset {
        Some(path) => {
            let topology = load_geolocation_csv(path, &cfg.geo(), cfg.instance_seed)
                .with_context(|| format!("loading dataset {}", path.display()))?;
            scenario::complete(topology, &params, cfg.instance_seed)?
        }
        None => scenario::generate(&params, cfg.instance_seed)?,
    };
    Ok(scenario)
}

/// Writes the topology snapshot, composition model and timing constants.
pub fn write_instance(sc: &Scenario, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    sc.instance.topology.save_snapshot(&dir.join("topology.csv"))?;
    sc.model.save(&dir.join("model.json"))?;
    let timing = BufWriter::new(File::create(dir.join("timing.json"))?);
    serde_json::to_writer_pretty(timing, &sc.instance.timing)?;
    Ok(())
}

enum Artifact {
    Trace(ConvergenceTrace),
    Saa(Box<SaaOutcome>),
    None,
}

struct CellResult {
    policy: Policy,
    seed: u64,
    objective_ms: f64,
    wall_ms: u64,
    placement: Option<PlacementVector>,
    artifact: Artifact,
}

fn run_cell(cfg: &ExperimentConfig, sc: &Scenario, policy: Policy, seed: u64) -> Result<CellResult> {
    let inst = &sc.instance;
    let n = inst.topology.device_count();
    let caps = inst.capacities();
    let held_out = cfg.held_out_size();
    // Every policy replays the same held-out stream.
    let eval = |x: &PlacementVector| {
        estimate_true_value(inst, &sc.model, x, held_out, &mut stream(cfg.instance_seed, StreamKey::HeldOut))
    };
    let training = || sc.model.sample_batch(n, cfg.r, &mut stream(seed, StreamKey::Training { round: 0, replication: 0 }));
    let ga = cfg.ga(seed);

    let start = Instant::now();
    let (placements, artifact) = match policy {
        Policy::Gass => {
            let out = run_gass(inst, &training(), &ga)?;
            (vec![out.best], Artifact::Trace(out.trace))
        }
        Policy::Ga1 => {
            let mut rng = stream(seed, StreamKey::Search { round: 0, replication: 1 });
            let out = ga1(inst, &training(), &ga, cfg.single_site(), &mut rng)?;
            (vec![out.best], Artifact::Trace(out.trace))
        }
        Policy::SaaRp => {
            let out = run_saa_rp(inst, &sc.model, &cfg.saa(seed), &ga)?;
            (vec![out.best.clone()], Artifact::Saa(Box::new(out)))
        }
        Policy::Gp2 => (vec![gp2(&caps, &sc.model)], Artifact::None),
        Policy::Rp1 | Policy::Rp2 => {
            let draws = (0..cfg.random_runs as u32)
                .map(|k| {
                    let mut rng = stream(seed, StreamKey::Policy { index: k });
                    if policy == Policy::Rp1 {
                        rp1(&caps, &inst.spec, cfg.single_site(), &mut rng)
                    } else {
                        rp2(&caps, &inst.spec, &mut rng)
                    }
                })
                .collect();
            (draws, Artifact::None)
        }
    };
    let wall_ms = start.elapsed().as_millis() as u64;

    let objective_ms = placements.iter().map(eval).sum::<f64>() / placements.len() as f64;
    let placement = (placements.len() == 1).then(|| placements.into_iter().next().expect("one placement"));
    Ok(CellResult {
        policy,
        seed,
        objective_ms,
        wall_ms,
        placement,
        artifact,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_cell(cfg: &ExperimentConfig, sc: &Scenario, cell: &CellResult) -> Result<()> {
    let dir = &cfg.output_dir;
    let stem = format!("{}_seed{}", cell.policy, cell.seed);
    if let Some(x) = &cell.placement {
        let mut out = create(&dir.join("placements").join(format!("{stem}.csv")))?;
        x.write_csv(&sc.instance.spec, &mut out)?;
        out.flush()?;
    }
    match &cell.artifact {
        Artifact::Trace(trace) => {
            let mut out = create(&dir.join("traces").join(format!("{stem}.csv")))?;
            trace.write_csv(&mut out)?;
            out.flush()?;
        }
        Artifact::Saa(outcome) => {
            let mut out = create(&dir.join("saa").join(format!("{stem}.csv")))?;
            outcome.write_report(&mut out)?;
            out.flush()?;
        }
        Artifact::None => {}
    }
    Ok(())
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = r.deserialize().collect::<Result<Vec<SummaryRow>, _>>();
    rows.with_context(|| format!("parsing {}", path.display()))
}

/// Runs every (policy, seed) cell of `cfg` on one instance, writes the
/// per-cell files and `summary.csv` under `cfg.output_dir`, and returns the
/// summary rows in policy-then-seed order.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<SummaryRow>> {
    cfg.validate()?;
    let sc = build_scenario(cfg)?;
    write_instance(&sc, &cfg.output_dir.join("instance"))?;

    let cells: Vec<(Policy, u64)> = cfg
        .policies
        .iter()
        .flat_map(|&p| cfg.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(p, s)| run_cell(cfg, &sc, p, s))
        .collect::<Result<Vec<_>>>()?;

    // Single writer, fixed order.
    let instance_id = cfg.instance_id();
    let config_hash = cfg.hash();
    let mut rows = Vec::with_capacity(results.len());
    for cell in &results {
        write_cell(cfg, &sc, cell)?;
        rows.push(SummaryRow {
            instance_id: instance_id.clone(),
            policy: cell.policy.to_string(),
            seed: cell.seed,
            objective_ms: cell.objective_ms,
            eval_r: cfg.held_out_size(),
            wall_ms: (!opts.omit_timing).then_some(cell.wall_ms),
            config_hash: config_hash.clone(),
        });
    }
    write_summary(&rows, &cfg.output_dir.join(SUMMARY_FILE))?;
    Ok(rows)
}

/// One experiment per sweep value, each in `<out>/<key>=<value>/`, plus a
/// combined summary at `<out>/summary.csv`.
pub fn run_sweep(cfg: &ExperimentConfig, key: &str, values: &[String], opts: RunOptions) -> Result<Vec<SummaryRow>> {
    let mut all = Vec::new();
    for v in values {
        let mut point = cfg.clone();
        point.set(key, v)?;
        point.output_dir = cfg.output_dir.join(format!("{key}={v}"));
        eprintln!("sweep {key}={v}");
        all.extend(run_experiment(&point, opts)?);
    }
    write_summary(&all, &cfg.output_dir.join(SUMMARY_FILE))?;
    Ok(all)
}
