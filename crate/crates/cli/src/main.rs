//! `redplace`: instance generation, policy runs, sweeps and comparisons.
//!
//! Exit codes: 0 on success, 1 on I/O or runtime failure, 2 on usage errors.

mod compare;
mod config;
mod experiment;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use config::{parse_sweep, ExperimentConfig, Policy, UsageError};
use experiment::{RunOptions, SummaryRow};

#[derive(Parser)]
#[command(name = "redplace", version, about = "Redundant microservice placement experiments", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the topology snapshot, composition model and timing files.
    Gen(ConfigArgs),
    /// Run policies for each seed on one instance.
    Run(RunArgs),
    /// Repeat `run` over a grid of one parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// `key=a..b` or `key=v1,v2,...`; `b_mean` sets the capacity range.
        #[arg(long)]
        sweep: String,
    },
    /// Rank policies from summary CSVs.
    Compare {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Policy names, comma separated or repeated.
    #[arg(long = "policy", value_delimiter = ',')]
    policies: Vec<Policy>,
    /// Seeds, comma separated or repeated.
    #[arg(long = "seed", value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Leave wall_ms empty so output is byte-identical across reruns.
    #[arg(long)]
    omit_timing: bool,
}

/// Overrides applied on top of the defaults and the optional TOML file.
#[derive(Args)]
struct ConfigArgs {
    /// TOML file with any ExperimentConfig fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generic override `key=value`, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Geolocation CSV (`id,kind,lat,lon`).
    #[arg(long, conflicts_with = "synth")]
    dataset: Option<PathBuf>,
    /// Synthetic topology (the default).
    #[arg(long)]
    synth: bool,
    #[arg(long = "out", alias = "output-dir")]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    instance_seed: Option<u64>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    c_min: Option<usize>,
    #[arg(long)]
    c_max: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    b_min: Option<usize>,
    #[arg(long)]
    b_max: Option<usize>,
    #[arg(long)]
    alpha_min: Option<f64>,
    #[arg(long)]
    alpha_max: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    tau_b: Option<f64>,
    #[arg(long)]
    exec_min: Option<f64>,
    #[arg(long)]
    exec_max: Option<f64>,
    #[arg(long)]
    radius_min: Option<f64>,
    #[arg(long)]
    radius_max: Option<f64>,
    #[arg(long)]
    area_m: Option<f64>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    r_prime: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    it: Option<usize>,
    #[arg(long)]
    p_m: Option<f64>,
    #[arg(long)]
    p_c: Option<f64>,
    #[arg(long)]
    eval_r: Option<usize>,
    #[arg(long)]
    random_runs: Option<usize>,
    #[arg(long)]
    single_site_limit: Option<usize>,
}

macro_rules! apply {
    ($cfg:ident, $args:ident, $($field:ident),+) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })+
    };
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!(UsageError(format!("--set expects KEY=VALUE, got '{kv}'")));
            };
            cfg.set(k.trim(), v.trim())?;
        }
        apply!(
            cfg, self, output_dir, instance_seed, q, c_min, c_max, n, m, b_min, b_max, alpha_min, alpha_max,
            beta, tau_b, exec_min, exec_max, radius_min, radius_max, area_m, r, r_prime, l, epsilon, p, it,
            p_m, p_c, eval_r, random_runs, single_site_limit
        );
        if self.dataset.is_some() {
            cfg.dataset = self.dataset.clone();
        }
        if self.synth {
            cfg.dataset = None;
        }
        Ok(cfg)
    }
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = self.config.resolve()?;
        if !self.policies.is_empty() {
            cfg.policies = self.policies.clone();
        }
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if cfg.seeds.is_empty() {
            bail!(UsageError("--seed is required".into()));
        }
        if cfg.policies.is_empty() {
            bail!(UsageError("at least one --policy is required".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            omit_timing: self.omit_timing,
        }
    }
}

fn print_rows(rows: &[SummaryRow]) {
    for r in rows {
        println!("{} {} seed={} objective_ms={:.4}", r.instance_id, r.policy, r.seed, r.objective_ms);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(args) => {
            let cfg = args.resolve()?;
            cfg.validate()?;
            let sc = experiment::build_scenario(&cfg)?;
            experiment::write_instance(&sc, &cfg.output_dir)?;
            println!("{} written to {}", cfg.instance_id(), cfg.output_dir.display());
        }
        Command::Run(args) => {
            let cfg = args.resolve()?;
            print_rows(&experiment::run_experiment(&cfg, args.options())?);
        }
        Command::Sweep { run, sweep } => {
            let cfg = run.resolve()?;
            let (key, values) = parse_sweep(&sweep)?;
            // Reject bad keys and values before any cell runs.
            for v in &values {
                let mut probe = cfg.clone();
                probe.set(&key, v)?;
                probe.validate()?;
            }
            print_rows(&experiment::run_sweep(&cfg, &key, &values, run.options())?);
        }
        Command::Compare { summaries, out } => {
            let mut rows = Vec::new();
            for path in &summaries {
                rows.extend(experiment::read_summary(path)?);
            }
            let rankings = compare::compare(&rows)?;
            match out {
                Some(path) => compare::write_rankings(&rankings, std::fs::File::create(path)?)?,
                None => compare::write_rankings(&rankings, io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<UsageError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
