//! Experiment configuration: every tunable by name, defaulting to the
//! standard parameter table.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use redplace::evaluator::TimingRanges;
use redplace::scenario::{capacity_range_for_mean, ApplicationParams, ScenarioParams};
use redplace::topology::{GeoParams, GraphParams, SiteRanges};
use redplace::{GaConfig, SaaConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Gass,
    SaaRp,
    Rp1,
    Rp2,
    Ga1,
    Gp2,
}

impl Policy {
    pub const ALL: [Policy; 6] = [Policy::Gass, Policy::SaaRp, Policy::Rp1, Policy::Rp2, Policy::Ga1, Policy::Gp2];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Gass => "gass",
            Policy::SaaRp => "saa-rp",
            Policy::Rp1 => "rp1",
            Policy::Rp2 => "rp2",
            Policy::Ga1 => "ga1",
            Policy::Gp2 => "gp2",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Raised for input the user must fix on the command line; maps to exit 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

impl FromStr for Policy {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| UsageError(format!("unknown policy '{s}' (expected one of gass, saa-rp, rp1, rp2, ga1, gp2)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Microservices per application.
    pub q: usize,
    pub c_min: usize,
    pub c_max: usize,
    /// Devices.
    pub n: usize,
    /// SBSs.
    pub m: usize,
    pub b_min: usize,
    pub b_max: usize,
    /// Input stream size range, kbits.
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Wireless reciprocal bandwidth, ms per kbit.
    pub d: f64,
    pub d_mbs: f64,
    /// Per-hop wired delay, ms.
    pub beta: f64,
    /// One-way backbone delay, ms.
    pub tau_b: f64,
    pub exec_min: f64,
    pub exec_max: f64,
    pub cloud_exec_min: f64,
    pub cloud_exec_max: f64,
    pub radius_min: f64,
    pub radius_max: f64,
    pub max_hops: u32,
    pub k_nearest: usize,
    /// Side of the synthetic deployment square, meters.
    pub area_m: f64,
    pub r: usize,
    pub r_prime: usize,
    pub l: usize,
    pub epsilon: f64,
    pub escalation: f64,
    pub max_rounds: usize,
    pub p: usize,
    pub it: usize,
    pub p_m: f64,
    pub p_c: f64,
    pub elitism: bool,
    /// Scenario-#1 policies deploy at most this many candidates per SBS;
    /// `0` means up to `b_j`.
    pub single_site_limit: usize,
    /// Draws averaged for the randomized policies.
    pub random_runs: usize,
    /// Size of the shared held-out evaluation set; `0` means `r_prime`.
    pub eval_r: usize,
    pub instance_seed: u64,
    /// Geolocation CSV; synthetic generation when absent.
    pub dataset: Option<PathBuf>,
    pub policies: Vec<Policy>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            q: 10,
            c_min: 2,
            c_max: 5,
            n: 500,
            m: 40,
            b_min: 3,
            b_max: 5,
            alpha_min: 1.0,
            alpha_max: 8.0,
            d: 1.0,
            d_mbs: 1.0,
            beta: 5.0,
            tau_b: 100.0,
            exec_min: 1.0,
            exec_max: 2.0,
            cloud_exec_min: 1.0,
            cloud_exec_max: 2.0,
            radius_min: 200.0,
            radius_max: 600.0,
            max_hops: 4,
            k_nearest: 3,
            area_m: 2000.0,
            r: 500,
            r_prime: 100_000,
            l: 10,
            epsilon: 2e-4,
            escalation: 2.0,
            max_rounds: 3,
            p: 10,
            it: 300,
            p_m: 0.1,
            p_c: 0.8,
            elitism: true,
            single_site_limit: 1,
            random_runs: 10,
            eval_r: 0,
            instance_seed: 0,
            dataset: None,
            policies: vec![Policy::Gass],
            seeds: Vec::new(),
            output_dir: PathBuf::from("out"),
        }
    }
}

fn ordered<T: PartialOrd + fmt::Display>(name: &str, lo: T, hi: T) -> Result<()> {
    if lo > hi {
        bail!(UsageError(format!("{name} range [{lo}, {hi}] is not ordered")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
    }

    pub fn validate(&self) -> Result<()> {
        ordered("C_q", self.c_min, self.c_max)?;
        ordered("b", self.b_min, self.b_max)?;
        ordered("alpha", self.alpha_min, self.alpha_max)?;
        ordered("exec", self.exec_min, self.exec_max)?;
        ordered("cloud exec", self.cloud_exec_min, self.cloud_exec_max)?;
        ordered("radius", self.radius_min, self.radius_max)?;
        for (name, p) in [("p_m", self.p_m), ("p_c", self.p_c)] {
            if !(0.0..=1.0).contains(&p) {
                bail!(UsageError(format!("{name} = {p} is not a probability")));
            }
        }
        if self.q == 0 || self.n == 0 || self.m == 0 {
            bail!(UsageError("q, n and m must be positive".into()));
        }
        self.ga(0).validate().map_err(|e| UsageError(e.to_string()))?;
        self.saa(0).validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(())
    }

    pub fn scenario(&self) -> ScenarioParams {
        ScenarioParams {
            devices: self.n,
            sbs: self.m,
            area_m: self.area_m,
            sites: self.sites(),
            graph: GraphParams {
                k_nearest: self.k_nearest,
                max_diameter: self.max_hops,
            },
            application: ApplicationParams {
                microservices: self.q,
                candidates: (self.c_min, self.c_max),
            },
            timing: TimingRanges {
                alpha_kbits: (self.alpha_min, self.alpha_max),
                sbs_link_ms_per_kbit: self.d,
                mbs_link_ms_per_kbit: self.d_mbs,
                beta_ms: self.beta,
                tau_b_ms: self.tau_b,
                exec_ms: (self.exec_min, self.exec_max),
                cloud_exec_ms: (self.cloud_exec_min, self.cloud_exec_max),
            },
        }
    }

    pub fn sites(&self) -> SiteRanges {
        SiteRanges {
            radius_m: (self.radius_min, self.radius_max),
            capacity: (self.b_min, self.b_max),
        }
    }

    pub fn geo(&self) -> GeoParams {
        let s = self.scenario();
        GeoParams {
            devices: s.devices,
            sbs: s.sbs,
            sites: s.sites,
            graph: s.graph,
        }
    }

    pub fn ga(&self, seed: u64) -> GaConfig {
        GaConfig {
            population: self.p,
            iterations: self.it,
            crossover_prob: self.p_c,
            mutation_prob: self.p_m,
            elitism: self.elitism,
            seed,
        }
    }

    pub fn saa(&self, seed: u64) -> SaaConfig {
        SaaConfig {
            r: self.r,
            r_prime: self.r_prime,
            replications: self.l,
            epsilon: self.epsilon,
            escalation: self.escalation,
            max_rounds: self.max_rounds,
            seed,
        }
    }

    pub fn single_site(&self) -> Option<usize> {
        (self.single_site_limit > 0).then_some(self.single_site_limit)
    }

    pub fn held_out_size(&self) -> usize {
        if self.eval_r == 0 {
            self.r_prime
        } else {
            self.eval_r
        }
    }

    /// Hex SHA-256 of the canonical JSON form, output location excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Identifier of the problem instance: everything that shapes the
    /// instance, not the policies or seeds run on it.
    pub fn instance_id(&self) -> String {
        let mut shape = self.clone();
        shape.policies.clear();
        shape.seeds.clear();
        let h = shape.hash();
        let source = if self.dataset.is_some() { "geo" } else { "synth" };
        format!("{source}-{}-{}", self.instance_seed, &h[..12])
    }

    /// Sets one field by name. `b_mean` sets the capacity range around its
    /// value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.to_ascii_lowercase().replace('-', "_");
        if key == "b_mean" {
            let b: usize = value
                .parse()
                .map_err(|_| UsageError(format!("b_mean expects an integer, got '{value}'")))?;
            (self.b_min, self.b_max) = capacity_range_for_mean(b);
            return Ok(());
        }
        let mut json = serde_json::to_value(&*self)?;
        let obj = json.as_object_mut().expect("config is an object");
        let slot = obj
            .get_mut(&key)
            .ok_or_else(|| UsageError(format!("unknown parameter '{key}'")))?;
        let parsed: serde_json::Value = match slot {
            serde_json::Value::String(_) | serde_json::Value::Null => serde_json::Value::String(value.to_string()),
            _ => serde_json::from_str(value).map_err(|_| UsageError(format!("bad value '{value}' for {key}")))?,
        };
        *slot = parsed;
        *self = serde_json::from_value(json).map_err(|e| UsageError(format!("bad value '{value}' for {key}: {e}")))?;
        Ok(())
    }
}

/// `key=a..b` (inclusive integers) or `key=v1,v2,…`.
pub fn parse_sweep(spec: &str) -> Result<(String, Vec<String>)> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| UsageError(format!("sweep '{spec}' must look like key=a..b or key=v1,v2")))?;
    let values: Vec<String> = if let Some((a, b)) = values.split_once("..") {
        let a: i64 = a.trim().parse().map_err(|_| UsageError(format!("bad range start in '{spec}'")))?;
        let b: i64 = b.trim().parse().map_err(|_| UsageError(format!("bad range end in '{spec}'")))?;
        if a > b {
            bail!(UsageError(format!("empty range in '{spec}'")));
        }
        (a..=b).map(|v| v.to_string()).collect()
    } else {
        values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect()
    };
    if values.is_empty() {
        bail!(UsageError(format!("sweep '{spec}' has no values")));
    }
    Ok((key.trim().to_string(), values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_parameter_table() {
        let c = ExperimentConfig::default();
        assert_eq!((c.q, c.c_min, c.c_max, c.n, c.m, c.b_min, c.b_max), (10, 2, 5, 500, 40, 3, 5));
        assert_eq!((c.alpha_min, c.alpha_max, c.beta, c.tau_b), (1.0, 8.0, 5.0, 100.0));
        assert_eq!((c.exec_min, c.exec_max, c.radius_min, c.radius_max), (1.0, 2.0, 200.0, 600.0));
        assert_eq!((c.r, c.r_prime, c.l, c.epsilon), (500, 100_000, 10, 2e-4));
        assert_eq!((c.p, c.it, c.p_m, c.p_c), (10, 300, 0.1, 0.8));
        c.validate().unwrap();
    }

    #[test]
    fn set_by_name() {
        let mut c = ExperimentConfig::default();
        c.set("Q", "15").unwrap();
        c.set("p_c", "0.5").unwrap();
        c.set("b_mean", "1").unwrap();
        assert_eq!((c.q, c.p_c, c.b_min, c.b_max), (15, 0.5, 1, 1));
        c.set("b_mean", "4").unwrap();
        assert_eq!((c.b_min, c.b_max), (3, 5));
        assert!(c.set("nope", "1").is_err());
        assert!(c.set("q", "x").is_err());
        c.set("dataset", "a.csv").unwrap();
        assert_eq!(c.dataset, Some(PathBuf::from("a.csv")));
    }

    #[test]
    fn sweep_syntax() {
        assert_eq!(parse_sweep("b_mean=1..5").unwrap().1, vec!["1", "2", "3", "4", "5"]);
        assert_eq!(parse_sweep("Q=5,10,15,20").unwrap(), ("Q".into(), vec!["5".into(), "10".into(), "15".into(), "20".into()]));
        assert!(parse_sweep("q").is_err());
        assert!(parse_sweep("q=3..1").is_err());
    }

    #[test]
    fn invalid_ranges_rejected() {
        let c = ExperimentConfig {
            b_min: 5,
            b_max: 3,
            ..ExperimentConfig::default()
        };
        assert!(c.validate().unwrap_err().downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn instance_id_ignores_policies_and_seeds() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            policies: vec![Policy::Rp1],
            seeds: vec![3],
            ..ExperimentConfig::default()
        };
        assert_eq!(a.instance_id(), b.instance_id());
        assert_ne!(a.hash(), b.hash());
        let c = ExperimentConfig {
            m: 20,
            ..ExperimentConfig::default()
        };
        assert_ne!(a.instance_id(), c.instance_id());
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("gendoc".parse::<Policy>().is_err());
    }
}
