//! Seeded construction of complete problem instances.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::application::{uniform_model, ApplicationSpec, CompositionModel};
use crate::error::{Error, Result};
use crate::evaluator::{Instance, TimingParams, TimingRanges};
use crate::rng::{stream, StreamKey};
use crate::topology::{synth_generate, GraphParams, HetNetTopology, SiteRanges, SynthParams};

/// Application shape: `Q` microservices with `C_q` drawn from `candidates`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApplicationParams {
    pub microservices: usize,
    pub candidates: (usize, usize),
}

impl Default for ApplicationParams {
    fn default() -> Self {
        Self {
            microservices: 10,
            candidates: (2, 5),
        }
    }
}

impl ApplicationParams {
    pub fn draw_spec<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ApplicationSpec> {
        let (lo, hi) = self.candidates;
        if lo < 1 || lo > hi || usize::from(u16::MAX) < hi {
            return Err(Error::InvalidParameter(format!("candidate range [{lo}, {hi}] is invalid")));
        }
        ApplicationSpec::new((0..self.microservices).map(|_| rng.random_range(lo..=hi)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub devices: usize,
    pub sbs: usize,
    pub area_m: f64,
    pub sites: SiteRanges,
    pub graph: GraphParams,
    pub application: ApplicationParams,
    pub timing: TimingRanges,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            devices: 500,
            sbs: 40,
            area_m: 2000.0,
            sites: SiteRanges::default(),
            graph: GraphParams::default(),
            application: ApplicationParams::default(),
            timing: TimingRanges::default(),
        }
    }
}

impl ScenarioParams {
    pub fn synth(&self) -> SynthParams {
        SynthParams {
            devices: self.devices,
            sbs: self.sbs,
            area_m: self.area_m,
            sites: self.sites,
            graph: self.graph,
        }
    }
}

/// Integer capacity range with mean `mean`: `[mean-1, mean+1]`, collapsing
/// to `[1, 1]` at `mean = 1`.
pub fn capacity_range_for_mean(mean: usize) -> (usize, usize) {
    match mean {
        0 => (0, 0),
        1 => (1, 1),
        b => (b - 1, b + 1),
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub instance: Instance,
    pub model: CompositionModel,
}

/// Application, model and timings for an existing topology. Each part uses
/// its own stream, so changing one range leaves the others unchanged.
pub fn complete(topology: HetNetTopology, params: &ScenarioParams, seed: u64) -> Result<Scenario> {
    let mut app_rng = stream(seed, StreamKey::Application);
    let spec = params.application.draw_spec(&mut app_rng)?;
    let model = uniform_model(&spec, &mut app_rng);
    let timing = TimingParams::sample(&topology, &spec, &params.timing, &mut stream(seed, StreamKey::Timing));
    Ok(Scenario {
        instance: Instance::new(topology, spec, timing)?,
        model,
    })
}

/// Synthetic topology plus [`complete`].
pub fn generate(params: &ScenarioParams, seed: u64) -> Result<Scenario> {
    complete(synth_generate(&params.synth(), seed)?, params, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seeded() {
        let p = ScenarioParams {
            devices: 30,
            sbs: 6,
            area_m: 800.0,
            ..ScenarioParams::default()
        };
        let a = generate(&p, 3).unwrap();
        let b = generate(&p, 3).unwrap();
        assert_eq!(a.instance, b.instance);
        assert_eq!(a.model, b.model);
        assert_eq!(a.instance.spec.q_count(), 10);
        assert!(a.instance.spec.candidate_counts().iter().all(|c| (2..=5).contains(c)));
        let c = generate(&p, 4).unwrap();
        assert_ne!(a.instance, c.instance);
    }

    #[test]
    fn bad_candidate_range() {
        let p = ApplicationParams {
            microservices: 2,
            candidates: (3, 2),
        };
        assert!(p.draw_spec(&mut stream(0, StreamKey::Custom(0))).is_err());
    }
}
