//! Contention-free response-time model.
//!
//! A device's request enters at its nearest covering SBS (or the macro
//! base station when uncovered), is routed along shortest hop paths to the
//! closest SBS hosting each chosen candidate in turn, falls back to the cloud
//! as soon as a candidate is hosted nowhere, and finally returns to the
//! device. Once on the cloud, the remaining chain stays there.

use std::fmt;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::application::{ApplicationSpec, Choice, CompositionSample, EMPTY_SLOT};
use crate::error::{Error, Result};
use crate::placement::PlacementVector;
use crate::topology::HetNetTopology;

/// Node that actually processes a candidate for one device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessorLocation {
    Sbs(usize),
    Cloud,
}

impl fmt::Display for ProcessorLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessorLocation::Sbs(j) => write!(f, "sbs{}", j + 1),
            ProcessorLocation::Cloud => f.write_str("cloud"),
        }
    }
}

/// Ranges from which [`TimingParams::sample`] draws per-instance constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingRanges {
    /// Input stream size per device, kbits.
    pub alpha_kbits: (f64, f64),
    /// Wireless reciprocal bandwidth device–SBS, ms per kbit.
    pub sbs_link_ms_per_kbit: f64,
    /// Wireless reciprocal bandwidth device–MBS, ms per kbit.
    pub mbs_link_ms_per_kbit: f64,
    /// Wired cost per hop between SBSs, ms.
    pub beta_ms: f64,
    /// One-way backbone time, ms.
    pub tau_b_ms: f64,
    pub exec_ms: (f64, f64),
    pub cloud_exec_ms: (f64, f64),
}

impl Default for TimingRanges {
    fn default() -> Self {
        // 1 MHz links: 1 kbit takes 1 ms.
        Self {
            alpha_kbits: (1.0, 8.0),
            sbs_link_ms_per_kbit: 1.0,
            mbs_link_ms_per_kbit: 1.0,
            beta_ms: 5.0,
            tau_b_ms: 100.0,
            exec_ms: (1.0, 2.0),
            cloud_exec_ms: (1.0, 2.0),
        }
    }
}

/// Per-instance timing constants. All times in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    /// `α` per device, kbits.
    pub alpha: Vec<f64>,
    /// `d(i, j)` row-major N×M, ms per kbit.
    pub d_sbs: Vec<f64>,
    /// `d(i, 0)` per device, ms per kbit.
    pub d_mbs: Vec<f64>,
    pub beta: f64,
    pub tau_b: f64,
    /// `τ_exe(j, g)` row-major M×ΣC, indexed by `g - 1`.
    pub exec_sbs: Vec<f64>,
    /// `τ_exe(cloud, g)`, indexed by `g - 1`.
    pub exec_cloud: Vec<f64>,
}

fn draw_in<R: Rng + ?Sized>(range: (f64, f64), rng: &mut R) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..=range.1)
    }
}

impl TimingParams {
    /// Same constants on every link and node.
    pub fn uniform(
        topology: &HetNetTopology,
        spec: &ApplicationSpec,
        alpha_times_d: f64,
        beta: f64,
        tau_b: f64,
        exec: f64,
    ) -> Self {
        let n = topology.device_count();
        let m = topology.sbs_count();
        let g = spec.total_candidates();
        Self {
            alpha: vec![alpha_times_d; n],
            d_sbs: vec![1.0; n * m],
            d_mbs: vec![1.0; n],
            beta,
            tau_b,
            exec_sbs: vec![exec; m * g],
            exec_cloud: vec![exec; g],
        }
    }

    /// Draws `α` per device and `τ_exe` per (node, candidate) once.
    pub fn sample<R: Rng + ?Sized>(
        topology: &HetNetTopology,
        spec: &ApplicationSpec,
        ranges: &TimingRanges,
        rng: &mut R,
    ) -> Self {
        let n = topology.device_count();
        let m = topology.sbs_count();
        let g = spec.total_candidates();
        let alpha = (0..n).map(|_| draw_in(ranges.alpha_kbits, rng)).collect();
        let exec_sbs = (0..m * g).map(|_| draw_in(ranges.exec_ms, rng)).collect();
        let exec_cloud = (0..g).map(|_| draw_in(ranges.cloud_exec_ms, rng)).collect();
        Self {
            alpha,
            d_sbs: vec![ranges.sbs_link_ms_per_kbit; n * m],
            d_mbs: vec![ranges.mbs_link_ms_per_kbit; n],
            beta: ranges.beta_ms,
            tau_b: ranges.tau_b_ms,
            exec_sbs,
            exec_cloud,
        }
    }

    fn check(&self, topology: &HetNetTopology, spec: &ApplicationSpec) -> Result<()> {
        let n = topology.device_count();
        let m = topology.sbs_count();
        let g = spec.total_candidates();
        let dims = [
            ("alpha", self.alpha.len(), n),
            ("d_sbs", self.d_sbs.len(), n * m),
            ("d_mbs", self.d_mbs.len(), n),
            ("exec_sbs", self.exec_sbs.len(), m * g),
            ("exec_cloud", self.exec_cloud.len(), g),
        ];
        for (name, found, expected) in dims {
            if found != expected {
                return Err(Error::InvalidParameter(format!("{name} has {found} entries, expected {expected}")));
            }
        }
        let all = self
            .alpha
            .iter()
            .chain(&self.d_sbs)
            .chain(&self.d_mbs)
            .chain(&self.exec_sbs)
            .chain(&self.exec_cloud)
            .chain([&self.beta, &self.tau_b]);
        for &v in all {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("timing value {v} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

/// Per-step costs of one device's request.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCost {
    pub uplink_ms: f64,
    pub processor: ProcessorLocation,
    pub exec_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseBreakdown {
    pub steps: Vec<StepCost>,
    pub downlink_ms: f64,
    pub total_ms: f64,
}

impl ResponseBreakdown {
    /// `Σ(uplink + exec) + downlink`, summed in chain order.
    pub fn recomputed_total(&self) -> f64 {
        self.steps.iter().fold(0.0, |acc, s| acc + (s.uplink_ms + s.exec_ms)) + self.downlink_ms
    }
}

/// One problem instance: network, application shape, and timing constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub topology: HetNetTopology,
    pub spec: ApplicationSpec,
    pub timing: TimingParams,
}

impl Instance {
    pub fn new(topology: HetNetTopology, spec: ApplicationSpec, timing: TimingParams) -> Result<Self> {
        timing.check(&topology, &spec)?;
        Ok(Self { topology, spec, timing })
    }

    pub fn capacities(&self) -> Vec<usize> {
        self.topology.capacities()
    }

    /// Precomputes the routing view of `x`.
    pub fn route(&self, x: &PlacementVector) -> RoutedPlacement<'_> {
        RoutedPlacement::new(self, x)
    }

    /// `G(x, W)`.
    pub fn sample_objective(&self, x: &PlacementVector, batch: &CompositionSample) -> f64 {
        self.route(x).sample_objective(batch)
    }

    /// `ĝ_R(x)`.
    pub fn saa_objective(&self, x: &PlacementVector, batches: &[CompositionSample]) -> f64 {
        self.route(x).saa_objective(batches)
    }
}

const NO_COPY: u32 = u32::MAX;

/// A placement resolved against an instance: for every (SBS, candidate) the
/// hop-closest hosting SBS, ties to the smallest index.
#[derive(Debug, Clone)]
pub struct RoutedPlacement<'a> {
    instance: &'a Instance,
    stride: usize,
    closest: Vec<u32>,
}

impl<'a> RoutedPlacement<'a> {
    pub fn new(instance: &'a Instance, x: &PlacementVector) -> Self {
        let topo = &instance.topology;
        let m = topo.sbs_count();
        let total = instance.spec.total_candidates();
        assert_eq!(x.sbs_count(), m, "placement and topology disagree on SBS count");
        let deploy = x.deployment_index(total);
        let stride = total + 1;
        let mut closest = vec![NO_COPY; m * stride];
        for (g, hosts) in deploy.iter().enumerate().skip(1) {
            if hosts.is_empty() {
                continue;
            }
            for j in 0..m {
                let mut best = hosts[0];
                let mut best_h = topo.hops(j, best);
                for &k in &hosts[1..] {
                    let h = topo.hops(j, k);
                    if h < best_h {
                        best = k;
                        best_h = h;
                    }
                }
                closest[j * stride + g] = best as u32;
            }
        }
        Self {
            instance,
            stride,
            closest,
        }
    }

    #[inline]
    fn closest_copy(&self, from: usize, g: usize) -> ProcessorLocation {
        debug_assert!(g != EMPTY_SLOT && g < self.stride);
        match self.closest[from * self.stride + g] {
            NO_COPY => ProcessorLocation::Cloud,
            k => ProcessorLocation::Sbs(k as usize),
        }
    }

    #[inline]
    fn hops(&self, a: usize, b: usize) -> f64 {
        f64::from(self.instance.topology.hops(a, b))
    }

    #[inline]
    fn access_ms(&self, i: usize, j: usize) -> f64 {
        let t = &self.instance.timing;
        t.alpha[i] * t.d_sbs[i * self.instance.topology.sbs_count() + j]
    }

    #[inline]
    fn mbs_ms(&self, i: usize) -> f64 {
        let t = &self.instance.timing;
        t.alpha[i] * t.d_mbs[i]
    }

    /// Processor of the first candidate `g` requested by device `i`.
    pub fn resolve_first_processor(&self, i: usize, g: usize) -> ProcessorLocation {
        match self.instance.topology.nearest(i) {
            None => ProcessorLocation::Cloud,
            Some(entry) => self.closest_copy(entry, g),
        }
    }

    pub fn uplink_first(&self, i: usize, resolved: ProcessorLocation) -> f64 {
        let tau_b = self.instance.timing.tau_b;
        match (self.instance.topology.nearest(i), resolved) {
            (None, _) => self.mbs_ms(i) + tau_b,
            (Some(entry), ProcessorLocation::Cloud) => self.access_ms(i, entry) + tau_b,
            (Some(entry), ProcessorLocation::Sbs(k)) => {
                self.access_ms(i, entry) + self.instance.timing.beta * self.hops(entry, k)
            }
        }
    }

    /// Processor of candidate `g` following a step processed at `prev`.
    pub fn resolve_next_processor(&self, prev: ProcessorLocation, g: usize) -> ProcessorLocation {
        match prev {
            ProcessorLocation::Cloud => ProcessorLocation::Cloud,
            ProcessorLocation::Sbs(p) => self.closest_copy(p, g),
        }
    }

    pub fn uplink_next(&self, prev: ProcessorLocation, resolved: ProcessorLocation) -> f64 {
        match (prev, resolved) {
            (ProcessorLocation::Cloud, _) => 0.0,
            (ProcessorLocation::Sbs(_), ProcessorLocation::Cloud) => self.instance.timing.tau_b,
            (ProcessorLocation::Sbs(p), ProcessorLocation::Sbs(k)) => self.instance.timing.beta * self.hops(p, k),
        }
    }

    /// Return trip from the last processor to device `i`.
    ///
    /// # Panics
    /// If `i` is uncovered but `last` is an SBS; resolution never produces that.
    pub fn downlink_last(&self, i: usize, last: ProcessorLocation) -> f64 {
        let t = &self.instance.timing;
        match last {
            ProcessorLocation::Cloud => t.tau_b + self.mbs_ms(i),
            ProcessorLocation::Sbs(k) => {
                let entry = self
                    .instance
                    .topology
                    .nearest(i)
                    .expect("uncovered device cannot be served by an SBS");
                t.beta * self.hops(k, entry) + self.access_ms(i, entry)
            }
        }
    }

    #[inline]
    pub fn exec_ms(&self, at: ProcessorLocation, g: usize) -> f64 {
        let t = &self.instance.timing;
        let total = self.stride - 1;
        match at {
            ProcessorLocation::Cloud => t.exec_cloud[g - 1],
            ProcessorLocation::Sbs(j) => t.exec_sbs[j * total + g - 1],
        }
    }

    #[inline]
    fn step(&self, i: usize, prev: Option<ProcessorLocation>, g: usize) -> (ProcessorLocation, f64) {
        match prev {
            None => {
                let at = self.resolve_first_processor(i, g);
                (at, self.uplink_first(i, at))
            }
            Some(prev) => {
                let at = self.resolve_next_processor(prev, g);
                (at, self.uplink_next(prev, at))
            }
        }
    }

    pub fn device_response_time(&self, i: usize, scheme: &[Choice]) -> ResponseBreakdown {
        let spec = &self.instance.spec;
        let mut steps = Vec::with_capacity(scheme.len());
        let mut prev = None;
        let mut acc = 0.0;
        for (q, &c) in scheme.iter().enumerate() {
            let g = spec.global(q, usize::from(c));
            let (at, up) = self.step(i, prev, g);
            let exe = self.exec_ms(at, g);
            acc += up + exe;
            steps.push(StepCost {
                uplink_ms: up,
                processor: at,
                exec_ms: exe,
            });
            prev = Some(at);
        }
        let downlink_ms = self.downlink_last(i, prev.expect("scheme is non-empty"));
        ResponseBreakdown {
            steps,
            downlink_ms,
            total_ms: acc + downlink_ms,
        }
    }

    /// Total of [`RoutedPlacement::device_response_time`] without the breakdown.
    #[inline]
    pub fn device_total(&self, i: usize, scheme: &[Choice]) -> f64 {
        let spec = &self.instance.spec;
        let mut prev = None;
        let mut acc = 0.0;
        for (q, &c) in scheme.iter().enumerate() {
            let g = spec.global(q, usize::from(c));
            let (at, up) = self.step(i, prev, g);
            acc += up + self.exec_ms(at, g);
            prev = Some(at);
        }
        acc + self.downlink_last(i, prev.expect("scheme is non-empty"))
    }

    /// `G(x, W) = Σ_i τ(x, W(i))`, ascending device order.
    pub fn sample_objective(&self, batch: &CompositionSample) -> f64 {
        assert_eq!(
            batch.device_count(),
            self.instance.topology.device_count(),
            "batch and topology disagree on device count"
        );
        batch
            .schemes()
            .enumerate()
            .fold(0.0, |acc, (i, scheme)| acc + self.device_total(i, scheme))
    }

    /// `ĝ_R(x) = (1/R) Σ_r G(x, W^r)`, ascending sample order.
    pub fn saa_objective(&self, batches: &[CompositionSample]) -> f64 {
        assert!(!batches.is_empty(), "SAA objective needs at least one sample");
        let sum = batches.iter().fold(0.0, |acc, b| acc + self.sample_objective(b));
        sum / batches.len() as f64
    }

    /// Debug trace: `device,q,processor,uplink_ms,exec_ms` per step, then a
    /// `q = out` row carrying the downlink time in the `uplink_ms` column.
    pub fn write_trace<W: Write>(&self, batch: &CompositionSample, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["device", "q", "processor", "uplink_ms", "exec_ms"])?;
        for (i, scheme) in batch.schemes().enumerate() {
            let b = self.device_response_time(i, scheme);
            for (q, s) in b.steps.iter().enumerate() {
                w.write_record([
                    (i + 1).to_string(),
                    (q + 1).to_string(),
                    s.processor.to_string(),
                    s.uplink_ms.to_string(),
                    s.exec_ms.to_string(),
                ])?;
            }
            let last = b.steps.last().map_or(ProcessorLocation::Cloud, |s| s.processor);
            w.write_record([
                (i + 1).to_string(),
                "out".to_string(),
                last.to_string(),
                b.downlink_ms.to_string(),
                "0".to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
