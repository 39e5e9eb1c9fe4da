//! Fixtures and independent oracles shared by the integration targets.
//! Nothing here calls the routing code under test.

#![allow(dead_code)]

use redplace::application::{enumerate_schemes, Choice};
use redplace::scenario::{self, ApplicationParams, Scenario, ScenarioParams};
use redplace::topology::{Device, SiteRanges};
use redplace::*;

/// Six SBSs on a 2×3 grid, 1 km apart, radius 300 m.
pub fn f1_topology(device_positions: &[(f64, f64)]) -> HetNetTopology {
    let pos = [(0.0, 0.0), (1000.0, 0.0), (0.0, 1000.0), (2000.0, 0.0), (1000.0, 1000.0), (2000.0, 1000.0)];
    let caps = [2, 4, 2, 1, 3, 2];
    let sbs = pos
        .iter()
        .zip(caps)
        .map(|(&(x, y), capacity)| SbsNode {
            position: Point::new(x, y),
            radius: 300.0,
            capacity,
        })
        .collect();
    let devices = device_positions
        .iter()
        .map(|&(x, y)| Device {
            position: Point::new(x, y),
        })
        .collect();
    let edges: Vec<_> = [(1, 2), (1, 3), (2, 4), (2, 5), (3, 5), (4, 6), (5, 6)]
        .iter()
        .map(|&(a, b)| (a - 1, b - 1))
        .collect();
    HetNetTopology::new(sbs, devices, &edges).unwrap()
}

/// F1 with timing T1: every wireless transfer 1 ms, β = 5 ms, τ_exe = 1 ms,
/// τ_b = 100 ms. Microservices have 2, 1, 2, 2 candidates.
pub fn f1_instance(device_positions: &[(f64, f64)]) -> Instance {
    let topology = f1_topology(device_positions);
    let spec = ApplicationSpec::new(vec![2, 1, 2, 2]).unwrap();
    let timing = TimingParams::uniform(&topology, &spec, 1.0, 5.0, 100.0, 1.0);
    Instance::new(topology, spec, timing).unwrap()
}

/// Global indices c11=1 c12=2 c21=3 c31=4 c32=5 c41=6 c42=7.
pub fn f1_placement() -> PlacementVector {
    PlacementVector::from_slots(vec![vec![1, 3], vec![3, 4, 6, 0], vec![2, 0], vec![0], vec![5, 6, 0], vec![7, 0]])
}

/// Three unit-capacity SBSs, five devices, two microservices with two
/// candidates each: 125 canonical placements.
pub fn tiny_params() -> ScenarioParams {
    ScenarioParams {
        devices: 5,
        sbs: 3,
        area_m: 800.0,
        sites: SiteRanges {
            radius_m: (200.0, 600.0),
            capacity: (1, 1),
        },
        application: ApplicationParams {
            microservices: 2,
            candidates: (2, 2),
        },
        ..ScenarioParams::default()
    }
}

pub fn tiny_scenario(seed: u64) -> Scenario {
    scenario::generate(&tiny_params(), seed).unwrap()
}

/// Every canonical placement: per SBS, every subset of at most `b_j`
/// candidates, written ascending and padded with empties.
pub fn all_placements(capacities: &[usize], total: usize) -> Vec<PlacementVector> {
    fn subsets(total: usize, max: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << total) {
            if (mask.count_ones() as usize) <= max {
                out.push((1..=total).filter(|g| mask >> (g - 1) & 1 == 1).collect());
            }
        }
        out
    }
    let mut acc: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for &b in capacities {
        let options = subsets(total, b);
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |set| {
                    let mut seg = set.clone();
                    seg.resize(b, 0);
                    let mut p = prefix.clone();
                    p.push(seg);
                    p
                })
            })
            .collect();
    }
    acc.into_iter().map(PlacementVector::from_slots).collect()
}

/// Minimum of `f` over all canonical placements; returns (value, argmin).
pub fn exhaustive_min<F: Fn(&PlacementVector) -> f64>(capacities: &[usize], total: usize, f: F) -> (f64, PlacementVector) {
    let mut best: Option<(f64, PlacementVector)> = None;
    for x in all_placements(capacities, total) {
        let v = f(&x);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, x));
        }
    }
    best.expect("at least the empty placement")
}

/// `g(x) = E[G(x, W)]`, summed exactly over every composition scheme.
pub fn exact_objective(instance: &Instance, model: &CompositionModel, x: &PlacementVector) -> f64 {
    let schemes = enumerate_schemes(&instance.spec);
    let probs: Vec<f64> = schemes.iter().map(|s| model.scheme_probability(s).unwrap()).collect();
    (0..instance.topology.device_count())
        .map(|i| {
            schemes
                .iter()
                .zip(&probs)
                .map(|(s, p)| p * oracle_device_time(instance, x, i, s))
                .sum::<f64>()
        })
        .sum()
}

/// All-pairs hop counts by Floyd–Warshall; `u32::MAX` when unreachable.
pub fn floyd_warshall(m: usize, edges: &[(usize, usize)]) -> Vec<Vec<u32>> {
    let inf = u32::MAX / 4;
    let mut d = vec![vec![inf; m]; m];
    for (j, row) in d.iter_mut().enumerate() {
        row[j] = 0;
    }
    for &(a, b) in edges {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..m {
        for a in 0..m {
            for b in 0..m {
                let via = d[a][k] + d[k][b];
                if via < d[a][b] {
                    d[a][b] = via;
                }
            }
        }
    }
    for row in &mut d {
        for v in row.iter_mut() {
            if *v >= inf {
                *v = u32::MAX;
            }
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Sbs(usize),
    Cloud,
}

/// Step-by-step response time straight from the piecewise definitions,
/// scanning slot lists and SBS geometry directly.
pub fn oracle_trace(instance: &Instance, x: &PlacementVector, i: usize, scheme: &[Choice]) -> (Vec<(Node, f64, f64)>, f64, f64) {
    let topo = &instance.topology;
    let t = &instance.timing;
    let m = topo.sbs_count();
    let total: usize = instance.spec.candidate_counts().iter().sum();
    let hops = floyd_warshall(m, topo.edges());
    let dev = topo.devices()[i].position;

    let mut entry: Option<(usize, f64)> = None;
    for (j, s) in topo.sbs().iter().enumerate() {
        let dist = ((s.position.x - dev.x).powi(2) + (s.position.y - dev.y).powi(2)).sqrt();
        if dist <= s.radius && entry.is_none_or(|(_, best)| dist < best) {
            entry = Some((j, dist));
        }
    }
    let entry = entry.map(|(j, _)| j);
    let hosts = |g: usize| -> Vec<usize> { (0..m).filter(|&j| x.slots()[j].contains(&g)).collect() };
    let closest = |from: usize, set: &[usize]| -> usize {
        let mut best = set[0];
        for &j in set {
            if hops[from][j] < hops[from][best] {
                best = j;
            }
        }
        best
    };
    let access = |j: usize| t.alpha[i] * t.d_sbs[i * m + j];
    let mbs = t.alpha[i] * t.d_mbs[i];
    let exec = |at: Node, g: usize| match at {
        Node::Cloud => t.exec_cloud[g - 1],
        Node::Sbs(j) => t.exec_sbs[j * total + g - 1],
    };

    let mut offset = 0;
    let mut steps = Vec::new();
    let mut prev: Option<Node> = None;
    for (q, &c) in scheme.iter().enumerate() {
        let g = offset + usize::from(c) + 1;
        offset += instance.spec.candidate_counts()[q];
        let d = hosts(g);
        let (at, up) = match prev {
            None => match entry {
                None => (Node::Cloud, mbs + t.tau_b),
                Some(e) if d.is_empty() => (Node::Cloud, access(e) + t.tau_b),
                Some(e) if d.contains(&e) => (Node::Sbs(e), access(e)),
                Some(e) => {
                    let k = closest(e, &d);
                    (Node::Sbs(k), access(e) + t.beta * f64::from(hops[e][k]))
                }
            },
            Some(Node::Cloud) => (Node::Cloud, 0.0),
            Some(Node::Sbs(_)) if d.is_empty() => (Node::Cloud, t.tau_b),
            Some(Node::Sbs(p)) if d.contains(&p) => (Node::Sbs(p), 0.0),
            Some(Node::Sbs(p)) => {
                let k = closest(p, &d);
                (Node::Sbs(k), t.beta * f64::from(hops[p][k]))
            }
        };
        steps.push((at, up, exec(at, g)));
        prev = Some(at);
    }
    let down = match prev.expect("non-empty scheme") {
        Node::Cloud => t.tau_b + mbs,
        Node::Sbs(k) => {
            let e = entry.expect("an SBS processor implies coverage");
            t.beta * f64::from(hops[k][e]) + access(e)
        }
    };
    let total_ms = steps.iter().fold(0.0, |acc, s| acc + (s.1 + s.2)) + down;
    (steps, down, total_ms)
}

pub fn oracle_device_time(instance: &Instance, x: &PlacementVector, i: usize, scheme: &[Choice]) -> f64 {
    oracle_trace(instance, x, i, scheme).2
}

pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}
