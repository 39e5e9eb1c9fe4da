//! The heterogeneous access network: small-cell base stations (SBSs) joined
//! by an undirected wired graph, mobile devices attached to their nearest
//! covering SBS, and the macro base station as the universal fallback.
//!
//! SBS `j` is `sbs()[j]` and device `i` is `devices()[i]` (zero-based).
//! Exported files use one-based ids.

use std::collections::{BTreeSet, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, StreamKey};

/// Hop count marking an unreachable pair; never present in a built topology.
pub const UNREACHABLE: u32 = u32::MAX;

const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbsNode {
    pub position: Point,
    /// Coverage radius in meters.
    pub radius: f64,
    /// Maximum number of candidate instances the attached site can host.
    pub capacity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub position: Point,
}

/// Knobs for [`build_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    /// Neighbors linked per SBS before repair.
    pub k_nearest: usize,
    /// Upper bound on the hop diameter.
    pub max_diameter: u32,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            k_nearest: 3,
            max_diameter: 4,
        }
    }
}

/// Ranges used when SBS attributes are drawn at random.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteRanges {
    pub radius_m: (f64, f64),
    pub capacity: (usize, usize),
}

impl Default for SiteRanges {
    fn default() -> Self {
        Self {
            radius_m: (200.0, 600.0),
            capacity: (3, 5),
        }
    }
}

impl SiteRanges {
    fn validate(&self) -> Result<()> {
        let (r0, r1) = self.radius_m;
        if !(r0 > 0.0 && r0 <= r1 && r1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "radius range [{r0}, {r1}] must be positive and ordered"
            )));
        }
        if self.capacity.0 > self.capacity.1 {
            return Err(Error::InvalidParameter(format!(
                "capacity range [{}, {}] is not ordered",
                self.capacity.0, self.capacity.1
            )));
        }
        Ok(())
    }

    /// Radii come from `rng`; capacities from their own stream of `seed`, so
    /// a capacity sweep leaves the geometry untouched.
    fn draw_sites<R: Rng>(&self, positions: Vec<Point>, rng: &mut R, seed: u64) -> Vec<SbsNode> {
        let (r0, r1) = self.radius_m;
        let (c0, c1) = self.capacity;
        let mut cap_rng = rng::stream(seed, StreamKey::Capacity);
        positions
            .into_iter()
            .map(|position| SbsNode {
                position,
                radius: if r0 == r1 { r0 } else { rng.random_range(r0..=r1) },
                capacity: cap_rng.random_range(c0..=c1),
            })
            .collect()
    }
}

/// Immutable network snapshot with precomputed hop matrix and attachments.
#[derive(Debug, Clone, PartialEq)]
pub struct HetNetTopology {
    sbs: Vec<SbsNode>,
    devices: Vec<Device>,
    edges: Vec<(usize, usize)>,
    hops: Vec<u32>,
    coverage: Vec<Vec<usize>>,
    nearest: Vec<Option<usize>>,
}

impl HetNetTopology {
    /// Assembles a topology from explicit parts. Edges are undirected pairs of
    /// zero-based SBS indices; duplicates are merged.
    pub fn new(sbs: Vec<SbsNode>, devices: Vec<Device>, edges: &[(usize, usize)]) -> Result<Self> {
        let m = sbs.len();
        if m == 0 {
            return Err(Error::InvalidParameter("topology needs at least one SBS".into()));
        }
        for (j, node) in sbs.iter().enumerate() {
            if !(node.radius > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "SBS {} has non-positive radius {}",
                    j + 1,
                    node.radius
                )));
            }
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= m || b >= m {
                return Err(Error::Domain(format!("edge ({}, {}) references unknown SBS", a + 1, b + 1)));
            }
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop on SBS {}", a + 1)));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let hops = bfs_hops(m, &edges);
        if hops.contains(&UNREACHABLE) {
            return Err(Error::InvalidParameter("SBS graph is not connected".into()));
        }

        let mut coverage = Vec::with_capacity(devices.len());
        let mut nearest = Vec::with_capacity(devices.len());
        for device in &devices {
            let covering: Vec<usize> = (0..m)
                .filter(|&j| device.position.distance(&sbs[j].position) <= sbs[j].radius)
                .collect();
            // Strict comparison keeps the smallest index on distance ties.
            let mut best: Option<(usize, f64)> = None;
            for &j in &covering {
                let d = device.position.distance(&sbs[j].position);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
            nearest.push(best.map(|(j, _)| j));
            coverage.push(covering);
        }

        Ok(Self {
            sbs,
            devices,
            edges,
            hops,
            coverage,
            nearest,
        })
    }

    pub fn sbs(&self) -> &[SbsNode] {
        &self.sbs
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn sbs_count(&self) -> usize {
        self.sbs.len()
    }

    pub fn device_count(&self) -> usize {
        self.devices.len()
    }

    /// Sorted undirected edge list, `a < b`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn capacities(&self) -> Vec<usize> {
        self.sbs.iter().map(|s| s.capacity).collect()
    }

    /// Hop count between two SBSs, checked.
    pub fn hop_count(&self, j1: usize, j2: usize) -> Result<u32> {
        let m = self.sbs.len();
        if j1 >= m || j2 >= m {
            return Err(Error::Domain(format!("SBS pair ({j1}, {j2}) outside 0..{m}")));
        }
        Ok(self.hops(j1, j2))
    }

    #[inline]
    pub fn hops(&self, j1: usize, j2: usize) -> u32 {
        self.hops[j1 * self.sbs.len() + j2]
    }

    /// Row-major M×M hop matrix.
    pub fn hop_matrix(&self) -> &[u32] {
        &self.hops
    }

    pub fn diameter(&self) -> u32 {
        self.hops.iter().copied().max().unwrap_or(0)
    }

    /// SBSs whose signal covers device `i`, ascending.
    pub fn coverage(&self, i: usize) -> &[usize] {
        &self.coverage[i]
    }

    /// Nearest covering SBS of device `i`, if any.
    #[inline]
    pub fn nearest(&self, i: usize) -> Option<usize> {
        self.nearest[i]
    }

    pub fn covered_fraction(&self) -> f64 {
        if self.devices.is_empty() {
            return 1.0;
        }
        self.nearest.iter().filter(|n| n.is_some()).count() as f64 / self.devices.len() as f64
    }

    /// Writes the reproducibility snapshot: SBS rows under the
    /// `sbs_id,x_m,y_m,radius_m,capacity` header, then `edge,src,dst` and
    /// `device,id,x_m,y_m` rows.
    pub fn write_snapshot<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(["sbs_id", "x_m", "y_m", "radius_m", "capacity"])?;
        for (j, s) in self.sbs.iter().enumerate() {
            w.write_record([
                (j + 1).to_string(),
                s.position.x.to_string(),
                s.position.y.to_string(),
                s.radius.to_string(),
                s.capacity.to_string(),
            ])?;
        }
        for &(a, b) in &self.edges {
            w.write_record(["edge".to_string(), (a + 1).to_string(), (b + 1).to_string()])?;
        }
        for (i, d) in self.devices.iter().enumerate() {
            w.write_record([
                "device".to_string(),
                (i + 1).to_string(),
                d.position.x.to_string(),
                d.position.y.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_snapshot(&self, path: &Path) -> Result<()> {
        self.write_snapshot(File::create(path)?)
    }

    /// Reads a file produced by [`HetNetTopology::write_snapshot`].
    pub fn load_snapshot(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .has_headers(true)
            .from_path(path)?;
        let parse_err = |line: u64, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut sbs = Vec::new();
        let mut devices = Vec::new();
        let mut edges = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |k: usize| -> Result<&str> {
                record
                    .get(k)
                    .ok_or_else(|| parse_err(line, format!("missing field {}", k + 1)))
            };
            let num = |k: usize| -> Result<f64> {
                let f = field(k)?;
                f.parse().map_err(|_| parse_err(line, format!("bad number '{f}'")))
            };
            let id = |k: usize, expected: usize| -> Result<usize> {
                let f = field(k)?;
                let v: usize = f.parse().map_err(|_| parse_err(line, format!("bad id '{f}'")))?;
                if v == 0 || (expected > 0 && v != expected) {
                    return Err(parse_err(line, format!("unexpected id {v}")));
                }
                Ok(v - 1)
            };
            match field(0)? {
                "edge" => edges.push((id(1, 0)?, id(2, 0)?)),
                "device" => {
                    id(1, devices.len() + 1)?;
                    devices.push(Device {
                        position: Point::new(num(2)?, num(3)?),
                    });
                }
                _ => {
                    id(0, sbs.len() + 1)?;
                    let cap = field(4)?;
                    sbs.push(SbsNode {
                        position: Point::new(num(1)?, num(2)?),
                        radius: num(3)?,
                        capacity: cap
                            .parse()
                            .map_err(|_| parse_err(line, format!("bad capacity '{cap}'")))?,
                    });
                }
            }
        }
        Self::new(sbs, devices, &edges)
    }
}

/// All-pairs hop counts by one BFS per source. Row-major M×M.
pub fn bfs_hops(m: usize, edges: &[(usize, usize)]) -> Vec<u32> {
    let adjacency = adjacency(m, edges);
    let mut hops = vec![UNREACHABLE; m * m];
    let mut queue = VecDeque::with_capacity(m);
    for src in 0..m {
        let row = &mut hops[src * m..(src + 1) * m];
        row[src] = 0;
        queue.clear();
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let next = row[u] + 1;
            for &v in &adjacency[u] {
                if row[v] == UNREACHABLE {
                    row[v] = next;
                    queue.push_back(v);
                }
            }
        }
    }
    hops
}

fn adjacency(m: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Links every SBS to its `k_nearest` Euclidean neighbors, then repeatedly
/// joins the closest pair across components until connected and the
/// farthest-apart pair until the hop diameter is within `max_diameter`.
///
/// Ties are broken by distance, then by index, so the result depends only on
/// the positions.
pub fn build_graph(sbs: &[SbsNode], params: GraphParams) -> Result<Vec<(usize, usize)>> {
    if params.max_diameter == 0 && sbs.len() > 1 {
        return Err(Error::InvalidParameter("max_diameter must be at least 1".into()));
    }
    let m = sbs.len();
    let dist = |a: usize, b: usize| sbs[a].position.distance(&sbs[b].position);
    let mut edges = BTreeSet::new();
    for a in 0..m {
        let mut others: Vec<usize> = (0..m).filter(|&b| b != a).collect();
        others.sort_by(|&x, &y| dist(a, x).total_cmp(&dist(a, y)).then(x.cmp(&y)));
        for &b in others.iter().take(params.k_nearest) {
            edges.insert((a.min(b), a.max(b)));
        }
    }

    loop {
        let list: Vec<_> = edges.iter().copied().collect();
        let hops = bfs_hops(m, &list);
        let mut best: Option<(u32, f64, usize, usize)> = None;
        let disconnected = hops.contains(&UNREACHABLE);
        for a in 0..m {
            for b in (a + 1)..m {
                let h = hops[a * m + b];
                let wanted = if disconnected { h == UNREACHABLE } else { h > params.max_diameter };
                if !wanted {
                    continue;
                }
                let d = dist(a, b);
                let better = match best {
                    None => true,
                    // Bridging components: shortest link wins. Repairing the
                    // diameter: most hop-distant pair wins, then shortest link.
                    Some((bh, bd, _, _)) => {
                        if disconnected {
                            d < bd
                        } else {
                            h > bh || (h == bh && d < bd)
                        }
                    }
                };
                if better {
                    best = Some((h, d, a, b));
                }
            }
        }
        match best {
            Some((_, _, a, b)) => {
                edges.insert((a, b));
            }
            None => return Ok(edges.into_iter().collect()),
        }
    }
}

/// Parameters for [`synth_generate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub devices: usize,
    pub sbs: usize,
    /// Side of the square deployment area, meters.
    pub area_m: f64,
    pub sites: SiteRanges,
    pub graph: GraphParams,
}

/// Uniformly scattered SBSs and devices over a square area.
pub fn synth_generate(params: &SynthParams, seed: u64) -> Result<HetNetTopology> {
    if params.devices == 0 || params.sbs == 0 {
        return Err(Error::InvalidParameter("synthetic topology needs n, m >= 1".into()));
    }
    if !(params.area_m > 0.0) {
        return Err(Error::InvalidParameter("area must be positive".into()));
    }
    params.sites.validate()?;
    let mut rng = rng::stream(seed, StreamKey::Instance);
    let side = params.area_m;
    let point = |rng: &mut rng::StreamRng| Point::new(rng.random_range(0.0..side), rng.random_range(0.0..side));
    let sbs_pos: Vec<Point> = (0..params.sbs).map(|_| point(&mut rng)).collect();
    let devices: Vec<Device> = (0..params.devices).map(|_| Device { position: point(&mut rng) }).collect();
    let sbs = params.sites.draw_sites(sbs_pos, &mut rng, seed);
    let edges = build_graph(&sbs, params.graph)?;
    HetNetTopology::new(sbs, devices, &edges)
}

/// Parameters for [`load_geolocation_csv`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoParams {
    pub devices: usize,
    pub sbs: usize,
    pub sites: SiteRanges,
    pub graph: GraphParams,
}

#[derive(Debug, Clone, Copy)]
enum GeoKind {
    Sbs,
    User,
}

/// Loads an `id,kind,lat,lon` file, samples `sbs` base stations and
/// `devices` users, and projects them to meters around the dataset centroid.
pub fn load_geolocation_csv(path: &Path, params: &GeoParams, seed: u64) -> Result<HetNetTopology> {
    params.sites.validate()?;
    let file = File::open(path)?;
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = BufReader::new(file).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    let header: Vec<String> = header.split(',').map(|s| s.trim().to_ascii_lowercase()).collect();
    if header != ["id", "kind", "lat", "lon"] {
        return Err(parse_err(1, format!("expected header 'id,kind,lat,lon', found '{}'", header.join(","))));
    }

    let mut rows: Vec<(GeoKind, f64, f64)> = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let line_no = k as u64 + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(line_no, format!("expected 4 fields, found {}", fields.len())));
        }
        let kind = match fields[1] {
            "sbs" => GeoKind::Sbs,
            "user" => GeoKind::User,
            other => return Err(parse_err(line_no, format!("unknown kind '{other}'"))),
        };
        let lat: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad latitude '{}'", fields[2])))?;
        let lon: f64 = fields[3]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad longitude '{}'", fields[3])))?;
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(parse_err(line_no, format!("coordinates ({lat}, {lon}) out of range")));
        }
        rows.push((kind, lat, lon));
    }

    let sbs_rows: Vec<usize> = (0..rows.len()).filter(|&r| matches!(rows[r].0, GeoKind::Sbs)).collect();
    let user_rows: Vec<usize> = (0..rows.len()).filter(|&r| matches!(rows[r].0, GeoKind::User)).collect();
    if sbs_rows.len() < params.sbs || params.sbs == 0 {
        return Err(Error::Cardinality {
            kind: "sbs",
            requested: params.sbs,
            available: sbs_rows.len(),
        });
    }
    if user_rows.len() < params.devices {
        return Err(Error::Cardinality {
            kind: "user",
            requested: params.devices,
            available: user_rows.len(),
        });
    }

    let count = rows.len() as f64;
    let lat0 = rows.iter().map(|r| r.1).sum::<f64>() / count;
    let lon0 = rows.iter().map(|r| r.2).sum::<f64>() / count;
    let cos0 = lat0.to_radians().cos();
    let project = |r: usize| {
        let (_, lat, lon) = rows[r];
        Point::new(
            EARTH_RADIUS_M * (lon - lon0).to_radians() * cos0,
            EARTH_RADIUS_M * (lat - lat0).to_radians(),
        )
    };

    let mut rng = rng::stream(seed, StreamKey::Instance);
    let pick = |pool: &[usize], k: usize, rng: &mut rng::StreamRng| {
        let mut chosen: Vec<usize> = index::sample(rng, pool.len(), k).into_iter().map(|s| pool[s]).collect();
        chosen.sort_unstable();
        chosen
    };
    let chosen_sbs = pick(&sbs_rows, params.sbs, &mut rng);
    let chosen_users = pick(&user_rows, params.devices, &mut rng);
    let sbs = params
        .sites
        .draw_sites(chosen_sbs.into_iter().map(project).collect(), &mut rng, seed);
    let devices = chosen_users
        .into_iter()
        .map(|r| Device { position: project(r) })
        .collect();
    let edges = build_graph(&sbs, params.graph)?;
    HetNetTopology::new(sbs, devices, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn floyd_warshall(m: usize, edges: &[(usize, usize)]) -> Vec<u32> {
        let inf = u32::MAX / 4;
        let mut d = vec![inf; m * m];
        for j in 0..m {
            d[j * m + j] = 0;
        }
        for &(a, b) in edges {
            d[a * m + b] = 1;
            d[b * m + a] = 1;
        }
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let via = d[i * m + k] + d[k * m + j];
                    if via < d[i * m + j] {
                        d[i * m + j] = via;
                    }
                }
            }
        }
        d
    }

    fn site(x: f64, y: f64) -> SbsNode {
        SbsNode {
            position: Point::new(x, y),
            radius: 300.0,
            capacity: 2,
        }
    }

    fn f1_edges() -> Vec<(usize, usize)> {
        [(1, 2), (1, 3), (2, 4), (2, 5), (3, 5), (4, 6), (5, 6)]
            .iter()
            .map(|&(a, b)| (a - 1, b - 1))
            .collect()
    }

    fn f1_sites() -> Vec<SbsNode> {
        vec![
            site(0.0, 0.0),
            site(1000.0, 0.0),
            site(0.0, 1000.0),
            site(2000.0, 0.0),
            site(1000.0, 1000.0),
            site(2000.0, 1000.0),
        ]
    }

    #[test]
    fn f1_hop_counts() {
        let topo = HetNetTopology::new(f1_sites(), vec![], &f1_edges()).unwrap();
        assert_eq!(topo.hop_count(0, 0).unwrap(), 0);
        assert_eq!(topo.hop_count(1, 5).unwrap(), 2);
        assert_eq!(topo.hop_count(5, 0).unwrap(), 3);
        assert_eq!(topo.diameter(), 3);
        assert!(topo.hop_count(0, 6).is_err());
    }

    #[test]
    fn single_sbs_graph_is_empty() {
        let edges = build_graph(&[site(0.0, 0.0)], GraphParams::default()).unwrap();
        assert!(edges.is_empty());
        let topo = HetNetTopology::new(vec![site(0.0, 0.0)], vec![], &edges).unwrap();
        assert_eq!(topo.diameter(), 0);
    }

    #[test]
    fn built_graph_on_f1_positions_is_bounded() {
        let sites = f1_sites();
        let edges = build_graph(&sites, GraphParams::default()).unwrap();
        let fw = floyd_warshall(sites.len(), &edges);
        assert_eq!(fw, bfs_hops(sites.len(), &edges));
        assert!(fw.iter().all(|&h| h <= 4));
    }

    #[test]
    fn diameter_repair_on_a_line() {
        // A long line with k=1 starts as a path of diameter 9.
        let sites: Vec<_> = (0..10).map(|k| site(k as f64 * 100.0, 0.0)).collect();
        let params = GraphParams {
            k_nearest: 1,
            max_diameter: 4,
        };
        let edges = build_graph(&sites, params).unwrap();
        let fw = floyd_warshall(sites.len(), &edges);
        assert!(fw.iter().all(|&h| h <= 4), "{fw:?}");
    }

    #[test]
    fn disconnected_clusters_get_bridged() {
        let mut sites: Vec<_> = (0..4).map(|k| site(k as f64, 0.0)).collect();
        sites.extend((0..4).map(|k| site(10_000.0 + k as f64, 0.0)));
        let edges = build_graph(&sites, GraphParams::default()).unwrap();
        let topo = HetNetTopology::new(sites, vec![], &edges).unwrap();
        assert!(topo.diameter() <= 4);
    }

    #[test]
    fn rejects_disconnected_explicit_graph() {
        let err = HetNetTopology::new(vec![site(0.0, 0.0), site(1.0, 0.0)], vec![], &[]).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn coverage_and_nearest_tie_rule() {
        let sites = vec![site(0.0, 0.0), site(0.0, 0.0)];
        let devices = vec![
            Device {
                position: Point::new(0.0, 0.0),
            },
            Device {
                position: Point::new(5000.0, 0.0),
            },
        ];
        let topo = HetNetTopology::new(sites, devices, &[(0, 1)]).unwrap();
        assert_eq!(topo.coverage(0), &[0, 1]);
        assert_eq!(topo.nearest(0), Some(0));
        assert!(topo.coverage(1).is_empty());
        assert_eq!(topo.nearest(1), None);
    }

    #[test]
    fn coverage_boundary_is_inclusive() {
        let devices = vec![Device {
            position: Point::new(300.0, 0.0),
        }];
        let topo = HetNetTopology::new(vec![site(0.0, 0.0)], devices, &[]).unwrap();
        assert_eq!(topo.nearest(0), Some(0));
    }

    fn synth(n: usize, m: usize) -> SynthParams {
        SynthParams {
            devices: n,
            sbs: m,
            area_m: 2000.0,
            sites: SiteRanges::default(),
            graph: GraphParams::default(),
        }
    }

    #[test]
    fn synth_single_device_inside_radius() {
        let params = SynthParams {
            area_m: 100.0,
            ..synth(1, 1)
        };
        let topo = synth_generate(&params, 1).unwrap();
        assert_eq!(topo.coverage(0), &[0]);
    }

    #[test]
    fn synth_snapshot_is_byte_identical() {
        let params = synth(50, 12);
        let mut a = Vec::new();
        let mut b = Vec::new();
        synth_generate(&params, 9).unwrap().write_snapshot(&mut a).unwrap();
        synth_generate(&params, 9).unwrap().write_snapshot(&mut b).unwrap();
        assert_eq!(a, b);
        let mut c = Vec::new();
        synth_generate(&params, 10).unwrap().write_snapshot(&mut c).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn snapshot_round_trip() {
        let topo = synth_generate(&synth(30, 8), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("topo.csv");
        topo.save_snapshot(&path).unwrap();
        assert_eq!(HetNetTopology::load_snapshot(&path).unwrap(), topo);
    }

    #[test]
    fn synth_default_scale_coverage() {
        let topo = synth_generate(&synth(500, 40), 5).unwrap();
        let frac = topo.covered_fraction();
        assert!(frac > 0.9, "coverage fraction {frac}");
        assert!(topo.diameter() <= 4);
    }

    fn write_file(dir: &Path, body: &str) -> std::path::PathBuf {
        let path = dir.join("geo.csv");
        let mut f = File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    fn geo(n: usize, m: usize, radius: f64) -> GeoParams {
        GeoParams {
            devices: n,
            sbs: m,
            sites: SiteRanges {
                radius_m: (radius, radius),
                capacity: (3, 5),
            },
            graph: GraphParams::default(),
        }
    }

    #[test]
    fn geolocation_coincident_points() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "id,kind,lat,lon\n1,sbs,-37.81,144.96\n2,sbs,-37.81,144.96\n3,user,-37.81,144.96\n",
        );
        let topo = load_geolocation_csv(&path, &geo(1, 2, 200.0), 0).unwrap();
        assert_eq!(topo.coverage(0), &[0, 1]);
        assert_eq!(topo.nearest(0), Some(0));
    }

    #[test]
    fn geolocation_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "id,kind,lat,lon\n1,sbs,-37.81,144.96\n2,user,abc,144.96\n");
        match load_geolocation_csv(&path, &geo(1, 1, 200.0), 0).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let path = write_file(dir.path(), "id,kind,lat,lon\n1,sbs,-37.81,144.96\n2,user,-37.81,144.96\n");
        assert!(matches!(
            load_geolocation_csv(&path, &geo(2, 1, 200.0), 0).unwrap_err(),
            Error::Cardinality { kind: "user", .. }
        ));
        let path = write_file(dir.path(), "id,type,lat,lon\n");
        assert!(matches!(
            load_geolocation_csv(&path, &geo(0, 1, 200.0), 0).unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn geolocation_cbd_scale() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("id,kind,lat,lon\n");
        let mut rng = rng::stream(1, StreamKey::Custom(0));
        for k in 0..700 {
            let kind = if k < 100 { "sbs" } else { "user" };
            let lat = -37.8136 + rng.random_range(-0.008..0.008);
            let lon = 144.9631 + rng.random_range(-0.01..0.01);
            body.push_str(&format!("{},{kind},{lat},{lon}\n", k + 1));
        }
        let path = write_file(dir.path(), &body);
        let params = GeoParams {
            devices: 500,
            sbs: 40,
            sites: SiteRanges::default(),
            graph: GraphParams::default(),
        };
        let a = load_geolocation_csv(&path, &params, 11).unwrap();
        assert_eq!(a.sbs_count(), 40);
        assert_eq!(a.device_count(), 500);
        assert!(a.diameter() <= 4);
        assert!(a.sbs().iter().all(|s| (3..=5).contains(&s.capacity)));
        let b = load_geolocation_csv(&path, &params, 11).unwrap();
        assert_eq!(a, b);
    }
}
