//! CluVRP instance model: clustered customers, capacities, edge costs,
//! TSPLIB-style file parsing/writing, and cluster generation from plain
//! CVRP instances.
//!
//! Vertex indexing is internal: `0` is the depot, customers are `1..=n`.
//! Instance files use 1-based TSPLIB node ids, so file id = internal id + 1
//! (the depot is node 1 in a file).

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// How Euclidean edge costs are rounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    /// TSPLIB EUC_2D: round to the nearest integer.
    NearestInteger,
    /// Plain Euclidean distance, no rounding.
    ExactReal,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("cluster generation failed: {0}")]
    Generate(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A CluVRP instance. Immutable after construction; cheap to share.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    /// Coordinates for vertices `0..=n`; index 0 is the depot.
    pub coords: Vec<(f64, f64)>,
    /// Demands for vertices `0..=n`; `demand[0] == 0`.
    pub demand: Vec<u32>,
    /// Vehicle capacity Q.
    pub capacity: u32,
    /// Fleet size m.
    pub fleet: usize,
    /// Disjoint, nonempty customer clusters partitioning `1..=n`.
    pub clusters: Vec<Vec<usize>>,
    pub rounding: Rounding,
    /// `cluster_of[v]` for customer v; `usize::MAX` for the depot.
    cluster_of: Vec<usize>,
}

impl Instance {
    pub fn new(
        name: String,
        coords: Vec<(f64, f64)>,
        demand: Vec<u32>,
        capacity: u32,
        fleet: usize,
        clusters: Vec<Vec<usize>>,
        rounding: Rounding,
    ) -> Result<Self, InstanceError> {
        let cluster_of = validate_parts(&coords, &demand, capacity, fleet, &clusters)?;
        Ok(Instance {
            name,
            coords,
            demand,
            capacity,
            fleet,
            clusters,
            rounding,
            cluster_of,
        })
    }

    /// Number of customers (depot excluded).
    pub fn n(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Cluster index of customer `v` (panics for the depot).
    pub fn cluster_of(&self, v: usize) -> usize {
        debug_assert!(v >= 1 && v <= self.n());
        self.cluster_of[v]
    }

    /// Total demand of cluster `k`.
    pub fn cluster_demand(&self, k: usize) -> u64 {
        self.clusters[k].iter().map(|&v| self.demand[v] as u64).sum()
    }

    pub fn total_demand(&self) -> u64 {
        self.demand.iter().map(|&q| q as u64).sum()
    }

    /// Euclidean cost between vertices under the instance rounding mode.
    pub fn edge_cost(&self, i: usize, j: usize) -> f64 {
        let (xi, yi) = self.coords[i];
        let (xj, yj) = self.coords[j];
        let d = ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt();
        match self.rounding {
            Rounding::NearestInteger => (d + 0.5).floor(),
            Rounding::ExactReal => d,
        }
    }

    /// Re-checks all structural invariants (useful after manual field edits).
    pub fn validate(&self) -> Result<(), InstanceError> {
        validate_parts(
            &self.coords,
            &self.demand,
            self.capacity,
            self.fleet,
            &self.clusters,
        )
        .map(|_| ())
    }

    pub fn from_path(path: &Path) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path)?;
        parse_instance(&text)
    }
}

fn validate_parts(
    coords: &[(f64, f64)],
    demand: &[u32],
    capacity: u32,
    fleet: usize,
    clusters: &[Vec<usize>],
) -> Result<Vec<usize>, InstanceError> {
    let invalid = |msg: String| InstanceError::Invalid(msg);
    if coords.is_empty() || coords.len() != demand.len() {
        return Err(invalid("coords/demand length mismatch or empty".into()));
    }
    let n = coords.len() - 1;
    if n == 0 {
        return Err(invalid("instance has no customers".into()));
    }
    if demand[0] != 0 {
        return Err(invalid("depot demand must be 0".into()));
    }
    if capacity == 0 {
        return Err(invalid("capacity must be positive".into()));
    }
    if fleet == 0 {
        return Err(invalid("fleet must be positive".into()));
    }
    for v in 1..=n {
        if demand[v] == 0 {
            return Err(invalid(format!("customer {v} has demand 0")));
        }
    }
    if clusters.is_empty() {
        return Err(invalid("cluster list is empty".into()));
    }
    let mut cluster_of = vec![usize::MAX; n + 1];
    for (k, members) in clusters.iter().enumerate() {
        if members.is_empty() {
            return Err(invalid(format!("cluster {k} is empty")));
        }
        let mut load = 0u64;
        for &v in members {
            if v == 0 {
                return Err(invalid("depot listed in a cluster".into()));
            }
            if v > n {
                return Err(invalid(format!("cluster {k} references unknown vertex {v}")));
            }
            if cluster_of[v] != usize::MAX {
                return Err(invalid(format!(
                    "duplicate cluster membership: customer {v} in clusters {} and {k}",
                    cluster_of[v]
                )));
            }
            cluster_of[v] = k;
            load += demand[v] as u64;
        }
        if load > capacity as u64 {
            return Err(invalid(format!(
                "cluster {k} demand {load} exceeds capacity {capacity}"
            )));
        }
    }
    if let Some(v) = (1..=n).find(|&v| cluster_of[v] == usize::MAX) {
        return Err(invalid(format!("customer {v} belongs to no cluster")));
    }
    Ok(cluster_of)
}

/// Dense symmetric edge-cost matrix over vertices `0..=n`.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    dim: usize,
    c: Vec<f64>,
}

impl CostMatrix {
    pub fn from_instance(inst: &Instance) -> Self {
        let dim = inst.coords.len();
        let mut c = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in (i + 1)..dim {
                let d = inst.edge_cost(i, j);
                c[i * dim + j] = d;
                c[j * dim + i] = d;
            }
        }
        CostMatrix { dim, c }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut c = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                c[i * dim + j] = f(i, j);
            }
        }
        CostMatrix { dim, c }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.dim + j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_cost(&self) -> f64 {
        self.c.iter().cloned().fold(0.0, f64::max)
    }

    /// Mean of the off-diagonal upper-triangle entries.
    pub fn mean_cost(&self) -> f64 {
        let mut sum = 0.0;
        let mut cnt = 0usize;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                sum += self.at(i, j);
                cnt += 1;
            }
        }
        if cnt == 0 {
            0.0
        } else {
            sum / cnt as f64
        }
    }
}

/// Parses the documented TSPLIB-style CluVRP format.
///
/// A file without a `GVRP_SET_SECTION` is read as a plain CVRP: every
/// customer becomes a singleton cluster.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let err = |line: usize, msg: &str| InstanceError::Parse {
        line,
        msg: msg.to_string(),
    };

    let mut name = String::new();
    let mut dimension: Option<usize> = None;
    let mut capacity: Option<u32> = None;
    let mut vehicles: Option<usize> = None;
    let mut rounding = Rounding::NearestInteger;
    let mut coords: Vec<Option<(f64, f64)>> = Vec::new();
    let mut demand: Vec<Option<u32>> = Vec::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut cluster_lines: Vec<usize> = Vec::new();
    let mut seen_coords = false;
    let mut seen_demand = false;

    #[derive(PartialEq)]
    enum Section {
        Header,
        Coords,
        Demands,
        Sets,
        Done,
    }
    let mut section = Section::Header;

    for (idx, raw) in text.lines().enumerate() {
        let lno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            section = Section::Done;
            continue;
        }
        match section {
            Section::Done => return Err(err(lno, "content after EOF")),
            Section::Header => {
                if line == "NODE_COORD_SECTION" {
                    let dim = dimension.ok_or_else(|| err(lno, "DIMENSION must precede NODE_COORD_SECTION"))?;
                    coords = vec![None; dim];
                    demand = vec![None; dim];
                    section = Section::Coords;
                    seen_coords = true;
                    continue;
                }
                let (key, value) = line
                    .split_once(':')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| err(lno, "expected `KEY : value` header line"))?;
                match key {
                    "NAME" => name = value.to_string(),
                    "COMMENT" | "TYPE" => {}
                    "DIMENSION" => {
                        dimension = Some(
                            value
                                .parse::<usize>()
                                .map_err(|_| err(lno, "DIMENSION is not an integer"))?,
                        );
                        if dimension == Some(0) {
                            return Err(err(lno, "DIMENSION must be positive"));
                        }
                    }
                    "CAPACITY" => {
                        capacity = Some(
                            value
                                .parse::<u32>()
                                .map_err(|_| err(lno, "CAPACITY is not a positive integer"))?,
                        )
                    }
                    "VEHICLES" => {
                        vehicles = Some(
                            value
                                .parse::<usize>()
                                .map_err(|_| err(lno, "VEHICLES is not a positive integer"))?,
                        )
                    }
                    "EDGE_WEIGHT_TYPE" => {
                        rounding = match value {
                            "EUC_2D" => Rounding::NearestInteger,
                            "EUC_2D_EXACT" => Rounding::ExactReal,
                            other => {
                                return Err(err(
                                    lno,
                                    &format!("unsupported EDGE_WEIGHT_TYPE `{other}`"),
                                ))
                            }
                        }
                    }
                    other => return Err(err(lno, &format!("unknown header `{other}`"))),
                }
            }
            Section::Coords => {
                if line == "DEMAND_SECTION" {
                    section = Section::Demands;
                    seen_demand = true;
                    continue;
                }
                let mut it = line.split_whitespace();
                let id: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(lno, "malformed coordinate line"))?;
                let x: f64 = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(lno, "malformed coordinate line"))?;
                let y: f64 = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(lno, "malformed coordinate line"))?;
                if id == 0 || id > coords.len() {
                    return Err(err(lno, "coordinate node id out of range"));
                }
                if coords[id - 1].is_some() {
                    return Err(err(lno, "duplicate coordinate node id"));
                }
                coords[id - 1] = Some((x, y));
            }
            Section::Demands => {
                if line == "GVRP_SET_SECTION" {
                    section = Section::Sets;
                    continue;
                }
                let mut it = line.split_whitespace();
                let id: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(lno, "malformed demand line"))?;
                let q: i64 = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(lno, "malformed demand line"))?;
                if id == 0 || id > demand.len() {
                    return Err(err(lno, "demand node id out of range"));
                }
                if id == 1 {
                    if q != 0 {
                        return Err(err(lno, "depot (node 1) must have demand 0"));
                    }
                } else if q <= 0 {
                    return Err(err(lno, "customer demand must be positive"));
                }
                if demand[id - 1].is_some() {
                    return Err(err(lno, "duplicate demand node id"));
                }
                demand[id - 1] = Some(q as u32);
            }
            Section::Sets => {
                let mut it = line.split_whitespace();
                let _set_id: i64 = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(lno, "malformed GVRP set line"))?;
                let mut members = Vec::new();
                let mut terminated = false;
                for tok in it {
                    let v: i64 = tok
                        .parse()
                        .map_err(|_| err(lno, "malformed GVRP set line"))?;
                    if v == -1 {
                        terminated = true;
                        break;
                    }
                    if v < 2 {
                        return Err(err(lno, "GVRP set member must be a customer node id >= 2"));
                    }
                    members.push(v as usize - 1); // to internal id
                }
                if !terminated {
                    return Err(err(lno, "GVRP set line not terminated by -1"));
                }
                if members.is_empty() {
                    return Err(err(lno, "empty GVRP set"));
                }
                clusters.push(members);
                cluster_lines.push(lno);
            }
        }
    }

    if !seen_coords {
        return Err(err(0, "missing NODE_COORD_SECTION"));
    }
    if !seen_demand {
        return Err(err(0, "missing DEMAND_SECTION"));
    }
    let dim = dimension.unwrap();
    let capacity = capacity.ok_or_else(|| err(0, "missing CAPACITY"))?;
    let vehicles = vehicles.ok_or_else(|| err(0, "missing VEHICLES"))?;
    let coords: Vec<(f64, f64)> = coords
        .into_iter()
        .enumerate()
        .map(|(i, c)| c.ok_or_else(|| err(0, &format!("missing coordinates for node {}", i + 1))))
        .collect::<Result<_, _>>()?;
    let demand: Vec<u32> = demand
        .into_iter()
        .enumerate()
        .map(|(i, q)| q.ok_or_else(|| err(0, &format!("missing demand for node {}", i + 1))))
        .collect::<Result<_, _>>()?;

    // Plain CVRP file: singleton clusters.
    if clusters.is_empty() {
        clusters = (1..dim).map(|v| vec![v]).collect();
        cluster_lines = vec![0; clusters.len()];
    }

    // Map structural violations back to the offending set line where possible.
    let mut seen = vec![usize::MAX; dim];
    for (k, members) in clusters.iter().enumerate() {
        let mut load = 0u64;
        for &v in members {
            if v >= dim {
                return Err(err(cluster_lines[k], "GVRP set references unknown node id"));
            }
            if seen[v] != usize::MAX {
                return Err(err(
                    cluster_lines[k],
                    &format!("duplicate cluster membership for node {}", v + 1),
                ));
            }
            seen[v] = k;
            load += demand[v] as u64;
        }
        if load > capacity as u64 {
            return Err(err(
                cluster_lines[k],
                &format!("cluster demand {load} exceeds capacity {capacity}"),
            ));
        }
    }

    Instance::new(name, coords, demand, capacity, vehicles, clusters, rounding)
}

/// Serializes an instance in the canonical format; exact round-trip with
/// [`parse_instance`]. Refuses structurally invalid instances.
pub fn write_instance(inst: &Instance) -> Result<String, InstanceError> {
    inst.validate()?;
    let mut out = String::new();
    let dim = inst.coords.len();
    writeln!(out, "NAME : {}", inst.name).unwrap();
    writeln!(out, "DIMENSION : {}", dim).unwrap();
    writeln!(out, "CAPACITY : {}", inst.capacity).unwrap();
    writeln!(out, "VEHICLES : {}", inst.fleet).unwrap();
    let ewt = match inst.rounding {
        Rounding::NearestInteger => "EUC_2D",
        Rounding::ExactReal => "EUC_2D_EXACT",
    };
    writeln!(out, "EDGE_WEIGHT_TYPE : {}", ewt).unwrap();
    writeln!(out, "NODE_COORD_SECTION").unwrap();
    for (i, (x, y)) in inst.coords.iter().enumerate() {
        writeln!(out, "{} {} {}", i + 1, x, y).unwrap();
    }
    writeln!(out, "DEMAND_SECTION").unwrap();
    for (i, q) in inst.demand.iter().enumerate() {
        writeln!(out, "{} {}", i + 1, q).unwrap();
    }
    writeln!(out, "GVRP_SET_SECTION").unwrap();
    for (k, members) in inst.clusters.iter().enumerate() {
        write!(out, "{}", k + 1).unwrap();
        for &v in members {
            write!(out, " {}", v + 1).unwrap();
        }
        writeln!(out, " -1").unwrap();
    }
    writeln!(out, "EOF").unwrap();
    Ok(out)
}

/// Regroups the customers of a CVRP-like instance into `N` geographically
/// coherent clusters of target mean size `theta`.
///
/// `N = min(n, ceil((n+1)/theta))`: the count includes the depot among the
/// vertices, which reproduces the cluster counts of the large adapted
/// benchmark sets (e.g. 560 customers at theta=5 gives 113 clusters).
/// Seed customers are chosen by max-min dispersion, every customer joins its
/// nearest seed, and overloaded clusters are repaired by moving their
/// outermost members to the nearest cluster with spare capacity.
pub fn generate_clustered(cvrp: &Instance, theta: f64, seed: u64) -> Result<Instance, InstanceError> {
    if theta < 1.0 {
        return Err(InstanceError::Generate("theta must be >= 1".into()));
    }
    let n = cvrp.n();
    let target = ((n + 1) as f64 / theta).ceil() as usize;
    let num = target.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    if num == n {
        // Singleton clusters; nothing to optimize.
        let clusters: Vec<Vec<usize>> = (1..=n).map(|v| vec![v]).collect();
        return finish_generated(cvrp, clusters, theta);
    }

    let dist = |a: usize, b: usize| cvrp.edge_cost(a, b);

    // Max-min dispersion seeds: random first pick, then farthest-from-chosen.
    let first = *(1..=n).collect::<Vec<_>>().choose(&mut rng).unwrap();
    let mut seeds = vec![first];
    let mut min_d: Vec<f64> = (0..=n).map(|v| if v == 0 { 0.0 } else { dist(v, first) }).collect();
    while seeds.len() < num {
        let mut best = 0usize;
        let mut best_d = f64::NEG_INFINITY;
        for v in 1..=n {
            if seeds.contains(&v) {
                continue;
            }
            if min_d[v] > best_d {
                best_d = min_d[v];
                best = v;
            }
        }
        seeds.push(best);
        for v in 1..=n {
            min_d[v] = min_d[v].min(dist(v, best));
        }
    }

    // Nearest-seed assignment (ties to the lowest seed index).
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); num];
    for v in 1..=n {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (k, &s) in seeds.iter().enumerate() {
            let d = dist(v, s);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        clusters[best].push(v);
    }
    // Seed choice guarantees each seed's own cluster is nonempty.

    // Capacity repair: move the outermost member of an overloaded cluster to
    // the nearest cluster that can absorb it.
    let q = |v: usize| cvrp.demand[v] as u64;
    let cap = cvrp.capacity as u64;
    for v in 1..=n {
        if q(v) > cap {
            return Err(InstanceError::Generate(format!(
                "customer {v} demand exceeds vehicle capacity"
            )));
        }
    }
    let load = |c: &Vec<usize>| c.iter().map(|&v| q(v)).sum::<u64>();
    loop {
        let over = (0..num)
            .filter(|&k| load(&clusters[k]) > cap)
            .max_by_key(|&k| load(&clusters[k]));
        let Some(k) = over else { break };
        // Outermost member first: farthest from the cluster seed.
        let mut members: Vec<usize> = clusters[k].clone();
        members.sort_by(|&a, &b| {
            dist(b, seeds[k])
                .partial_cmp(&dist(a, seeds[k]))
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut moved = false;
        'candidates: for v in members {
            if clusters[k].len() == 1 {
                break;
            }
            // Nearest receiving cluster with room.
            let mut order: Vec<usize> = (0..num).filter(|&t| t != k).collect();
            order.sort_by(|&a, &b| {
                dist(v, seeds[a])
                    .partial_cmp(&dist(v, seeds[b]))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            for t in order {
                if load(&clusters[t]) + q(v) <= cap {
                    clusters[k].retain(|&u| u != v);
                    clusters[t].push(v);
                    moved = true;
                    break 'candidates;
                }
            }
        }
        if !moved {
            return Err(InstanceError::Generate(
                "no feasible partition: capacity repair is stuck".into(),
            ));
        }
    }

    clusters.retain(|c| !c.is_empty());
    finish_generated(cvrp, clusters, theta)
}

fn finish_generated(
    cvrp: &Instance,
    mut clusters: Vec<Vec<usize>>,
    theta: f64,
) -> Result<Instance, InstanceError> {
    for c in clusters.iter_mut() {
        c.sort_unstable();
    }
    clusters.sort_by_key(|c| c[0]);
    let name = format!("{}-t{}", cvrp.name, theta);
    Instance::new(
        name,
        cvrp.coords.clone(),
        cvrp.demand.clone(),
        cvrp.capacity,
        cvrp.fleet,
        clusters,
        cvrp.rounding,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_instance() -> Instance {
        Instance::new(
            "toy".into(),
            vec![(0.0, 0.0), (3.0, 4.0), (6.0, 0.0), (0.0, 5.0), (1.0, 1.0)],
            vec![0, 2, 3, 4, 1],
            10,
            2,
            vec![vec![1, 4], vec![2], vec![3]],
            Rounding::NearestInteger,
        )
        .unwrap()
    }

    #[test]
    fn edge_cost_examples() {
        let inst = small_instance();
        assert_eq!(inst.edge_cost(1, 1), 0.0);
        assert_eq!(inst.edge_cost(0, 1), 5.0); // 3-4-5 triangle
        let mut exact = small_instance();
        exact.rounding = Rounding::ExactReal;
        assert_eq!(exact.edge_cost(0, 4), 2.0_f64.sqrt());
        assert_eq!(inst.edge_cost(0, 4), 1.0); // nint(sqrt 2)
        assert_eq!(inst.edge_cost(2, 3), inst.edge_cost(3, 2));
    }

    #[test]
    fn rejects_duplicate_membership() {
        let err = Instance::new(
            "bad".into(),
            vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)],
            vec![0, 1, 1],
            5,
            1,
            vec![vec![1, 2], vec![2]],
            Rounding::NearestInteger,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate cluster membership"));
    }

    #[test]
    fn rejects_overfull_cluster_and_zero_demand() {
        let err = Instance::new(
            "bad".into(),
            vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)],
            vec![0, 4, 4],
            5,
            1,
            vec![vec![1, 2]],
            Rounding::NearestInteger,
        )
        .unwrap_err();
        assert!(err.to_string().contains("exceeds capacity"));

        let err = Instance::new(
            "bad".into(),
            vec![(0.0, 0.0), (1.0, 0.0)],
            vec![0, 0],
            5,
            1,
            vec![vec![1]],
            Rounding::NearestInteger,
        )
        .unwrap_err();
        assert!(err.to_string().contains("demand 0"));
    }

    #[test]
    fn roundtrip_identity() {
        let inst = small_instance();
        let text = write_instance(&inst).unwrap();
        let back = parse_instance(&text).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn write_refuses_invalid() {
        let mut inst = small_instance();
        inst.clusters.clear();
        assert!(write_instance(&inst).is_err());
    }

    #[test]
    fn parse_reports_duplicate_membership_line() {
        let text = "NAME : x\nDIMENSION : 4\nCAPACITY : 10\nVEHICLES : 2\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1 0\n3 2 0\n4 3 0\nDEMAND_SECTION\n1 0\n2 1\n3 1\n4 1\nGVRP_SET_SECTION\n1 2 3 -1\n2 3 4 -1\nEOF\n";
        let err = parse_instance(text).unwrap_err();
        let msg = err.to_string();
        // Node 3 is first claimed on line 17; the second claim on line 18 errs.
        assert!(msg.contains("line 18"), "{msg}");
        assert!(msg.contains("duplicate cluster membership"), "{msg}");
    }

    #[test]
    fn parse_cvrp_without_sets_gives_singletons() {
        let text = "NAME : p\nDIMENSION : 3\nCAPACITY : 5\nVEHICLES : 1\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1 0\n3 0 1\nDEMAND_SECTION\n1 0\n2 2\n3 2\nEOF\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.clusters, vec![vec![1], vec![2]]);
    }

    #[test]
    fn generate_theta_one_is_singletons_and_deterministic() {
        let base = cvrp_grid(12, 20);
        let a = generate_clustered(&base, 1.0, 9).unwrap();
        assert_eq!(a.num_clusters(), 12);
        assert!(a.clusters.iter().all(|c| c.len() == 1));
        let b = generate_clustered(&base, 3.0, 5).unwrap();
        let c = generate_clustered(&base, 3.0, 5).unwrap();
        assert_eq!(b.clusters, c.clusters);
        let d = generate_clustered(&base, 3.0, 6).unwrap();
        // Different seed may or may not differ, but both must be valid partitions.
        d.validate().unwrap();
        b.validate().unwrap();
    }

    #[test]
    fn generate_cluster_count_convention() {
        // 560 customers at theta=5 must give 113 clusters (depot counted),
        // and the serialized file carries one GVRP set line per cluster.
        let base = cvrp_grid(560, 4000);
        let g = generate_clustered(&base, 5.0, 1).unwrap();
        assert_eq!(g.num_clusters(), 113);
        let text = write_instance(&g).unwrap();
        let set_lines = text
            .lines()
            .skip_while(|l| *l != "GVRP_SET_SECTION")
            .skip(1)
            .take_while(|l| *l != "EOF")
            .count();
        assert_eq!(set_lines, 113);
    }

    #[test]
    fn parse_benchmark_shaped_file() {
        // 101 customers in 34 clusters served by 4 vehicles, the shape of
        // the classic 3-per-cluster adaptation of the 101-customer set.
        let n = 101;
        let mut text = String::new();
        text.push_str("NAME : cmt101-t3\n");
        text.push_str(&format!("DIMENSION : {}\n", n + 1));
        text.push_str("CAPACITY : 60\nVEHICLES : 4\nEDGE_WEIGHT_TYPE : EUC_2D\n");
        text.push_str("NODE_COORD_SECTION\n");
        for id in 1..=(n + 1) {
            text.push_str(&format!("{} {} {}\n", id, id % 13, id % 7));
        }
        text.push_str("DEMAND_SECTION\n1 0\n");
        for id in 2..=(n + 1) {
            text.push_str(&format!("{} 1\n", id));
        }
        text.push_str("GVRP_SET_SECTION\n");
        for set in 0..34 {
            let lo = 2 + set * 3;
            let hi = (lo + 2).min(n + 1);
            text.push_str(&format!("{}", set + 1));
            for id in lo..=hi {
                text.push_str(&format!(" {}", id));
            }
            text.push_str(" -1\n");
        }
        text.push_str("EOF\n");
        let inst = parse_instance(&text).unwrap();
        assert_eq!(inst.n(), 101);
        assert_eq!(inst.num_clusters(), 34);
        assert_eq!(inst.fleet, 4);
    }

    pub(crate) fn cvrp_grid(n: usize, capacity: u32) -> Instance {
        let mut coords = vec![(0.0, 0.0)];
        let mut demand = vec![0u32];
        for v in 1..=n {
            let x = (v % 25) as f64 * 3.0;
            let y = (v / 25) as f64 * 3.0;
            coords.push((x, y));
            demand.push(1 + (v % 5) as u32);
        }
        let clusters = (1..=n).map(|v| vec![v]).collect();
        Instance::new("grid".into(), coords, demand, capacity, 4, clusters, Rounding::NearestInteger)
            .unwrap()
    }
}
