//! Exact intra-cluster Hamiltonian-path preprocessing.
//!
//! For every cluster and every ordered endpoint pair (i, j) this computes the
//! cost of the cheapest path that starts at i, ends at j and visits every
//! other cluster member, via Held-Karp style dynamic programming over
//! (subset, last vertex) states. The optimal visit orders are kept so routes
//! can be decoded back to customer sequences.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::instance::{write_instance, CostMatrix, Instance};

pub const DEFAULT_LAMBDA_MAX: usize = 14;

#[derive(Debug, Error)]
pub enum HamPathError {
    #[error("cluster {cluster} has {size} customers, above lambda_max {lambda_max}; heuristic fallback is not supported")]
    ClusterTooLarge {
        cluster: usize,
        size: usize,
        lambda_max: usize,
    },
    #[error("cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Optimal Hamiltonian paths of a single cluster, indexed by the position of
/// the endpoints in `members`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPaths {
    /// Customer ids; defines the local index space.
    pub members: Vec<usize>,
    /// Flat lambda x lambda matrix; `cost[i*lambda+j]` is the optimal path
    /// cost from `members[i]` to `members[j]`. The diagonal is 0 for a
    /// singleton cluster and +inf otherwise.
    pub cost: Vec<f64>,
    /// `order[i*lambda+j]` is the full visit order realizing `cost[i*lambda+j]`.
    pub order: Vec<Vec<usize>>,
}

impl ClusterPaths {
    pub fn lambda(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn cost_at(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.members.len() + j]
    }

    pub fn order_at(&self, i: usize, j: usize) -> &[usize] {
        &self.order[i * self.members.len() + j]
    }
}

/// All clusters' optimal path matrices for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCostTable {
    pub lambda_max: usize,
    pub instance_hash: String,
    /// Wall-clock seconds the table took to compute, preserved through the
    /// cache so preprocessing time can be reported separately.
    pub build_seconds: f64,
    clusters: Vec<ClusterPaths>,
}

impl PathCostTable {
    pub fn build(inst: &Instance, costs: &CostMatrix, lambda_max: usize) -> Result<Self, HamPathError> {
        let started = std::time::Instant::now();
        let mut clusters = Vec::with_capacity(inst.num_clusters());
        for (k, members) in inst.clusters.iter().enumerate() {
            if members.len() > lambda_max {
                return Err(HamPathError::ClusterTooLarge {
                    cluster: k,
                    size: members.len(),
                    lambda_max,
                });
            }
            clusters.push(cluster_ham_paths(members, costs));
        }
        Ok(PathCostTable {
            lambda_max,
            instance_hash: instance_hash(inst),
            build_seconds: started.elapsed().as_secs_f64(),
            clusters,
        })
    }

    pub fn cluster(&self, k: usize) -> &ClusterPaths {
        &self.clusters[k]
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Number of ordered endpoint pairs with finite cost over all clusters.
    pub fn pair_count(&self) -> usize {
        self.clusters
            .iter()
            .map(|c| {
                let l = c.lambda();
                if l == 1 {
                    0
                } else {
                    l * (l - 1)
                }
            })
            .sum()
    }

    pub fn save(&self, path: &Path) -> Result<(), HamPathError> {
        let mut out = String::new();
        writeln!(out, "CLUVRP-HAMPATH 1").unwrap();
        writeln!(out, "HASH {}", self.instance_hash).unwrap();
        writeln!(out, "BUILD_SECONDS {}", self.build_seconds).unwrap();
        writeln!(out, "LAMBDA_MAX {}", self.lambda_max).unwrap();
        writeln!(out, "CLUSTERS {}", self.clusters.len()).unwrap();
        for (k, c) in self.clusters.iter().enumerate() {
            write!(out, "CLUSTER {} {}", k, c.lambda()).unwrap();
            for &v in &c.members {
                write!(out, " {}", v).unwrap();
            }
            out.push('\n');
            let l = c.lambda();
            for i in 0..l {
                for j in 0..l {
                    if i == j && l > 1 {
                        continue;
                    }
                    write!(out, "P {} {} {}", i, j, c.cost_at(i, j)).unwrap();
                    for &v in c.order_at(i, j) {
                        write!(out, " {}", v).unwrap();
                    }
                    out.push('\n');
                }
            }
        }
        writeln!(out, "END").unwrap();
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path, inst: &Instance) -> Result<Self, HamPathError> {
        let text = std::fs::read_to_string(path)?;
        let bad = |msg: &str| HamPathError::Cache(format!("{}: {msg}", path.display()));
        let mut lines = text.lines();
        if lines.next() != Some("CLUVRP-HAMPATH 1") {
            return Err(bad("unknown header or version"));
        }
        let hash_line = lines.next().ok_or_else(|| bad("truncated"))?;
        let hash = hash_line
            .strip_prefix("HASH ")
            .ok_or_else(|| bad("missing HASH"))?
            .to_string();
        let expect = instance_hash(inst);
        if hash != expect {
            return Err(bad("instance hash mismatch; stale cache"));
        }
        let build_seconds: f64 = lines
            .next()
            .and_then(|l| l.strip_prefix("BUILD_SECONDS "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing BUILD_SECONDS"))?;
        let lambda_max: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("LAMBDA_MAX "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing LAMBDA_MAX"))?;
        let count: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("CLUSTERS "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing CLUSTERS"))?;
        if count != inst.num_clusters() {
            return Err(bad("cluster count mismatch"));
        }
        let mut clusters = Vec::with_capacity(count);
        for k in 0..count {
            let head = lines.next().ok_or_else(|| bad("truncated"))?;
            let mut it = head.split_whitespace();
            if it.next() != Some("CLUSTER") {
                return Err(bad("expected CLUSTER"));
            }
            let id: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad CLUSTER id"))?;
            if id != k {
                return Err(bad("out-of-order CLUSTER"));
            }
            let lambda: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad("bad CLUSTER size"))?;
            let members: Vec<usize> = it.map(|t| t.parse().unwrap_or(usize::MAX)).collect();
            if members.len() != lambda || members.iter().any(|&v| v == usize::MAX) {
                return Err(bad("bad CLUSTER members"));
            }
            if members != inst.clusters[k] {
                return Err(bad("cluster membership mismatch"));
            }
            let mut cost = vec![f64::INFINITY; lambda * lambda];
            let mut order: Vec<Vec<usize>> = vec![Vec::new(); lambda * lambda];
            let rows = if lambda == 1 { 1 } else { lambda * (lambda - 1) };
            for _ in 0..rows {
                let line = lines.next().ok_or_else(|| bad("truncated"))?;
                let mut it = line.split_whitespace();
                if it.next() != Some("P") {
                    return Err(bad("expected P record"));
                }
                let i: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad P"))?;
                let j: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad P"))?;
                let c: f64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad P"))?;
                let path: Vec<usize> = it.map(|t| t.parse().unwrap_or(usize::MAX)).collect();
                if i >= lambda || j >= lambda || path.len() != lambda {
                    return Err(bad("bad P record shape"));
                }
                cost[i * lambda + j] = c;
                order[i * lambda + j] = path;
            }
            if lambda == 1 {
                cost[0] = 0.0;
            }
            clusters.push(ClusterPaths { members, cost, order });
        }
        Ok(PathCostTable {
            lambda_max,
            instance_hash: hash,
            build_seconds,
            clusters,
        })
    }
}

/// Hex digest identifying an instance's canonical serialized form.
pub fn instance_hash(inst: &Instance) -> String {
    let text = write_instance(inst).unwrap_or_default();
    let digest = Sha256::digest(text.as_bytes());
    let mut s = String::with_capacity(32);
    for b in digest.iter().take(16) {
        write!(s, "{:02x}", b).unwrap();
    }
    s
}

/// Exact optimal Hamiltonian-path costs and orders for one cluster.
///
/// One Held-Karp run per start vertex over (subset, last) states:
/// O(lambda^2 * 2^lambda) work per start.
pub fn cluster_ham_paths(members: &[usize], costs: &CostMatrix) -> ClusterPaths {
    let l = members.len();
    assert!(l >= 1);
    if l == 1 {
        return ClusterPaths {
            members: members.to_vec(),
            cost: vec![0.0],
            order: vec![vec![members[0]]],
        };
    }
    let full: u32 = (1u32 << l) - 1;
    let c = |a: usize, b: usize| costs.at(members[a], members[b]);
    let mut cost = vec![f64::INFINITY; l * l];
    let mut order: Vec<Vec<usize>> = vec![Vec::new(); l * l];

    let mut dp = vec![f64::INFINITY; (full as usize + 1) * l];
    let mut parent = vec![usize::MAX; (full as usize + 1) * l];
    for start in 0..l {
        dp.fill(f64::INFINITY);
        parent.fill(usize::MAX);
        let smask = 1u32 << start;
        dp[smask as usize * l + start] = 0.0;
        for mask in smask..=full {
            if mask & smask == 0 {
                continue;
            }
            for last in 0..l {
                let cur = dp[mask as usize * l + last];
                if !cur.is_finite() || mask & (1 << last) == 0 {
                    continue;
                }
                for next in 0..l {
                    if mask & (1 << next) != 0 {
                        continue;
                    }
                    let nm = mask | (1 << next);
                    let cand = cur + c(last, next);
                    let slot = nm as usize * l + next;
                    if cand < dp[slot] {
                        dp[slot] = cand;
                        parent[slot] = last;
                    }
                }
            }
        }
        for end in 0..l {
            if end == start {
                continue;
            }
            cost[start * l + end] = dp[full as usize * l + end];
            let mut path = Vec::with_capacity(l);
            let mut mask = full;
            let mut v = end;
            while v != usize::MAX {
                path.push(members[v]);
                let p = parent[mask as usize * l + v];
                mask &= !(1 << v);
                v = p;
            }
            path.reverse();
            debug_assert_eq!(path.len(), l);
            order[start * l + end] = path;
        }
    }
    ClusterPaths {
        members: members.to_vec(),
        cost,
        order,
    }
}

/// Reference oracle: minimum over all interior permutations. Exact but
/// factorial; intended for clusters of at most 9 customers.
pub fn ham_path_bruteforce(members: &[usize], costs: &CostMatrix, i: usize, j: usize) -> f64 {
    let l = members.len();
    assert!(l <= 9, "brute force limited to 9 customers");
    assert!(i < l && j < l);
    if l == 1 {
        return 0.0;
    }
    if i == j {
        return f64::INFINITY;
    }
    let interior: Vec<usize> = (0..l).filter(|&v| v != i && v != j).collect();
    let mut best = f64::INFINITY;
    permute(&mut interior.clone(), 0, &mut |perm| {
        let mut cur = members[i];
        let mut total = 0.0;
        for &p in perm.iter() {
            total += costs.at(cur, members[p]);
            cur = members[p];
        }
        total += costs.at(cur, members[j]);
        if total < best {
            best = total;
        }
    });
    best
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for t in k..items.len() {
        items.swap(k, t);
        permute(items, k + 1, visit);
        items.swap(k, t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CostMatrix, Instance, Rounding};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn euclid_matrix(coords: &[(f64, f64)]) -> CostMatrix {
        CostMatrix::from_fn(coords.len(), |i, j| {
            let (xi, yi) = coords[i];
            let (xj, yj) = coords[j];
            (((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt() + 0.5).floor()
        })
    }

    #[test]
    fn singleton_and_pair() {
        let coords = vec![(0.0, 0.0), (3.0, 4.0), (6.0, 8.0)];
        let costs = euclid_matrix(&coords);
        let single = cluster_ham_paths(&[1], &costs);
        assert_eq!(single.cost, vec![0.0]);
        assert_eq!(single.order_at(0, 0), &[1]);

        let pair = cluster_ham_paths(&[1, 2], &costs);
        assert_eq!(pair.cost_at(0, 1), costs.at(1, 2));
        assert_eq!(pair.cost_at(1, 0), costs.at(1, 2));
        assert!(pair.cost_at(0, 0).is_infinite());
        assert_eq!(pair.order_at(0, 1), &[1, 2]);
    }

    #[test]
    fn three_customers_forced_middle() {
        let coords = vec![(0.0, 0.0), (0.0, 0.0), (10.0, 0.0), (5.0, 1.0)];
        let costs = euclid_matrix(&coords);
        let paths = cluster_ham_paths(&[1, 2, 3], &costs);
        // Path 1 -> 2 must pass through 3.
        assert_eq!(paths.cost_at(0, 1), costs.at(1, 3) + costs.at(3, 2));
        assert_eq!(paths.order_at(0, 1), &[1, 3, 2]);
    }

    #[test]
    fn dp_matches_bruteforce_small_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..40 {
            let l = 2 + (trial % 7); // 2..=8
            let coords: Vec<(f64, f64)> = (0..=l)
                .map(|_| (rng.gen_range(0.0..100.0f64).round(), rng.gen_range(0.0..100.0f64).round()))
                .collect();
            let costs = euclid_matrix(&coords);
            let members: Vec<usize> = (1..=l).collect();
            let paths = cluster_ham_paths(&members, &costs);
            for i in 0..l {
                for j in 0..l {
                    if i == j {
                        continue;
                    }
                    let bf = ham_path_bruteforce(&members, &costs, i, j);
                    assert_eq!(paths.cost_at(i, j), bf, "l={l} i={i} j={j}");
                    // The stored order must realize the cost.
                    let ord = paths.order_at(i, j);
                    assert_eq!(ord[0], members[i]);
                    assert_eq!(*ord.last().unwrap(), members[j]);
                    let sum: f64 = ord.windows(2).map(|w| costs.at(w[0], w[1])).sum();
                    assert_eq!(sum, bf);
                }
            }
        }
    }

    #[test]
    fn table_counts_and_symmetry() {
        let inst = Instance::new(
            "t".into(),
            vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 5.0), (9.0, 2.0), (4.0, 4.0)],
            vec![0, 1, 1, 1, 1, 1],
            10,
            2,
            vec![vec![1, 2, 3], vec![4, 5]],
            Rounding::NearestInteger,
        )
        .unwrap();
        let costs = CostMatrix::from_instance(&inst);
        let table = PathCostTable::build(&inst, &costs, DEFAULT_LAMBDA_MAX).unwrap();
        assert_eq!(table.pair_count(), 3 * 2 + 2 * 1);
        for k in 0..table.num_clusters() {
            let c = table.cluster(k);
            for i in 0..c.lambda() {
                for j in 0..c.lambda() {
                    assert_eq!(c.cost_at(i, j), c.cost_at(j, i));
                }
            }
        }
    }

    #[test]
    fn lambda_max_is_enforced() {
        let members: Vec<usize> = (1..=5).collect();
        let inst = Instance::new(
            "big".into(),
            (0..=5).map(|v| (v as f64, 0.0)).collect(),
            vec![0, 1, 1, 1, 1, 1],
            10,
            1,
            vec![members],
            Rounding::NearestInteger,
        )
        .unwrap();
        let costs = CostMatrix::from_instance(&inst);
        let err = PathCostTable::build(&inst, &costs, 4).unwrap_err();
        assert!(matches!(err, HamPathError::ClusterTooLarge { size: 5, .. }));
    }

    #[test]
    fn cache_roundtrip_and_hash_check() {
        let inst = crate::instance::generate_clustered(&grid(9), 3.0, 3).unwrap();
        let costs = CostMatrix::from_instance(&inst);
        let table = PathCostTable::build(&inst, &costs, DEFAULT_LAMBDA_MAX).unwrap();
        let dir = std::env::temp_dir().join("cluvrp-hampath-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.hampath");
        table.save(&path).unwrap();
        let loaded = PathCostTable::load(&path, &inst).unwrap();
        assert_eq!(table, loaded);

        let other = grid(8);
        let err = PathCostTable::load(&path, &other).unwrap_err();
        assert!(err.to_string().contains("hash mismatch"));
    }

    fn grid(n: usize) -> Instance {
        let mut coords = vec![(0.0, 0.0)];
        let mut demand = vec![0];
        for v in 1..=n {
            coords.push(((v % 4) as f64 * 2.0, (v / 4) as f64 * 2.0));
            demand.push(1);
        }
        let clusters = (1..=n).map(|v| vec![v]).collect();
        Instance::new("g".into(), coords, demand, 100, 2, clusters, Rounding::NearestInteger).unwrap()
    }
}
