//! Shared oracles and generators for the integration suites. Everything here
//! is deliberately independent of the concatenation engine: route costs come
//! from an explicitly built layered graph relaxed in topological order, and
//! intra-cluster path costs from permutation brute force.
#![allow(dead_code)] // each test target uses its own subset

use cluvrp_core::hampath::ham_path_bruteforce;
use cluvrp_core::instance::{CostMatrix, Instance, Rounding};
use rand::Rng;

/// Brute-force optimal Hamiltonian-path cost matrices, one per cluster.
pub struct BruteTables {
    pub chat: Vec<Vec<f64>>, // flat lambda x lambda per cluster
}

pub fn brute_tables(inst: &Instance, costs: &CostMatrix) -> BruteTables {
    let chat = inst
        .clusters
        .iter()
        .map(|members| {
            let l = members.len();
            let mut m = vec![f64::INFINITY; l * l];
            if l == 1 {
                m[0] = 0.0;
            } else {
                for i in 0..l {
                    for j in 0..l {
                        if i != j {
                            m[i * l + j] = ham_path_bruteforce(members, costs, i, j);
                        }
                    }
                }
            }
            m
        })
        .collect();
    BruteTables { chat }
}

/// Route cost through an explicitly constructed layered graph: a source
/// depot node, an entry and an exit copy of every customer per cluster, and
/// a sink. Edges are relaxed once in construction (= topological) order.
pub fn layered_route_cost(
    inst: &Instance,
    costs: &CostMatrix,
    tables: &BruteTables,
    clusters: &[usize],
) -> f64 {
    if clusters.is_empty() {
        return 0.0;
    }
    // Node ids: 0 = source; per position t with lambda_t members: entry copies
    // then exit copies; last node = sink.
    let mut offsets = Vec::with_capacity(clusters.len());
    let mut next = 1usize;
    for &cl in clusters {
        let l = inst.clusters[cl].len();
        offsets.push(next);
        next += 2 * l;
    }
    let sink = next;
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();

    for (t, &cl) in clusters.iter().enumerate() {
        let members = &inst.clusters[cl];
        let l = members.len();
        let entry = |i: usize| offsets[t] + i;
        let exit = |j: usize| offsets[t] + l + j;
        if t == 0 {
            for (i, &vi) in members.iter().enumerate() {
                edges.push((0, entry(i), costs.at(0, vi)));
            }
        } else {
            let prev_cl = clusters[t - 1];
            let prev_members = &inst.clusters[prev_cl];
            let pl = prev_members.len();
            for (j, &vj) in prev_members.iter().enumerate() {
                for (i, &vi) in members.iter().enumerate() {
                    edges.push((offsets[t - 1] + pl + j, entry(i), costs.at(vj, vi)));
                }
            }
        }
        let chat = &tables.chat[cl];
        for i in 0..l {
            for j in 0..l {
                let w = if l == 1 { 0.0 } else { chat[i * l + j] };
                if l > 1 && i == j {
                    continue;
                }
                edges.push((entry(i), exit(j), w));
            }
        }
        if t == clusters.len() - 1 {
            for (j, &vj) in members.iter().enumerate() {
                edges.push((exit(j), sink, costs.at(vj, 0)));
            }
        }
    }

    let mut dist = vec![f64::INFINITY; sink + 1];
    dist[0] = 0.0;
    for (u, v, w) in edges {
        let cand = dist[u] + w;
        if cand < dist[v] {
            dist[v] = cand;
        }
    }
    dist[sink]
}

/// Exhaustive optimum: every assignment of clusters to at most m routes,
/// every intra-route cluster order, exact route evaluation via the layered
/// graph. Only sane for a handful of clusters.
pub fn oracle_optimal(inst: &Instance, costs: &CostMatrix, tables: &BruteTables) -> f64 {
    let n_cl = inst.num_clusters();
    let m = inst.fleet;
    let q = inst.capacity as u64;
    assert!(m.pow(n_cl as u32) <= 1 << 20, "oracle size out of range");
    let mut best = f64::INFINITY;
    let mut assign = vec![0usize; n_cl];
    loop {
        // Capacity per route.
        let mut loads = vec![0u64; m];
        for (k, &r) in assign.iter().enumerate() {
            loads[r] += inst.cluster_demand(k);
        }
        if loads.iter().all(|&l| l <= q) {
            let mut total = 0.0;
            for r in 0..m {
                let members: Vec<usize> =
                    (0..n_cl).filter(|&k| assign[k] == r).collect();
                if members.is_empty() {
                    continue;
                }
                total += best_order_cost(inst, costs, tables, &members);
                if total >= best {
                    break;
                }
            }
            if total < best {
                best = total;
            }
        }
        // Next assignment vector in base m.
        let mut pos = 0;
        loop {
            if pos == n_cl {
                return best;
            }
            assign[pos] += 1;
            if assign[pos] < m {
                break;
            }
            assign[pos] = 0;
            pos += 1;
        }
    }
}

fn best_order_cost(
    inst: &Instance,
    costs: &CostMatrix,
    tables: &BruteTables,
    clusters: &[usize],
) -> f64 {
    let mut order = clusters.to_vec();
    let mut best = f64::INFINITY;
    permute_visit(&mut order, 0, &mut |p| {
        let c = layered_route_cost(inst, costs, tables, p);
        if c < best {
            best = c;
        }
    });
    best
}

fn permute_visit(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for t in k..items.len() {
        items.swap(k, t);
        permute_visit(items, k + 1, visit);
        items.swap(k, t);
    }
}

/// Random clustered instance on an integer grid. The capacity is derived
/// from an explicit balanced packing of the clusters onto `m` vehicles, so a
/// feasible solution always exists. With `tight_fleet`, the capacity also
/// forces every feasible solution to use exactly `m` routes. `max_lambda`
/// caps cluster sizes (rejection-sampled) so brute-force oracles stay cheap.
pub fn random_instance_capped(
    rng: &mut impl Rng,
    n: usize,
    n_clusters: usize,
    m: usize,
    tight_fleet: bool,
    max_lambda: usize,
) -> Instance {
    assert!(n_clusters >= 1 && n_clusters <= n);
    loop {
        let mut coords = vec![(0.0, 0.0); 1];
        coords[0] = (rng.gen_range(20..=40) as f64, rng.gen_range(20..=40) as f64);
        let mut demand = vec![0u32];
        for _ in 0..n {
            coords.push((rng.gen_range(0..=60) as f64, rng.gen_range(0..=60) as f64));
            demand.push(rng.gen_range(1..=5));
        }
        // Random partition: shuffle and cut into n_clusters chunks.
        let mut ids: Vec<usize> = (1..=n).collect();
        for i in (1..ids.len()).rev() {
            let j = rng.gen_range(0..=i);
            ids.swap(i, j);
        }
        let mut cuts: Vec<usize> = (1..n).collect();
        for i in (1..cuts.len()).rev() {
            let j = rng.gen_range(0..=i);
            cuts.swap(i, j);
        }
        let mut cut_points: Vec<usize> = cuts.into_iter().take(n_clusters - 1).collect();
        cut_points.sort_unstable();
        let mut clusters = Vec::with_capacity(n_clusters);
        let mut start = 0;
        for &c in &cut_points {
            clusters.push(ids[start..c].to_vec());
            start = c;
        }
        clusters.push(ids[start..].to_vec());
        if clusters.iter().any(|c| c.len() > max_lambda) {
            continue;
        }

        // Balanced first-fit packing: capacity = max bin load guarantees
        // at least this packing is feasible.
        let total: u64 = demand.iter().map(|&d| d as u64).sum();
        let mut bins = vec![0u64; m];
        let mut sizes: Vec<u64> = clusters
            .iter()
            .map(|c| c.iter().map(|&v| demand[v] as u64).sum())
            .collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        for s in sizes {
            let r = (0..m).min_by_key(|&r| bins[r]).unwrap();
            bins[r] += s;
        }
        let lower = *bins.iter().max().unwrap();
        let capacity = if tight_fleet {
            // Need (m-1) * Q < total, i.e. Q < total / (m-1).
            if m < 2 || lower * (m as u64 - 1) >= total {
                continue; // redraw demands/partition
            }
            lower
        } else {
            lower + rng.gen_range(0..=4)
        };
        match Instance::new(
            format!("rand-n{n}-c{n_clusters}-m{m}"),
            coords,
            demand,
            capacity as u32,
            m,
            clusters,
            Rounding::NearestInteger,
        ) {
            Ok(inst) => return inst,
            Err(_) => continue,
        }
    }
}

pub fn random_instance(
    rng: &mut impl Rng,
    n: usize,
    n_clusters: usize,
    m: usize,
    tight_fleet: bool,
) -> Instance {
    random_instance_capped(rng, n, n_clusters, m, tight_fleet, usize::MAX)
}
