//! Local-search move families.
//!
//! Cluster-level moves (relocations, swaps, 2-opt, 2-opt*, or-opt) treat
//! whole clusters as units and are priced through the subsequence
//! concatenation engine. Vertex-level counterparts work on plain customer
//! routes and drive the M-penalty solver. Endpoint and intra-cluster
//! searches refine the customer order inside clusters of a decoded route.

pub mod cluster;
pub mod intra;
pub mod vertex;

use crate::instance::{CostMatrix, Instance};

/// Threshold below which a delta counts as a strict improvement. Integer
/// cost deltas are at least 1, real-valued ones far above ulp noise.
pub const IMPROVE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Relocate1,
    Relocate2,
    Swap11,
    Swap21,
    Swap22,
    TwoOptStar,
    OrOpt,
    TwoOpt,
    IntraSwap,
    EndpointMove,
    IntraClusterMove,
}

/// Inter-route cluster neighborhoods of the cluster-level search.
pub const NLC_KINDS: [MoveKind; 6] = [
    MoveKind::Relocate1,
    MoveKind::Relocate2,
    MoveKind::Swap11,
    MoveKind::Swap21,
    MoveKind::Swap22,
    MoveKind::TwoOptStar,
];

/// Intra-route neighborhoods applied on the cluster sequence of one route.
pub const INTRA_ROUTE_KINDS: [MoveKind; 3] = [MoveKind::OrOpt, MoveKind::TwoOpt, MoveKind::IntraSwap];

/// One evaluated move. Position semantics depend on the kind:
/// segment 1 is `routes[r1][i..i+len1]`, segment 2 (swaps) is
/// `routes[r2][j..j+len2]`; for relocations and or-opt `j` is the insertion
/// gap, for 2-opt `[i, j]` is the reversed span, for 2-opt* `i`/`j` are the
/// first positions of the exchanged tails. `rev1`/`rev2` insert a segment
/// reversed. Endpoint and intra-cluster records are informational: they
/// describe customer-level moves already applied by their search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    pub kind: MoveKind,
    pub r1: usize,
    pub r2: usize,
    pub i: usize,
    pub len1: usize,
    pub j: usize,
    pub len2: usize,
    pub rev1: bool,
    pub rev2: bool,
    pub delta: f64,
}

impl Move {
    pub(crate) fn proto(kind: MoveKind, r1: usize, r2: usize) -> Self {
        Move {
            kind,
            r1,
            r2,
            i: 0,
            len1: 0,
            j: 0,
            len2: 0,
            rev1: false,
            rev2: false,
            delta: 0.0,
        }
    }
}

/// Adds `m_value` to every edge that links two clusters or a cluster with
/// the depot; intra-cluster edges and the diagonal are untouched. Any
/// cluster-feasible solution using all `m` vehicles carries exactly `m + N`
/// penalized edges, so its true cost is the penalized cost minus
/// `m_value * (m + N)`.
pub fn m_penalty_costs(inst: &Instance, costs: &CostMatrix, m_value: f64) -> CostMatrix {
    CostMatrix::from_fn(costs.dim(), |i, j| {
        if i == j {
            return 0.0;
        }
        let crossing = if i == 0 || j == 0 {
            true
        } else {
            inst.cluster_of(i) != inst.cluster_of(j)
        };
        costs.at(i, j) + if crossing { m_value } else { 0.0 }
    })
}

/// Penalty large enough that dropping a single penalized edge always beats
/// any detour: `n * max edge cost + 1`.
pub fn choose_m(inst: &Instance, costs: &CostMatrix) -> f64 {
    inst.n() as f64 * costs.max_cost() + 1.0
}

/// Number of depot-touching or cluster-crossing edges in a set of customer
/// routes (empty routes contribute none).
pub fn count_penalized_edges(inst: &Instance, routes: &[Vec<usize>]) -> usize {
    let mut count = 0;
    for route in routes {
        if route.is_empty() {
            continue;
        }
        count += 2; // depot out and back
        for w in route.windows(2) {
            if inst.cluster_of(w[0]) != inst.cluster_of(w[1]) {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Rounding;

    fn inst() -> Instance {
        Instance::new(
            "m".into(),
            vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (10.0, 0.0), (11.0, 0.0)],
            vec![0, 1, 1, 1, 1],
            4,
            2,
            vec![vec![1, 2], vec![3, 4]],
            Rounding::NearestInteger,
        )
        .unwrap()
    }

    #[test]
    fn penalty_applies_to_crossing_edges_only() {
        let i = inst();
        let c = CostMatrix::from_instance(&i);
        let p = m_penalty_costs(&i, &c, 100.0);
        assert_eq!(p.at(1, 2), c.at(1, 2)); // intra-cluster
        assert_eq!(p.at(0, 1), c.at(0, 1) + 100.0); // depot edge
        assert_eq!(p.at(2, 3), c.at(2, 3) + 100.0); // cluster crossing
        assert_eq!(p.at(1, 1), 0.0);
    }

    #[test]
    fn feasible_solution_cost_shift_is_m_times_m_plus_n() {
        let i = inst();
        let c = CostMatrix::from_instance(&i);
        let m_value = choose_m(&i, &c);
        let p = m_penalty_costs(&i, &c, m_value);
        let routes = vec![vec![1, 2], vec![3, 4]];
        let sum = |mat: &CostMatrix| -> f64 {
            routes
                .iter()
                .map(|r| {
                    let mut s = mat.at(0, r[0]);
                    for w in r.windows(2) {
                        s += mat.at(w[0], w[1]);
                    }
                    s + mat.at(*r.last().unwrap(), 0)
                })
                .sum()
        };
        let expected_edges = (i.fleet + i.num_clusters()) as f64;
        assert_eq!(sum(&p), sum(&c) + m_value * expected_edges);
        assert_eq!(count_penalized_edges(&i, &routes), i.fleet + i.num_clusters());
    }

    #[test]
    fn choose_m_bound() {
        let i = inst();
        let c = CostMatrix::from_instance(&i);
        let m = choose_m(&i, &c);
        assert_eq!(m, 4.0 * c.max_cost() + 1.0);
        // Strictly exceeds the cost of any single tour over all vertices.
        assert!(m > c.max_cost() * (i.n() as f64 + 1.0) - c.max_cost());
    }

    #[test]
    fn choose_m_unit_square_example() {
        // 20 customers in a 100x100 box: the longest edge is the diagonal,
        // nint(sqrt(2)*100) = 141, so M = 20*141 + 1 = 2821.
        let mut coords = vec![(0.0, 0.0), (100.0, 100.0)];
        let mut demand = vec![0, 1];
        for v in 2..=20u32 {
            coords.push((f64::from(v), 0.0));
            demand.push(1);
        }
        let clusters = (1..=20).map(|v| vec![v]).collect();
        let i = Instance::new("sq".into(), coords, demand, 30, 2, clusters, Rounding::NearestInteger)
            .unwrap();
        let c = CostMatrix::from_instance(&i);
        assert_eq!(c.max_cost(), 141.0);
        assert_eq!(choose_m(&i, &c), 2821.0);
    }
}
