//! Customer-level refinement inside the clusters of a decoded route.
//!
//! Both searches keep the cluster visit order fixed and only reorder
//! customers within a cluster's span: the endpoint variant restricts itself
//! to moves touching the customer currently served first or last in its
//! cluster, the full variant tries every position. First-improvement
//! descent, repeated until no move improves.

use crate::instance::{CostMatrix, Instance};

use super::{Move, MoveKind, IMPROVE_EPS};

/// Relocate/2-opt/swap descent restricted to spans' first/last customers.
/// Returns the (non-positive) total delta and the applied move records.
pub fn endpoints_search(
    inst: &Instance,
    costs: &CostMatrix,
    route: &mut Vec<usize>,
    route_idx: usize,
) -> (f64, Vec<Move>) {
    descend(inst, costs, route, route_idx, true)
}

/// Full relocate/2-opt/swap descent within each cluster span.
pub fn intra_cluster_search(
    inst: &Instance,
    costs: &CostMatrix,
    route: &mut Vec<usize>,
    route_idx: usize,
) -> (f64, Vec<Move>) {
    descend(inst, costs, route, route_idx, false)
}

fn spans(inst: &Instance, route: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for p in 1..=route.len() {
        if p == route.len() || inst.cluster_of(route[p]) != inst.cluster_of(route[start]) {
            out.push((start, p - 1));
            start = p;
        }
    }
    out
}

fn descend(
    inst: &Instance,
    costs: &CostMatrix,
    route: &mut Vec<usize>,
    route_idx: usize,
    endpoints_only: bool,
) -> (f64, Vec<Move>) {
    let kind = if endpoints_only {
        MoveKind::EndpointMove
    } else {
        MoveKind::IntraClusterMove
    };
    let mut total = 0.0;
    let mut applied = Vec::new();
    if route.is_empty() {
        return (total, applied);
    }
    let blocks = spans(inst, route);
    loop {
        let mut improved = false;
        for &(a, b) in &blocks {
            if b == a {
                continue;
            }
            // Keep sweeping one span until it is locally optimal.
            loop {
                match first_improving(costs, route, a, b, endpoints_only) {
                    Some((delta, mv_i, mv_j, op)) => {
                        apply(route, mv_i, mv_j, op);
                        total += delta;
                        improved = true;
                        let mut rec = Move::proto(kind, route_idx, route_idx);
                        rec.i = mv_i;
                        rec.j = mv_j;
                        rec.len1 = op as usize;
                        rec.delta = delta;
                        applied.push(rec);
                    }
                    None => break,
                }
            }
        }
        if !improved {
            break;
        }
    }
    (total, applied)
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Op {
    Relocate = 1,
    Reverse = 2,
    Swap = 3,
}

fn apply(route: &mut [usize], i: usize, j: usize, op: Op) {
    match op {
        Op::Relocate => {
            // Move customer at i to gap j (original coordinates, j not in {i, i+1}).
            let v = route[i];
            if j < i {
                route.copy_within(j..i, j + 1);
                route[j] = v;
            } else {
                // j > i + 1: gap shifts left by one after removal.
                route.copy_within(i + 1..j, i);
                route[j - 1] = v;
            }
        }
        Op::Reverse => route[i..=j].reverse(),
        Op::Swap => route.swap(i, j),
    }
}

fn first_improving(
    costs: &CostMatrix,
    route: &[usize],
    a: usize,
    b: usize,
    endpoints_only: bool,
) -> Option<(f64, usize, usize, Op)> {
    let l = route.len();
    let at = |p: isize| -> usize {
        if p < 0 || p as usize >= l {
            0
        } else {
            route[p as usize]
        }
    };
    let c = |x: usize, y: usize| costs.at(x, y);

    // Relocate one customer within the span.
    for p in a..=b {
        if endpoints_only && p != a && p != b {
            continue;
        }
        let pp = at(p as isize - 1);
        let ps = at(p as isize + 1);
        let removal = c(pp, ps) - c(pp, route[p]) - c(route[p], ps);
        for g in a..=(b + 1) {
            if g == p || g == p + 1 {
                continue;
            }
            let gp = at(g as isize - 1);
            let gs = at(g as isize);
            let insertion = c(gp, route[p]) + c(route[p], gs) - c(gp, gs);
            let delta = removal + insertion;
            if delta < -IMPROVE_EPS {
                return Some((delta, p, g, Op::Relocate));
            }
        }
    }
    // Reverse a sub-span.
    for p in a..b {
        for q in (p + 1)..=b {
            if endpoints_only && p != a && q != b {
                continue;
            }
            let pp = at(p as isize - 1);
            let qs = at(q as isize + 1);
            let delta = c(pp, route[q]) + c(route[p], qs) - c(pp, route[p]) - c(route[q], qs);
            if delta < -IMPROVE_EPS {
                return Some((delta, p, q, Op::Reverse));
            }
        }
    }
    // Swap two customers.
    for p in a..b {
        for q in (p + 1)..=b {
            if endpoints_only && p != a && q != b {
                continue;
            }
            let pp = at(p as isize - 1);
            let ps = at(p as isize + 1);
            let qp = at(q as isize - 1);
            let qs = at(q as isize + 1);
            let delta = if q == p + 1 {
                c(pp, route[q]) + c(route[p], qs) - c(pp, route[p]) - c(route[q], qs)
            } else {
                c(pp, route[q]) + c(route[q], ps) + c(qp, route[p]) + c(route[p], qs)
                    - c(pp, route[p])
                    - c(route[p], ps)
                    - c(qp, route[q])
                    - c(route[q], qs)
            };
            if delta < -IMPROVE_EPS {
                return Some((delta, p, q, Op::Swap));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Rounding;

    fn line_instance() -> (Instance, CostMatrix) {
        // Customers on a line; cluster 0 = {1,2,3}, cluster 1 = {4}.
        let inst = Instance::new(
            "line".into(),
            vec![
                (0.0, 0.0),
                (10.0, 0.0),
                (20.0, 0.0),
                (30.0, 0.0),
                (50.0, 0.0),
            ],
            vec![0, 1, 1, 1, 1],
            10,
            1,
            vec![vec![1, 2, 3], vec![4]],
            Rounding::NearestInteger,
        )
        .unwrap();
        let costs = CostMatrix::from_instance(&inst);
        (inst, costs)
    }

    fn route_cost(costs: &CostMatrix, route: &[usize]) -> f64 {
        let mut s = costs.at(0, route[0]);
        for w in route.windows(2) {
            s += costs.at(w[0], w[1]);
        }
        s + costs.at(*route.last().unwrap(), 0)
    }

    #[test]
    fn fixes_shuffled_cluster_path() {
        let (inst, costs) = line_instance();
        let mut route = vec![2, 1, 3, 4]; // optimal within-cluster order is 1,2,3
        let before = route_cost(&costs, &route);
        let (delta, moves) = intra_cluster_search(&inst, &costs, &mut route, 0);
        assert!(delta < 0.0);
        assert!(!moves.is_empty());
        assert_eq!(route, vec![1, 2, 3, 4]);
        assert_eq!(route_cost(&costs, &route), before + delta);
    }

    #[test]
    fn optimal_route_is_fixed_point() {
        let (inst, costs) = line_instance();
        let mut route = vec![1, 2, 3, 4];
        let (delta, moves) = intra_cluster_search(&inst, &costs, &mut route, 0);
        assert_eq!(delta, 0.0);
        assert!(moves.is_empty());
        assert_eq!(route, vec![1, 2, 3, 4]);

        let (delta, moves) = endpoints_search(&inst, &costs, &mut route, 0);
        assert_eq!(delta, 0.0);
        assert!(moves.is_empty());
    }

    #[test]
    fn endpoint_search_is_monotone_and_contiguous() {
        let (inst, costs) = line_instance();
        let mut route = vec![3, 2, 1, 4];
        let before = route_cost(&costs, &route);
        let (delta, _) = endpoints_search(&inst, &costs, &mut route, 0);
        assert!(delta <= 0.0);
        assert_eq!(route_cost(&costs, &route), before + delta);
        // Cluster members stay consecutive.
        assert_eq!(
            route.iter().map(|&v| inst.cluster_of(v)).collect::<Vec<_>>(),
            vec![0, 0, 0, 1]
        );
    }

    #[test]
    fn searches_never_beat_exact_decoding() {
        use crate::hampath::PathCostTable;
        use crate::seqconcat::{route_cost as engine_cost, EvalCtx};
        let (inst, costs) = line_instance();
        let table = PathCostTable::build(&inst, &costs, 14).unwrap();
        let ctx = EvalCtx::new(&inst, &costs, &table);
        let optimal = engine_cost(&ctx, &[0, 1]);
        for start in [vec![2, 1, 3, 4], vec![3, 1, 2, 4], vec![1, 3, 2, 4]] {
            let mut route = start.clone();
            endpoints_search(&inst, &costs, &mut route, 0);
            assert!(route_cost(&costs, &route) >= optimal);
            let mut route = start;
            intra_cluster_search(&inst, &costs, &mut route, 0);
            assert!(route_cost(&costs, &route) >= optimal);
        }
    }
}
