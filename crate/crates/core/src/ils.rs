//! Multi-start iterated local search in two modes: vertex-level moves on
//! M-penalized costs, and cluster-level moves priced by the concatenation
//! engine. Each restart descends from a fresh cheapest-insertion solution,
//! then alternates shaking and local search until a run of non-improving
//! shakes ends the restart.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hampath::PathCostTable;
use crate::instance::{CostMatrix, Instance};
use crate::neighborhoods::cluster::{ClusterRoutes, EvalMode, MoveScan};
use crate::neighborhoods::intra::{endpoints_search, intra_cluster_search};
use crate::neighborhoods::vertex::{
    self, path_cost, VertexRoutes, VERTEX_INTER_KINDS, VERTEX_INTRA_KINDS,
};
use crate::neighborhoods::{choose_m, m_penalty_costs, MoveKind, IMPROVE_EPS, NLC_KINDS};
use crate::seqconcat::{decode_customers, EvalCtx};
use crate::solution::{validate, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlsMode {
    /// Customer-level moves on M-penalized edge costs.
    Vertex,
    /// Cluster-level moves; requires the Hamiltonian-path table.
    Cluster,
}

#[derive(Debug, Clone)]
pub struct IlsConfig {
    pub mode: IlsMode,
    /// Number of restarts n_R.
    pub restarts: usize,
    /// Non-improving shakes per restart n_I; `None` picks the mode default
    /// (n + 5m at vertex level, 1000 at cluster level).
    pub non_improving: Option<usize>,
    pub seed: u64,
    /// Wall-clock cap in seconds.
    pub time_limit: Option<f64>,
    /// Record the incumbent cost after every shake (for diagnostics/tests).
    pub record_history: bool,
}

impl IlsConfig {
    pub fn new(mode: IlsMode, seed: u64) -> Self {
        IlsConfig {
            mode,
            restarts: 50,
            non_improving: None,
            seed,
            time_limit: None,
            record_history: false,
        }
    }

    pub fn effective_non_improving(&self, inst: &Instance) -> usize {
        self.non_improving.unwrap_or(match self.mode {
            IlsMode::Vertex => inst.n() + 5 * inst.fleet,
            IlsMode::Cluster => 1000,
        })
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("infeasible instance: {0}")]
    Infeasible(String),
    #[error("initial construction failed after {0} attempts")]
    ConstructionFailed(usize),
    #[error("cluster mode requires a Hamiltonian-path table")]
    MissingTable,
    #[error("no feasible solution found")]
    NoFeasibleFound,
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub restarts: usize,
    pub shakes: usize,
    pub improving_moves: usize,
    pub endpoint_moves: usize,
    pub intra_cluster_moves: usize,
    pub time_s: f64,
    /// Incumbent cost after each shake, per restart (only with `record_history`).
    pub history: Vec<Vec<f64>>,
    /// Cost of each local optimum reached, in penalized terms for vertex mode.
    pub local_optima: Vec<f64>,
}

pub struct IlsResult {
    pub solution: Solution,
    pub stats: SolveStats,
}

/// Parallel cheapest insertion honoring cluster contiguity: customers are
/// inserted in random order at the cheapest position that is either inside
/// their cluster's current span (or at its ends), or at a boundary between
/// clusters when the cluster is not yet started. Restarts with a fresh order
/// on dead ends, up to `k_max = 50` attempts.
pub fn initial_solution(
    inst: &Instance,
    matrix: &CostMatrix,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<usize>>, SolveError> {
    let m = inst.fleet;
    let q = inst.capacity as u64;
    if inst.total_demand() > q * m as u64 {
        return Err(SolveError::Infeasible(format!(
            "total demand {} exceeds fleet capacity {}",
            inst.total_demand(),
            q * m as u64
        )));
    }
    const K_MAX: usize = 50;
    'attempt: for _ in 0..K_MAX {
        let mut order: Vec<usize> = (1..=inst.n()).collect();
        order.shuffle(rng);
        let mut routes: Vec<Vec<usize>> = vec![Vec::new(); m];
        // A route reserves a cluster's full demand the moment its first
        // member enters: the vehicle has to serve the whole cluster anyway,
        // and reserving up front means later members always fit.
        let mut reserved = vec![0u64; m];
        for &v in &order {
            let k = inst.cluster_of(v);
            // Locate the cluster's current span, if any.
            let mut span: Option<(usize, usize, usize)> = None; // (route, start, end_excl)
            'find: for (r, route) in routes.iter().enumerate() {
                for (p, &u) in route.iter().enumerate() {
                    if inst.cluster_of(u) == k {
                        let mut e = p + 1;
                        while e < route.len() && inst.cluster_of(route[e]) == k {
                            e += 1;
                        }
                        span = Some((r, p, e));
                        break 'find;
                    }
                }
            }
            let mut best: Option<(f64, usize, usize)> = None;
            let consider = |best: &mut Option<(f64, usize, usize)>, r: usize, g: usize, route: &[usize]| {
                let prev = if g == 0 { 0 } else { route[g - 1] };
                let next = if g == route.len() { 0 } else { route[g] };
                let delta = matrix.at(prev, v) + matrix.at(v, next) - matrix.at(prev, next);
                if best.map_or(true, |(d, _, _)| delta < d - IMPROVE_EPS) {
                    *best = Some((delta, r, g));
                }
            };
            match span {
                Some((r, s, e)) => {
                    for g in s..=e {
                        consider(&mut best, r, g, &routes[r]);
                    }
                }
                None => {
                    let ck = inst.cluster_demand(k);
                    for (r, route) in routes.iter().enumerate() {
                        if reserved[r] + ck > q {
                            continue;
                        }
                        for g in 0..=route.len() {
                            // A gap strictly inside another cluster's span is
                            // not allowed.
                            if g > 0 && g < route.len() {
                                let a = inst.cluster_of(route[g - 1]);
                                let b = inst.cluster_of(route[g]);
                                if a == b {
                                    continue;
                                }
                            }
                            consider(&mut best, r, g, route);
                        }
                    }
                }
            }
            match best {
                Some((_, r, g)) => {
                    if span.is_none() {
                        reserved[r] += inst.cluster_demand(k);
                    }
                    routes[r].insert(g, v);
                }
                None => continue 'attempt,
            }
        }
        return Ok(routes);
    }
    Err(SolveError::ConstructionFailed(K_MAX))
}

/// Local search of the vertex-level ILS: random inter-route neighborhood
/// order with best-improvement sweeps, intra-route descent after each
/// improving move.
pub fn vertex_local_search(
    inst: &Instance,
    matrix: &CostMatrix,
    sol: &mut VertexRoutes,
    rng: &mut impl Rng,
) -> usize {
    let mut applied = 0;
    let mut nl: Vec<MoveKind> = VERTEX_INTER_KINDS.to_vec();
    while !nl.is_empty() {
        let pick = rng.gen_range(0..nl.len());
        match vertex::best_move(inst, matrix, sol, nl[pick]) {
            Some(mv) => {
                sol.apply_move(inst, matrix, &mv);
                applied += 1;
                applied += vertex_intra_search(inst, matrix, sol, rng);
                nl = VERTEX_INTER_KINDS.to_vec();
            }
            None => {
                nl.remove(pick);
            }
        }
    }
    applied
}

fn vertex_intra_search(
    inst: &Instance,
    matrix: &CostMatrix,
    sol: &mut VertexRoutes,
    rng: &mut impl Rng,
) -> usize {
    let mut applied = 0;
    let mut nl: Vec<MoveKind> = VERTEX_INTRA_KINDS.to_vec();
    while !nl.is_empty() {
        let pick = rng.gen_range(0..nl.len());
        match vertex::best_move(inst, matrix, sol, nl[pick]) {
            Some(mv) => {
                sol.apply_move(inst, matrix, &mv);
                applied += 1;
                nl = VERTEX_INTRA_KINDS.to_vec();
            }
            None => {
                nl.remove(pick);
            }
        }
    }
    applied
}

/// Cluster-level working state: cluster routes plus their decoded customer
/// sequences, kept in sync after every accepted move.
struct ClusterState {
    cr: ClusterRoutes,
    customers: Vec<Vec<usize>>,
}

impl ClusterState {
    fn new(ctx: &EvalCtx, routes: Vec<Vec<usize>>) -> Self {
        let cr = ClusterRoutes::new(ctx, routes);
        let customers = cr
            .routes
            .iter()
            .map(|r| decode_customers(ctx, r))
            .collect();
        ClusterState { cr, customers }
    }

    fn redecode(&mut self, ctx: &EvalCtx, r: usize) {
        self.customers[r] = decode_customers(ctx, &self.cr.routes[r]);
    }

    fn total_cost(&self) -> f64 {
        self.cr.total_cost()
    }
}

/// Local search of ILS-Clu: NL_C neighborhoods in random order with
/// best-improvement sweeps; endpoint search after each improving move, then
/// intra-route cluster search, and a final intra-cluster pass.
fn cluster_local_search(
    ctx: &EvalCtx,
    state: &mut ClusterState,
    rng: &mut impl Rng,
    stats: &mut SolveStats,
) {
    let scan = MoveScan::new(ctx, EvalMode::Hard);
    let mut nl: Vec<MoveKind> = NLC_KINDS.to_vec();
    while !nl.is_empty() {
        let pick = rng.gen_range(0..nl.len());
        match scan.best_move(&state.cr, nl[pick]) {
            Some(mv) => {
                let before = state.total_cost();
                state.cr.apply_move(ctx, &mv);
                state.redecode(ctx, mv.r1);
                if mv.r2 != mv.r1 {
                    state.redecode(ctx, mv.r2);
                }
                stats.improving_moves += 1;
                run_endpoints(ctx, state, stats);
                intra_route_cluster_search(ctx, state, rng, stats);
                if state.total_cost() < before - IMPROVE_EPS {
                    run_endpoints(ctx, state, stats);
                }
                nl = NLC_KINDS.to_vec();
            }
            None => {
                nl.remove(pick);
            }
        }
    }
    run_intra_cluster(ctx, state, stats);
}

fn run_endpoints(ctx: &EvalCtx, state: &mut ClusterState, stats: &mut SolveStats) {
    for r in 0..state.customers.len() {
        if state.customers[r].is_empty() {
            continue;
        }
        let (_, moves) = endpoints_search(ctx.inst, ctx.costs, &mut state.customers[r], r);
        stats.endpoint_moves += moves.len();
    }
}

fn run_intra_cluster(ctx: &EvalCtx, state: &mut ClusterState, stats: &mut SolveStats) {
    for r in 0..state.customers.len() {
        if state.customers[r].is_empty() {
            continue;
        }
        let (_, moves) = intra_cluster_search(ctx.inst, ctx.costs, &mut state.customers[r], r);
        stats.intra_cluster_moves += moves.len();
    }
}

/// Or-opt, 2-opt and swap on the cluster sequence of each route, in random
/// neighborhood order, best improvement per sweep.
fn intra_route_cluster_search(
    ctx: &EvalCtx,
    state: &mut ClusterState,
    rng: &mut impl Rng,
    stats: &mut SolveStats,
) {
    let scan = MoveScan::new(ctx, EvalMode::Hard);
    let kinds = [MoveKind::OrOpt, MoveKind::TwoOpt, MoveKind::IntraSwap];
    let mut nl: Vec<MoveKind> = kinds.to_vec();
    while !nl.is_empty() {
        let pick = rng.gen_range(0..nl.len());
        match scan.best_move(&state.cr, nl[pick]) {
            Some(mv) => {
                state.cr.apply_move(ctx, &mv);
                state.redecode(ctx, mv.r1);
                stats.improving_moves += 1;
                nl = kinds.to_vec();
            }
            None => {
                nl.remove(pick);
            }
        }
    }
}

fn routes_to_clusters(inst: &Instance, routes: &[Vec<usize>]) -> Vec<Vec<usize>> {
    routes
        .iter()
        .map(|route| {
            let mut out: Vec<usize> = Vec::new();
            for &v in route {
                let k = inst.cluster_of(v);
                if out.last() != Some(&k) {
                    out.push(k);
                }
            }
            out
        })
        .collect()
}

fn perturb_vertex(
    inst: &Instance,
    matrix: &CostMatrix,
    sol: &VertexRoutes,
    rng: &mut impl Rng,
) -> VertexRoutes {
    let mut out = sol.clone();
    let q = inst.capacity as u64;
    let n_moves = rng.gen_range(1..=2);
    for _ in 0..n_moves {
        'tries: for _ in 0..20 {
            let nonempty: Vec<usize> = (0..out.routes.len())
                .filter(|&r| !out.routes[r].is_empty())
                .collect();
            if nonempty.len() < 2 {
                break;
            }
            let r1 = *nonempty.choose(rng).unwrap();
            let r2 = loop {
                let c = *nonempty.choose(rng).unwrap();
                if c != r1 {
                    break c;
                }
            };
            let mut cand = out.clone();
            if rng.gen_bool(0.5) {
                // Shift(1,1): exchange one random customer each way, at
                // random positions.
                let i = rng.gen_range(0..cand.routes[r1].len());
                let j = rng.gen_range(0..cand.routes[r2].len());
                let a = cand.routes[r1].remove(i);
                let b = cand.routes[r2].remove(j);
                let gi = rng.gen_range(0..=cand.routes[r1].len());
                let gj = rng.gen_range(0..=cand.routes[r2].len());
                cand.routes[r1].insert(gi, b);
                cand.routes[r2].insert(gj, a);
            } else {
                // Swap two customers across routes.
                let i = rng.gen_range(0..cand.routes[r1].len());
                let j = rng.gen_range(0..cand.routes[r2].len());
                let a = cand.routes[r1][i];
                cand.routes[r1][i] = cand.routes[r2][j];
                cand.routes[r2][j] = a;
            }
            cand = VertexRoutes::new(inst, matrix, cand.routes);
            if cand.loads.iter().all(|&l| l <= q) {
                out = cand;
                break 'tries;
            }
        }
    }
    out
}

fn perturb_cluster(ctx: &EvalCtx, state: &ClusterState, rng: &mut impl Rng) -> ClusterState {
    let inst = ctx.inst;
    let q = inst.capacity as u64;
    let mut routes = state.cr.routes.clone();
    let n_moves = rng.gen_range(1..=2);
    for _ in 0..n_moves {
        'tries: for _ in 0..20 {
            let nonempty: Vec<usize> = (0..routes.len()).filter(|&r| !routes[r].is_empty()).collect();
            let do_shift = nonempty.len() >= 2 && rng.gen_bool(0.5);
            if do_shift {
                // Shift(1,1) on clusters between two routes.
                let r1 = *nonempty.choose(rng).unwrap();
                let r2 = loop {
                    let c = *nonempty.choose(rng).unwrap();
                    if c != r1 {
                        break c;
                    }
                };
                let mut cand = routes.clone();
                let i = rng.gen_range(0..cand[r1].len());
                let j = rng.gen_range(0..cand[r2].len());
                let a = cand[r1].remove(i);
                let b = cand[r2].remove(j);
                let gi = rng.gen_range(0..=cand[r1].len());
                let gj = rng.gen_range(0..=cand[r2].len());
                cand[r1].insert(gi, b);
                cand[r2].insert(gj, a);
                let load = |r: &[usize]| r.iter().map(|&k| inst.cluster_demand(k)).sum::<u64>();
                if load(&cand[r1]) <= q && load(&cand[r2]) <= q {
                    routes = cand;
                    break 'tries;
                }
            } else {
                // Swap two clusters of the same route.
                let candidates: Vec<usize> =
                    (0..routes.len()).filter(|&r| routes[r].len() >= 2).collect();
                let Some(&r) = candidates.choose(rng) else { break };
                let l = routes[r].len();
                let i = rng.gen_range(0..l);
                let j = loop {
                    let c = rng.gen_range(0..l);
                    if c != i {
                        break c;
                    }
                };
                routes[r].swap(i, j);
                break 'tries;
            }
        }
    }
    ClusterState::new(ctx, routes)
}

/// Runs the configured ILS and returns the best validated solution.
pub fn run_ils(
    inst: &Instance,
    costs: &CostMatrix,
    table: Option<&PathCostTable>,
    cfg: &IlsConfig,
) -> Result<IlsResult, SolveError> {
    match cfg.mode {
        IlsMode::Vertex => run_ils_vertex(inst, costs, cfg),
        IlsMode::Cluster => {
            let table = table.ok_or(SolveError::MissingTable)?;
            run_ils_cluster(inst, costs, table, cfg)
        }
    }
}

fn run_ils_vertex(
    inst: &Instance,
    costs: &CostMatrix,
    cfg: &IlsConfig,
) -> Result<IlsResult, SolveError> {
    let start = Instant::now();
    let m_value = choose_m(inst, costs);
    let pmat = m_penalty_costs(inst, costs, m_value);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_i = cfg.effective_non_improving(inst);
    let mut stats = SolveStats::default();
    let mut best: Option<Solution> = None;

    for _ in 0..cfg.restarts {
        if out_of_time(start, cfg) {
            break;
        }
        stats.restarts += 1;
        let routes = initial_solution(inst, &pmat, &mut rng)?;
        let mut incumbent = VertexRoutes::new(inst, &pmat, routes);
        stats.improving_moves += vertex_local_search(inst, &pmat, &mut incumbent, &mut rng);
        stats.local_optima.push(incumbent.total_cost());
        let mut history = vec![incumbent.total_cost()];
        let mut fails = 0;
        while fails < n_i && !out_of_time(start, cfg) {
            stats.shakes += 1;
            let mut cand = perturb_vertex(inst, &pmat, &incumbent, &mut rng);
            stats.improving_moves += vertex_local_search(inst, &pmat, &mut cand, &mut rng);
            stats.local_optima.push(cand.total_cost());
            if cand.total_cost() < incumbent.total_cost() - IMPROVE_EPS {
                incumbent = cand;
                fails = 0;
            } else {
                fails += 1;
            }
            if cfg.record_history {
                history.push(incumbent.total_cost());
            }
        }
        if cfg.record_history {
            stats.history.push(history);
        }
        consider_vertex_best(inst, costs, &incumbent, &mut best);
    }
    stats.time_s = start.elapsed().as_secs_f64();
    let solution = best.ok_or(SolveError::NoFeasibleFound)?;
    Ok(IlsResult {
        solution,
        stats,
    })
}

/// Keeps `best` at the cheapest incumbent whose decoded routes pass full
/// CluVRP validation under the true costs.
fn consider_vertex_best(
    inst: &Instance,
    costs: &CostMatrix,
    cand: &VertexRoutes,
    best: &mut Option<Solution>,
) {
    let routes: Vec<Vec<usize>> = cand.routes.iter().filter(|r| !r.is_empty()).cloned().collect();
    let cost: f64 = routes.iter().map(|r| path_cost(costs, r)).sum();
    let sol = Solution { routes, cost };
    if validate(inst, costs, &sol).is_err() {
        return;
    }
    if best.as_ref().map_or(true, |b| sol.cost < b.cost - IMPROVE_EPS) {
        *best = Some(sol);
    }
}

fn run_ils_cluster(
    inst: &Instance,
    costs: &CostMatrix,
    table: &PathCostTable,
    cfg: &IlsConfig,
) -> Result<IlsResult, SolveError> {
    let start = Instant::now();
    let ctx = EvalCtx::new(inst, costs, table);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_i = cfg.effective_non_improving(inst);
    let mut stats = SolveStats::default();
    let mut best: Option<Solution> = None;

    for _ in 0..cfg.restarts {
        if out_of_time(start, cfg) {
            break;
        }
        stats.restarts += 1;
        let customer_routes = initial_solution(inst, costs, &mut rng)?;
        let mut incumbent = ClusterState::new(&ctx, routes_to_clusters(inst, &customer_routes));
        cluster_local_search(&ctx, &mut incumbent, &mut rng, &mut stats);
        stats.local_optima.push(incumbent.total_cost());
        let mut history = vec![incumbent.total_cost()];
        let mut fails = 0;
        while fails < n_i && !out_of_time(start, cfg) {
            stats.shakes += 1;
            let mut cand = perturb_cluster(&ctx, &incumbent, &mut rng);
            cluster_local_search(&ctx, &mut cand, &mut rng, &mut stats);
            stats.local_optima.push(cand.total_cost());
            if cand.total_cost() < incumbent.total_cost() - IMPROVE_EPS {
                incumbent = cand;
                fails = 0;
            } else {
                fails += 1;
            }
            if cfg.record_history {
                history.push(incumbent.total_cost());
            }
        }
        if cfg.record_history {
            stats.history.push(history);
        }
        consider_cluster_best(inst, costs, &incumbent, &mut best);
    }
    stats.time_s = start.elapsed().as_secs_f64();
    let solution = best.ok_or(SolveError::NoFeasibleFound)?;
    Ok(IlsResult { solution, stats })
}

fn consider_cluster_best(
    inst: &Instance,
    costs: &CostMatrix,
    state: &ClusterState,
    best: &mut Option<Solution>,
) {
    let routes: Vec<Vec<usize>> = state
        .customers
        .iter()
        .filter(|r| !r.is_empty())
        .cloned()
        .collect();
    let cost: f64 = routes.iter().map(|r| path_cost(costs, r)).sum();
    let sol = Solution { routes, cost };
    if validate(inst, costs, &sol).is_err() {
        return;
    }
    if best.as_ref().map_or(true, |b| sol.cost < b.cost - IMPROVE_EPS) {
        *best = Some(sol);
    }
}

fn out_of_time(start: Instant, cfg: &IlsConfig) -> bool {
    cfg.time_limit
        .map_or(false, |lim| start.elapsed().as_secs_f64() >= lim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hampath::PathCostTable;
    use crate::instance::Rounding;

    fn toy() -> (Instance, CostMatrix) {
        let inst = Instance::new(
            "ils-toy".into(),
            vec![
                (0.0, 0.0),
                (10.0, 0.0),
                (12.0, 2.0),
                (0.0, 10.0),
                (2.0, 12.0),
                (-10.0, -1.0),
                (10.0, 10.0),
            ],
            vec![0, 2, 2, 2, 2, 3, 3],
            7,
            2,
            vec![vec![1, 2], vec![3, 4], vec![5], vec![6]],
            Rounding::NearestInteger,
        )
        .unwrap();
        let costs = CostMatrix::from_instance(&inst);
        (inst, costs)
    }

    #[test]
    fn defaults_match_reference_settings() {
        let (inst, _) = toy();
        let v = IlsConfig::new(IlsMode::Vertex, 0);
        assert_eq!(v.restarts, 50);
        assert_eq!(v.effective_non_improving(&inst), inst.n() + 5 * inst.fleet);
        let c = IlsConfig::new(IlsMode::Cluster, 0);
        assert_eq!(c.effective_non_improving(&inst), 1000);
    }

    #[test]
    fn initial_solution_is_feasible_and_contiguous() {
        let (inst, costs) = toy();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let routes = initial_solution(&inst, &costs, &mut rng).unwrap();
            let cost: f64 = routes.iter().map(|r| path_cost(&costs, r)).sum();
            let sol = Solution {
                routes: routes.into_iter().filter(|r| !r.is_empty()).collect(),
                cost,
            };
            validate(&inst, &costs, &sol).unwrap();
        }
    }

    #[test]
    fn single_cluster_single_vehicle_route() {
        let inst = Instance::new(
            "one".into(),
            vec![(0.0, 0.0), (5.0, 0.0), (6.0, 1.0)],
            vec![0, 1, 1],
            5,
            1,
            vec![vec![1, 2]],
            Rounding::NearestInteger,
        )
        .unwrap();
        let costs = CostMatrix::from_instance(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let routes = initial_solution(&inst, &costs, &mut rng).unwrap();
        let nonempty: Vec<_> = routes.iter().filter(|r| !r.is_empty()).collect();
        assert_eq!(nonempty.len(), 1);
        assert_eq!(nonempty[0].len(), 2);
    }

    #[test]
    fn cluster_mode_requires_table() {
        let (inst, costs) = toy();
        let cfg = IlsConfig::new(IlsMode::Cluster, 1);
        assert!(matches!(
            run_ils(&inst, &costs, None, &cfg),
            Err(SolveError::MissingTable)
        ));
    }

    #[test]
    fn both_modes_produce_valid_solutions() {
        let (inst, costs) = toy();
        let table = PathCostTable::build(&inst, &costs, 14).unwrap();
        for mode in [IlsMode::Vertex, IlsMode::Cluster] {
            let mut cfg = IlsConfig::new(mode, 42);
            cfg.restarts = 3;
            cfg.non_improving = Some(15);
            let res = run_ils(&inst, &costs, Some(&table), &cfg).unwrap();
            validate(&inst, &costs, &res.solution).unwrap();
            assert!(res.stats.restarts >= 1);
        }
    }

    #[test]
    fn incumbent_history_is_monotone() {
        let (inst, costs) = toy();
        let table = PathCostTable::build(&inst, &costs, 14).unwrap();
        let mut cfg = IlsConfig::new(IlsMode::Cluster, 7);
        cfg.restarts = 2;
        cfg.non_improving = Some(20);
        cfg.record_history = true;
        let res = run_ils(&inst, &costs, Some(&table), &cfg).unwrap();
        for hist in &res.stats.history {
            for w in hist.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "incumbent increased: {:?}", hist);
            }
        }
    }

    #[test]
    fn single_route_perturbation_is_intra_swap_only() {
        // One vehicle: the cluster shift between routes is impossible, so
        // perturbation can only swap two clusters of the same route (or
        // degrade to identity), never break feasibility.
        let inst = Instance::new(
            "single".into(),
            vec![(0.0, 0.0), (4.0, 0.0), (0.0, 4.0), (-4.0, 0.0), (0.0, -4.0)],
            vec![0, 1, 1, 1, 1],
            10,
            1,
            vec![vec![1], vec![2], vec![3], vec![4]],
            Rounding::NearestInteger,
        )
        .unwrap();
        let costs = CostMatrix::from_instance(&inst);
        let table = PathCostTable::build(&inst, &costs, 14).unwrap();
        let ctx = EvalCtx::new(&inst, &costs, &table);
        let state = ClusterState::new(&ctx, vec![vec![0, 1, 2, 3]]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut changed = 0;
        for _ in 0..40 {
            let p = perturb_cluster(&ctx, &state, &mut rng);
            assert_eq!(p.cr.routes.len(), 1);
            let mut sorted = p.cr.routes[0].clone();
            sorted.sort_unstable();
            assert_eq!(sorted, vec![0, 1, 2, 3]);
            if p.cr.routes[0] != state.cr.routes[0] {
                changed += 1;
            }
        }
        assert!(changed > 0, "perturbation never changed the route");
    }

    #[test]
    fn perturbation_keeps_cluster_solution_consistent() {
        let (inst, costs) = toy();
        let table = PathCostTable::build(&inst, &costs, 14).unwrap();
        let ctx = EvalCtx::new(&inst, &costs, &table);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let customer_routes = initial_solution(&inst, &costs, &mut rng).unwrap();
        let state = ClusterState::new(&ctx, routes_to_clusters(&inst, &customer_routes));
        for _ in 0..30 {
            let p = perturb_cluster(&ctx, &state, &mut rng);
            // Decoded cost must equal engine cost on every route.
            for (r, route) in p.cr.routes.iter().enumerate() {
                let decoded: f64 = path_cost(&costs, &p.customers[r]);
                let engine = p.cr.costs[r];
                assert!((decoded - engine).abs() < 1e-9, "route {route:?}");
            }
        }
    }
}
