//! Hybrid genetic search over cluster-level giant tours: ordered crossover,
//! optimal split into capacity-penalized routes, education by cluster-level
//! local search, biased-fitness population management with feasible and
//! infeasible subpopulations, and adaptive capacity penalties.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hampath::PathCostTable;
use crate::ils::SolveError;
use crate::instance::{CostMatrix, Instance};
use crate::neighborhoods::cluster::{ClusterRoutes, EvalMode, MoveScan};
use crate::neighborhoods::{MoveKind, IMPROVE_EPS};
use crate::seqconcat::{decode_customers, init_single, concat, subsequence_route_cost, EvalCtx};
use crate::solution::{validate, Solution};

#[derive(Debug, Clone)]
pub struct UhgsConfig {
    /// Subpopulation size after survivor selection.
    pub mu_min: usize,
    /// Extra individuals tolerated before pruning.
    pub mu_gen: usize,
    /// Consecutive non-improving offspring before termination.
    pub it_max: usize,
    pub seed: u64,
    pub time_limit: Option<f64>,
    /// Weight of the cost rank relative to the diversity rank.
    pub elite_weight: f64,
    /// Target share of naturally feasible offspring.
    pub target_feasible: f64,
    /// Diversity is the mean broken-pairs distance to this many neighbors.
    pub n_close: usize,
}

impl UhgsConfig {
    pub fn new(seed: u64) -> Self {
        UhgsConfig {
            mu_min: 8,
            mu_gen: 8,
            it_max: 400,
            seed,
            time_limit: None,
            elite_weight: 0.4,
            target_feasible: 0.25,
            n_close: 3,
        }
    }
}

/// One member of the population.
#[derive(Debug, Clone)]
pub struct Individual {
    pub giant_tour: Vec<usize>,
    pub routes: Vec<Vec<usize>>,
    pub true_cost: f64,
    pub excess: u64,
    pub penalized_cost: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Default)]
pub struct UhgsStats {
    pub educations: usize,
    pub generations: usize,
    pub time_s: f64,
    pub best_history: Vec<f64>,
}

pub struct UhgsResult {
    pub solution: Solution,
    pub stats: UhgsStats,
}

/// Ordered crossover on cluster permutations: the child keeps parent 1's
/// segment between two random cut points (inclusive) and fills the remaining
/// positions in parent 2's circular order after the second cut.
pub fn ox_crossover(p1: &[usize], p2: &[usize], rng: &mut impl Rng) -> Vec<usize> {
    let n = p1.len();
    debug_assert_eq!(n, p2.len());
    if n <= 1 {
        return p1.to_vec();
    }
    let x = rng.gen_range(0..n);
    let y = rng.gen_range(0..n);
    let (a, b) = (x.min(y), x.max(y));
    ox_with_cuts(p1, p2, a, b)
}

/// Deterministic OX core, exposed so the fill rule can be pinned in tests.
pub fn ox_with_cuts(p1: &[usize], p2: &[usize], a: usize, b: usize) -> Vec<usize> {
    let n = p1.len();
    let mut child = vec![usize::MAX; n];
    let max_id = p1.iter().chain(p2.iter()).max().copied().unwrap_or(0);
    let mut used = vec![false; max_id + 1];
    for t in a..=b {
        child[t] = p1[t];
        used[p1[t]] = true;
    }
    let mut pos = (b + 1) % n;
    for t in 0..n {
        let v = p2[(b + 1 + t) % n];
        if !used[v] {
            child[pos] = v;
            used[v] = true;
            pos = (pos + 1) % n;
        }
    }
    debug_assert!(child.iter().all(|&v| v != usize::MAX));
    child
}

pub struct SplitOutcome {
    pub routes: Vec<Vec<usize>>,
    pub true_cost: f64,
    pub excess: u64,
    pub penalized_cost: f64,
}

/// Optimal split of a giant tour into at most `m` consecutive routes,
/// minimizing route costs plus `rho` per unit of capacity excess. Solved as
/// a shortest path with at most `m` arcs on the segment DAG; every
/// segmentation is admissible because excess is penalized, not forbidden.
pub fn split(ctx: &EvalCtx, giant: &[usize], rho: f64) -> SplitOutcome {
    let n = giant.len();
    let m = ctx.inst.fleet.min(n.max(1));
    let q = ctx.inst.capacity as u64;
    assert!(n >= 1, "empty giant tour");

    // seg[i][j]: penalized cost of serving giant[i..=j] as one route.
    let mut seg = vec![f64::INFINITY; n * n];
    for i in 0..n {
        let mut acc = init_single(ctx, giant[i]);
        seg[i * n + i] = subsequence_route_cost(ctx, &acc)
            + rho * acc.load.saturating_sub(q) as f64;
        for j in (i + 1)..n {
            acc = concat(ctx, &acc, &init_single(ctx, giant[j]));
            seg[i * n + j] = subsequence_route_cost(ctx, &acc)
                + rho * acc.load.saturating_sub(q) as f64;
        }
    }

    // d[k][j]: best penalized cost covering the first j clusters with <= k
    // routes; parents remember the last segment start.
    let mut d = vec![f64::INFINITY; (m + 1) * (n + 1)];
    let mut parent = vec![usize::MAX; (m + 1) * (n + 1)];
    for k in 0..=m {
        d[k * (n + 1)] = 0.0;
    }
    for k in 1..=m {
        for j in 1..=n {
            let mut best = d[(k - 1) * (n + 1) + j];
            let mut par = parent[(k - 1) * (n + 1) + j];
            for i in 0..j {
                let cand = d[(k - 1) * (n + 1) + i] + seg[i * n + (j - 1)];
                if cand < best {
                    best = cand;
                    par = i;
                }
            }
            d[k * (n + 1) + j] = best;
            parent[k * (n + 1) + j] = par;
        }
    }

    let mut routes = Vec::new();
    let mut j = n;
    let mut k = m;
    while j > 0 {
        let i = parent[k * (n + 1) + j];
        debug_assert!(i != usize::MAX && i < j);
        routes.push(giant[i..j].to_vec());
        j = i;
        k -= 1;
    }
    routes.reverse();

    let mut true_cost = 0.0;
    let mut excess = 0u64;
    for route in &routes {
        let mut acc = init_single(ctx, route[0]);
        for &cl in &route[1..] {
            acc = concat(ctx, &acc, &init_single(ctx, cl));
        }
        true_cost += subsequence_route_cost(ctx, &acc);
        excess += acc.load.saturating_sub(q);
    }
    SplitOutcome {
        routes,
        true_cost,
        excess,
        penalized_cost: true_cost + rho * excess as f64,
    }
}

const EDUCATE_KINDS: [MoveKind; 9] = [
    MoveKind::Relocate1,
    MoveKind::Relocate2,
    MoveKind::Swap11,
    MoveKind::Swap21,
    MoveKind::Swap22,
    MoveKind::TwoOptStar,
    MoveKind::TwoOpt,
    MoveKind::OrOpt,
    MoveKind::IntraSwap,
];

/// Education: cluster-level descent on penalized costs with segment moves of
/// at most two clusters, including reversed insertions. Returns the improved
/// routes over `m` fleet slots.
pub fn educate(
    ctx: &EvalCtx,
    routes: Vec<Vec<usize>>,
    rho: f64,
    rng: &mut impl Rng,
) -> ClusterRoutes {
    let m = ctx.inst.fleet;
    let mut slots = routes;
    slots.resize(m.max(slots.len()), Vec::new());
    let mut sol = ClusterRoutes::new(ctx, slots);
    let scan = MoveScan {
        ctx,
        mode: EvalMode::Penalized { rho },
        allow_reversal: true,
        or_opt_max: 2,
    };
    let mut nl: Vec<MoveKind> = EDUCATE_KINDS.to_vec();
    while !nl.is_empty() {
        let pick = rng.gen_range(0..nl.len());
        match scan.best_move(&sol, nl[pick]) {
            Some(mv) => {
                sol.apply_move(ctx, &mv);
                nl = EDUCATE_KINDS.to_vec();
            }
            None => {
                nl.remove(pick);
            }
        }
    }
    sol
}

/// Mean broken-pairs distance: share of adjacent cluster pairs of `a` that
/// are not adjacent (in either direction) in `b`.
pub fn broken_pairs_distance(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let mut edges = HashSet::with_capacity(n);
    for w in b.windows(2) {
        edges.insert((w[0].min(w[1]), w[0].max(w[1])));
    }
    let broken = a
        .windows(2)
        .filter(|w| !edges.contains(&(w[0].min(w[1]), w[0].max(w[1]))))
        .count();
    broken as f64 / (n - 1) as f64
}

/// Diversity contribution of each member: mean distance to its `n_close`
/// nearest neighbors in the same subpopulation.
pub fn diversity_contributions(pop: &[Individual], n_close: usize) -> Vec<f64> {
    let len = pop.len();
    let mut out = vec![0.0; len];
    if len < 2 {
        return out;
    }
    for i in 0..len {
        let mut dists: Vec<f64> = (0..len)
            .filter(|&j| j != i)
            .map(|j| broken_pairs_distance(&pop[i].giant_tour, &pop[j].giant_tour))
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let take = n_close.min(dists.len());
        out[i] = dists[..take].iter().sum::<f64>() / take as f64;
    }
    out
}

/// Rank-sum biased fitness: cost rank plus `(1 - elite_weight)` times the
/// diversity rank (diversity ranked descending). Lower is better.
pub fn biased_fitness(pop: &[Individual], n_close: usize, elite_weight: f64) -> Vec<f64> {
    let len = pop.len();
    let div = diversity_contributions(pop, n_close);
    let mut by_cost: Vec<usize> = (0..len).collect();
    by_cost.sort_by(|&a, &b| {
        pop[a]
            .penalized_cost
            .partial_cmp(&pop[b].penalized_cost)
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut by_div: Vec<usize> = (0..len).collect();
    by_div.sort_by(|&a, &b| div[b].partial_cmp(&div[a]).unwrap().then(a.cmp(&b)));
    let mut bf = vec![0.0; len];
    for (rank, &i) in by_cost.iter().enumerate() {
        bf[i] += rank as f64;
    }
    for (rank, &i) in by_div.iter().enumerate() {
        bf[i] += (1.0 - elite_weight) * rank as f64;
    }
    bf
}

/// One penalty adaptation step: multiply by 1.2 when too few offspring are
/// feasible, divide when too many, clamped to [1e-2, 1e3] times the mean
/// edge cost.
pub fn adapt_penalty(rho: f64, feasible_fraction: f64, target: f64, mean_cost: f64) -> f64 {
    let lo = 1e-2 * mean_cost;
    let hi = 1e3 * mean_cost;
    let next = if feasible_fraction < target {
        rho * 1.2
    } else if feasible_fraction > target {
        rho / 1.2
    } else {
        rho
    };
    next.clamp(lo, hi)
}

struct Population {
    cfg: UhgsConfig,
    feasible: Vec<Individual>,
    infeasible: Vec<Individual>,
}

impl Population {
    fn insert(&mut self, ind: Individual) {
        let pool = if ind.feasible {
            &mut self.feasible
        } else {
            &mut self.infeasible
        };
        pool.push(ind);
        let cap = self.cfg.mu_min + self.cfg.mu_gen;
        if self.feasible.len() > cap {
            prune(&mut self.feasible, self.cfg.mu_min, self.cfg.n_close, self.cfg.elite_weight, true);
        }
        if self.infeasible.len() > cap {
            prune(&mut self.infeasible, self.cfg.mu_min, self.cfg.n_close, self.cfg.elite_weight, false);
        }
    }

    fn refresh_penalized(&mut self, rho: f64) {
        for ind in self.feasible.iter_mut().chain(self.infeasible.iter_mut()) {
            ind.penalized_cost = ind.true_cost + rho * ind.excess as f64;
        }
    }

    /// Binary tournament on biased fitness over the union of both pools.
    fn tournament(&self, rng: &mut impl Rng) -> &Individual {
        let bf_f = biased_fitness(&self.feasible, self.cfg.n_close, self.cfg.elite_weight);
        let bf_i = biased_fitness(&self.infeasible, self.cfg.n_close, self.cfg.elite_weight);
        let total = self.feasible.len() + self.infeasible.len();
        debug_assert!(total > 0);
        let fit = |t: usize| {
            if t < self.feasible.len() {
                bf_f[t]
            } else {
                bf_i[t - self.feasible.len()]
            }
        };
        let t1 = rng.gen_range(0..total);
        let t2 = rng.gen_range(0..total);
        let winner = if fit(t1) <= fit(t2) { t1 } else { t2 };
        if winner < self.feasible.len() {
            &self.feasible[winner]
        } else {
            &self.infeasible[winner - self.feasible.len()]
        }
    }
}

/// Survivor selection: drop the worst biased fitness down to `mu_min`
/// members, clones first; the best feasible member is never dropped.
fn prune(pop: &mut Vec<Individual>, mu_min: usize, n_close: usize, elite_weight: f64, protect_best: bool) {
    while pop.len() > mu_min {
        let bf = biased_fitness(pop, n_close, elite_weight);
        let protected = if protect_best {
            pop.iter()
                .enumerate()
                .filter(|(_, ind)| ind.feasible)
                .min_by(|a, b| a.1.penalized_cost.partial_cmp(&b.1.penalized_cost).unwrap())
                .map(|(i, _)| i)
        } else {
            None
        };
        let is_clone = |i: usize| {
            pop.iter().enumerate().any(|(j, other)| {
                j != i && broken_pairs_distance(&pop[i].giant_tour, &other.giant_tour) == 0.0
            })
        };
        let mut victim: Option<usize> = None;
        let mut candidates: Vec<usize> = (0..pop.len())
            .filter(|&i| Some(i) != protected && is_clone(i))
            .collect();
        if candidates.is_empty() {
            candidates = (0..pop.len()).filter(|&i| Some(i) != protected).collect();
        }
        for i in candidates {
            if victim.map_or(true, |v| bf[i] > bf[v]) {
                victim = Some(i);
            }
        }
        match victim {
            Some(v) => {
                pop.remove(v);
            }
            None => break,
        }
    }
}

/// Best-solution bookkeeping. Before any feasible individual exists, the
/// non-improvement counter also resets on penalized-cost progress so the
/// penalty adaptation has time to steer the search into feasibility.
struct Tracker {
    best: Option<Individual>,
    best_infeasible: f64,
    no_improve: usize,
}

impl Tracker {
    fn register(&mut self, ind: &Individual, stats: &mut UhgsStats) {
        let improved = if ind.feasible {
            self.best
                .as_ref()
                .map_or(true, |b| ind.true_cost < b.true_cost - IMPROVE_EPS)
        } else if self.best.is_none() && ind.penalized_cost < self.best_infeasible - IMPROVE_EPS {
            self.best_infeasible = ind.penalized_cost;
            true
        } else {
            false
        };
        if improved {
            if ind.feasible {
                self.best = Some(ind.clone());
            }
            self.no_improve = 0;
        } else {
            self.no_improve += 1;
        }
        stats
            .best_history
            .push(self.best.as_ref().map(|b| b.true_cost).unwrap_or(f64::INFINITY));
    }
}

fn evaluate_individual(ctx: &EvalCtx, sol: &ClusterRoutes, rho: f64) -> Individual {
    let q = ctx.inst.capacity as u64;
    let giant_tour: Vec<usize> = sol.routes.iter().flatten().copied().collect();
    let routes: Vec<Vec<usize>> = sol.routes.iter().filter(|r| !r.is_empty()).cloned().collect();
    let true_cost = sol.total_cost();
    let excess = sol.total_excess(q);
    Individual {
        giant_tour,
        routes,
        true_cost,
        excess,
        penalized_cost: true_cost + rho * excess as f64,
        feasible: excess == 0,
    }
}

fn offspring(ctx: &EvalCtx, tour: &[usize], rho: f64, rng: &mut impl Rng) -> Individual {
    let split_out = split(ctx, tour, rho);
    let educated = educate(ctx, split_out.routes, rho, rng);
    evaluate_individual(ctx, &educated, rho)
}

/// Runs the hybrid genetic search and returns the best feasible solution.
pub fn run_uhgs(
    inst: &Instance,
    costs: &CostMatrix,
    table: &PathCostTable,
    cfg: &UhgsConfig,
) -> Result<UhgsResult, SolveError> {
    let start = Instant::now();
    if inst.total_demand() > inst.capacity as u64 * inst.fleet as u64 {
        return Err(SolveError::Infeasible(format!(
            "total demand {} exceeds fleet capacity {}",
            inst.total_demand(),
            inst.capacity as u64 * inst.fleet as u64
        )));
    }
    let ctx = EvalCtx::new(inst, costs, table);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mean_cost = costs.mean_cost();
    // Start firmly on the feasible side; the adaptation walks the
    // coefficient down whenever more than the target share is feasible.
    let mut rho = (10.0 * mean_cost).max(f64::MIN_POSITIVE);

    let mut pop = Population {
        cfg: cfg.clone(),
        feasible: Vec::new(),
        infeasible: Vec::new(),
    };
    let mut stats = UhgsStats::default();
    let mut tracker = Tracker {
        best: None,
        best_infeasible: f64::INFINITY,
        no_improve: 0,
    };
    let mut feas_window: Vec<bool> = Vec::with_capacity(100);

    let n = inst.num_clusters();
    let base: Vec<usize> = (0..n).collect();

    for _ in 0..(4 * cfg.mu_min) {
        let mut tour = base.clone();
        tour.shuffle(&mut rng);
        let ind = offspring(&ctx, &tour, rho, &mut rng);
        stats.educations += 1;
        feas_window.push(ind.feasible);
        tracker.register(&ind, &mut stats);
        pop.insert(ind);
        if feas_window.len() == 100 {
            let frac = feas_window.iter().filter(|&&f| f).count() as f64 / 100.0;
            rho = adapt_penalty(rho, frac, cfg.target_feasible, mean_cost);
            pop.refresh_penalized(rho);
            feas_window.clear();
        }
    }

    while tracker.no_improve < cfg.it_max {
        if let Some(lim) = cfg.time_limit {
            if start.elapsed().as_secs_f64() >= lim {
                break;
            }
        }
        stats.generations += 1;
        let p1 = pop.tournament(&mut rng).giant_tour.clone();
        let p2 = pop.tournament(&mut rng).giant_tour.clone();
        let child_tour = ox_crossover(&p1, &p2, &mut rng);
        let ind = offspring(&ctx, &child_tour, rho, &mut rng);
        stats.educations += 1;
        feas_window.push(ind.feasible);
        tracker.register(&ind, &mut stats);
        pop.insert(ind);
        if feas_window.len() == 100 {
            let frac = feas_window.iter().filter(|&&f| f).count() as f64 / 100.0;
            rho = adapt_penalty(rho, frac, cfg.target_feasible, mean_cost);
            pop.refresh_penalized(rho);
            feas_window.clear();
        }
    }

    stats.time_s = start.elapsed().as_secs_f64();
    let best = tracker.best.ok_or(SolveError::NoFeasibleFound)?;
    let routes: Vec<Vec<usize>> = best
        .routes
        .iter()
        .map(|r| decode_customers(&ctx, r))
        .collect();
    let solution = Solution {
        routes,
        cost: best.true_cost,
    };
    validate(inst, costs, &solution).expect("UHGS best solution failed validation");
    Ok(UhgsResult { solution, stats })
}
