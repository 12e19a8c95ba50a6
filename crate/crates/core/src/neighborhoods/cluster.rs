//! Cluster-level move enumeration, evaluation and application.
//!
//! Routes are sequences of cluster ids over a fixed number of fleet slots
//! (empty slots allowed). Every candidate move is priced by recombining
//! preprocessed subsequences of the current routes, so one evaluation costs
//! O(B^2) per junction regardless of route length.

use crate::seqconcat::{evaluate_pieces, route_cost, EvalCtx, Piece, RoutePreproc};

use super::{Move, MoveKind, IMPROVE_EPS};

/// Capacity handling during move evaluation.
#[derive(Debug, Clone, Copy)]
pub enum EvalMode {
    /// Candidates that overload a route are discarded.
    Hard,
    /// Excess load is priced at `rho` per unit; all candidates admissible.
    Penalized { rho: f64 },
}

/// A cluster-level working solution with per-route preprocessing.
#[derive(Debug, Clone)]
pub struct ClusterRoutes {
    pub routes: Vec<Vec<usize>>,
    pub loads: Vec<u64>,
    pub costs: Vec<f64>,
    pre: Vec<RoutePreproc>,
}

impl ClusterRoutes {
    pub fn new(ctx: &EvalCtx, routes: Vec<Vec<usize>>) -> Self {
        let loads = routes
            .iter()
            .map(|r| r.iter().map(|&k| ctx.inst.cluster_demand(k)).sum())
            .collect();
        let costs = routes.iter().map(|r| route_cost(ctx, r)).collect();
        let pre = routes.iter().map(|r| RoutePreproc::build(ctx, r)).collect();
        ClusterRoutes {
            routes,
            loads,
            costs,
            pre,
        }
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    pub fn total_excess(&self, capacity: u64) -> u64 {
        self.loads.iter().map(|&l| l.saturating_sub(capacity)).sum()
    }

    pub fn penalized_cost(&self, capacity: u64, rho: f64) -> f64 {
        self.total_cost() + rho * self.total_excess(capacity) as f64
    }

    pub fn preproc(&self, r: usize) -> &RoutePreproc {
        &self.pre[r]
    }

    fn rebuild(&mut self, ctx: &EvalCtx, r: usize) {
        self.loads[r] = self.routes[r]
            .iter()
            .map(|&k| ctx.inst.cluster_demand(k))
            .sum();
        self.costs[r] = route_cost(ctx, &self.routes[r]);
        self.pre[r] = RoutePreproc::build(ctx, &self.routes[r]);
    }

    /// Applies a previously evaluated move and refreshes the affected routes.
    pub fn apply_move(&mut self, ctx: &EvalCtx, mv: &Move) {
        match mv.kind {
            MoveKind::Relocate1 | MoveKind::Relocate2 => {
                let mut seg: Vec<usize> = self.routes[mv.r1].drain(mv.i..mv.i + mv.len1).collect();
                if mv.rev1 {
                    seg.reverse();
                }
                let at = mv.j;
                let r2 = &mut self.routes[mv.r2];
                r2.splice(at..at, seg);
            }
            MoveKind::Swap11 | MoveKind::Swap21 | MoveKind::Swap22 => {
                let mut seg1: Vec<usize> = self.routes[mv.r1][mv.i..mv.i + mv.len1].to_vec();
                let mut seg2: Vec<usize> = self.routes[mv.r2][mv.j..mv.j + mv.len2].to_vec();
                if mv.rev1 {
                    seg1.reverse();
                }
                if mv.rev2 {
                    seg2.reverse();
                }
                self.routes[mv.r1].splice(mv.i..mv.i + mv.len1, seg2);
                self.routes[mv.r2].splice(mv.j..mv.j + mv.len2, seg1);
            }
            MoveKind::TwoOptStar => {
                let tail1 = self.routes[mv.r1].split_off(mv.i);
                let tail2 = self.routes[mv.r2].split_off(mv.j);
                self.routes[mv.r1].extend(tail2);
                self.routes[mv.r2].extend(tail1);
            }
            MoveKind::OrOpt => {
                let seg: Vec<usize> = self.routes[mv.r1].drain(mv.i..mv.i + mv.len1).collect();
                let at = if mv.j < mv.i { mv.j } else { mv.j - mv.len1 };
                self.routes[mv.r1].splice(at..at, seg);
            }
            MoveKind::TwoOpt => {
                self.routes[mv.r1][mv.i..=mv.j].reverse();
            }
            MoveKind::IntraSwap => {
                self.routes[mv.r1].swap(mv.i, mv.j);
            }
            MoveKind::EndpointMove | MoveKind::IntraClusterMove => {
                unreachable!("customer-level records are not applied at cluster level")
            }
        }
        self.rebuild(ctx, mv.r1);
        if mv.r2 != mv.r1 {
            self.rebuild(ctx, mv.r2);
        }
    }
}

/// Enumerates and prices cluster moves of one kind.
pub struct MoveScan<'a> {
    pub ctx: &'a EvalCtx<'a>,
    pub mode: EvalMode,
    /// Also try inserting 2-cluster segments reversed (I-Cross style).
    pub allow_reversal: bool,
    /// Longest segment considered by or-opt.
    pub or_opt_max: usize,
}

impl<'a> MoveScan<'a> {
    pub fn new(ctx: &'a EvalCtx<'a>, mode: EvalMode) -> Self {
        MoveScan {
            ctx,
            mode,
            allow_reversal: false,
            or_opt_max: 3,
        }
    }

    /// Best strictly improving move of `kind`, ties broken by scan order.
    pub fn best_move(&self, sol: &ClusterRoutes, kind: MoveKind) -> Option<Move> {
        let mut best: Option<Move> = None;
        self.for_each_move(sol, kind, &mut |mv| {
            if mv.delta < -IMPROVE_EPS && best.map_or(true, |b| mv.delta < b.delta) {
                best = Some(mv);
            }
        });
        best
    }

    /// Visits every admissible candidate of `kind` with its evaluated delta.
    pub fn for_each_move(&self, sol: &ClusterRoutes, kind: MoveKind, f: &mut dyn FnMut(Move)) {
        match kind {
            MoveKind::Relocate1 => self.scan_relocate(sol, 1, f),
            MoveKind::Relocate2 => self.scan_relocate(sol, 2, f),
            MoveKind::Swap11 => self.scan_swap(sol, 1, 1, f),
            MoveKind::Swap21 => self.scan_swap(sol, 2, 1, f),
            MoveKind::Swap22 => self.scan_swap(sol, 2, 2, f),
            MoveKind::TwoOptStar => self.scan_two_opt_star(sol, f),
            MoveKind::OrOpt => self.scan_or_opt(sol, f),
            MoveKind::TwoOpt => self.scan_two_opt(sol, f),
            MoveKind::IntraSwap => self.scan_intra_swap(sol, f),
            MoveKind::EndpointMove | MoveKind::IntraClusterMove => {}
        }
    }

    fn capacity(&self) -> u64 {
        self.ctx.inst.capacity as u64
    }

    fn eval_pair(
        &self,
        sol: &ClusterRoutes,
        r1: usize,
        pieces1: &[Piece],
        load1: u64,
        r2: usize,
        pieces2: &[Piece],
        load2: u64,
    ) -> Option<f64> {
        let q = self.capacity();
        let mut delta = 0.0;
        match self.mode {
            EvalMode::Hard => {
                if load1 > q || load2 > q {
                    return None;
                }
            }
            EvalMode::Penalized { rho } => {
                let old = sol.loads[r1].saturating_sub(q) + sol.loads[r2].saturating_sub(q);
                let new = load1.saturating_sub(q) + load2.saturating_sub(q);
                delta += rho * (new as f64 - old as f64);
            }
        }
        delta += evaluate_pieces(self.ctx, pieces1) - sol.costs[r1];
        delta += evaluate_pieces(self.ctx, pieces2) - sol.costs[r2];
        Some(delta)
    }

    fn eval_single(&self, sol: &ClusterRoutes, r: usize, pieces: &[Piece]) -> f64 {
        evaluate_pieces(self.ctx, pieces) - sol.costs[r]
    }

    fn rev_options(&self, len: usize) -> &'static [bool] {
        if self.allow_reversal && len == 2 {
            &[false, true]
        } else {
            &[false]
        }
    }

    fn scan_relocate(&self, sol: &ClusterRoutes, len: usize, f: &mut dyn FnMut(Move)) {
        let m = sol.routes.len();
        for r1 in 0..m {
            let l1 = sol.routes[r1].len();
            if l1 < len {
                continue;
            }
            let p1 = &sol.pre[r1];
            for r2 in 0..m {
                if r2 == r1 {
                    continue;
                }
                let l2 = sol.routes[r2].len();
                let p2 = &sol.pre[r2];
                for i in 0..=(l1 - len) {
                    let w = p1.get(i, i + len - 1).load;
                    let (nl1, nl2) = (sol.loads[r1] - w, sol.loads[r2] + w);
                    let mut pieces1: Vec<Piece> = Vec::with_capacity(2);
                    if i > 0 {
                        pieces1.push(p1.piece(0, i - 1, false));
                    }
                    if i + len <= l1 - 1 {
                        pieces1.push(p1.piece(i + len, l1 - 1, false));
                    }
                    for j in 0..=l2 {
                        for &rev in self.rev_options(len) {
                            let mut pieces2: Vec<Piece> = Vec::with_capacity(3);
                            if j > 0 {
                                pieces2.push(p2.piece(0, j - 1, false));
                            }
                            pieces2.push(p1.piece(i, i + len - 1, rev));
                            if j < l2 {
                                pieces2.push(p2.piece(j, l2 - 1, false));
                            }
                            if let Some(delta) =
                                self.eval_pair(sol, r1, &pieces1, nl1, r2, &pieces2, nl2)
                            {
                                let kind = if len == 1 {
                                    MoveKind::Relocate1
                                } else {
                                    MoveKind::Relocate2
                                };
                                f(Move {
                                    kind,
                                    r1,
                                    r2,
                                    i,
                                    len1: len,
                                    j,
                                    len2: 0,
                                    rev1: rev,
                                    rev2: false,
                                    delta,
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    fn scan_swap(&self, sol: &ClusterRoutes, len1: usize, len2: usize, f: &mut dyn FnMut(Move)) {
        let m = sol.routes.len();
        let symmetric = len1 == len2;
        for r1 in 0..m {
            let l1 = sol.routes[r1].len();
            if l1 < len1 {
                continue;
            }
            let p1 = &sol.pre[r1];
            let r2_start = if symmetric { r1 + 1 } else { 0 };
            for r2 in r2_start..m {
                if r2 == r1 {
                    continue;
                }
                let l2 = sol.routes[r2].len();
                if l2 < len2 {
                    continue;
                }
                let p2 = &sol.pre[r2];
                for i in 0..=(l1 - len1) {
                    let w1 = p1.get(i, i + len1 - 1).load;
                    for j in 0..=(l2 - len2) {
                        let w2 = p2.get(j, j + len2 - 1).load;
                        let nl1 = sol.loads[r1] - w1 + w2;
                        let nl2 = sol.loads[r2] - w2 + w1;
                        for &rev2 in self.rev_options(len2) {
                            for &rev1 in self.rev_options(len1) {
                                let mut pieces1: Vec<Piece> = Vec::with_capacity(3);
                                if i > 0 {
                                    pieces1.push(p1.piece(0, i - 1, false));
                                }
                                pieces1.push(p2.piece(j, j + len2 - 1, rev2));
                                if i + len1 <= l1 - 1 {
                                    pieces1.push(p1.piece(i + len1, l1 - 1, false));
                                }
                                let mut pieces2: Vec<Piece> = Vec::with_capacity(3);
                                if j > 0 {
                                    pieces2.push(p2.piece(0, j - 1, false));
                                }
                                pieces2.push(p1.piece(i, i + len1 - 1, rev1));
                                if j + len2 <= l2 - 1 {
                                    pieces2.push(p2.piece(j + len2, l2 - 1, false));
                                }
                                if let Some(delta) =
                                    self.eval_pair(sol, r1, &pieces1, nl1, r2, &pieces2, nl2)
                                {
                                    let kind = match (len1, len2) {
                                        (1, 1) => MoveKind::Swap11,
                                        (2, 2) => MoveKind::Swap22,
                                        _ => MoveKind::Swap21,
                                    };
                                    f(Move {
                                        kind,
                                        r1,
                                        r2,
                                        i,
                                        len1,
                                        j,
                                        len2,
                                        rev1,
                                        rev2,
                                        delta,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    fn scan_two_opt_star(&self, sol: &ClusterRoutes, f: &mut dyn FnMut(Move)) {
        let m = sol.routes.len();
        for r1 in 0..m {
            let l1 = sol.routes[r1].len();
            let p1 = &sol.pre[r1];
            for r2 in (r1 + 1)..m {
                let l2 = sol.routes[r2].len();
                let p2 = &sol.pre[r2];
                for i in 0..=l1 {
                    let tail1 = if i < l1 { p1.get(i, l1 - 1).load } else { 0 };
                    let head1 = sol.loads[r1] - tail1;
                    for j in 0..=l2 {
                        if (i == 0 && j == 0) || (i == l1 && j == l2) {
                            continue; // whole-route swap or no-op
                        }
                        let tail2 = if j < l2 { p2.get(j, l2 - 1).load } else { 0 };
                        let head2 = sol.loads[r2] - tail2;
                        let (nl1, nl2) = (head1 + tail2, head2 + tail1);
                        let mut pieces1: Vec<Piece> = Vec::with_capacity(2);
                        if i > 0 {
                            pieces1.push(p1.piece(0, i - 1, false));
                        }
                        if j < l2 {
                            pieces1.push(p2.piece(j, l2 - 1, false));
                        }
                        let mut pieces2: Vec<Piece> = Vec::with_capacity(2);
                        if j > 0 {
                            pieces2.push(p2.piece(0, j - 1, false));
                        }
                        if i < l1 {
                            pieces2.push(p1.piece(i, l1 - 1, false));
                        }
                        if let Some(delta) =
                            self.eval_pair(sol, r1, &pieces1, nl1, r2, &pieces2, nl2)
                        {
                            f(Move {
                                kind: MoveKind::TwoOptStar,
                                r1,
                                r2,
                                i,
                                len1: 0,
                                j,
                                len2: 0,
                                rev1: false,
                                rev2: false,
                                delta,
                            });
                        }
                    }
                }
            }
        }
    }

    fn scan_or_opt(&self, sol: &ClusterRoutes, f: &mut dyn FnMut(Move)) {
        for r in 0..sol.routes.len() {
            let l = sol.routes[r].len();
            let p = &sol.pre[r];
            for len in 1..=self.or_opt_max.min(l.saturating_sub(1)) {
                for i in 0..=(l - len) {
                    for j in 0..=l {
                        if j >= i && j <= i + len {
                            continue;
                        }
                        let mut pieces: Vec<Piece> = Vec::with_capacity(4);
                        if j < i {
                            if j > 0 {
                                pieces.push(p.piece(0, j - 1, false));
                            }
                            pieces.push(p.piece(i, i + len - 1, false));
                            pieces.push(p.piece(j, i - 1, false));
                            if i + len <= l - 1 {
                                pieces.push(p.piece(i + len, l - 1, false));
                            }
                        } else {
                            if i > 0 {
                                pieces.push(p.piece(0, i - 1, false));
                            }
                            pieces.push(p.piece(i + len, j - 1, false));
                            pieces.push(p.piece(i, i + len - 1, false));
                            if j <= l - 1 {
                                pieces.push(p.piece(j, l - 1, false));
                            }
                        }
                        let delta = self.eval_single(sol, r, &pieces);
                        f(Move {
                            kind: MoveKind::OrOpt,
                            r1: r,
                            r2: r,
                            i,
                            len1: len,
                            j,
                            len2: 0,
                            rev1: false,
                            rev2: false,
                            delta,
                        });
                    }
                }
            }
        }
    }

    fn scan_two_opt(&self, sol: &ClusterRoutes, f: &mut dyn FnMut(Move)) {
        for r in 0..sol.routes.len() {
            let l = sol.routes[r].len();
            if l < 2 {
                continue;
            }
            let p = &sol.pre[r];
            for i in 0..(l - 1) {
                for j in (i + 1)..l {
                    if i == 0 && j == l - 1 {
                        continue; // full reversal is a symmetric no-op
                    }
                    let mut pieces: Vec<Piece> = Vec::with_capacity(3);
                    if i > 0 {
                        pieces.push(p.piece(0, i - 1, false));
                    }
                    pieces.push(p.piece(i, j, true));
                    if j + 1 <= l - 1 {
                        pieces.push(p.piece(j + 1, l - 1, false));
                    }
                    let delta = self.eval_single(sol, r, &pieces);
                    f(Move {
                        kind: MoveKind::TwoOpt,
                        r1: r,
                        r2: r,
                        i,
                        len1: 0,
                        j,
                        len2: 0,
                        rev1: false,
                        rev2: false,
                        delta,
                    });
                }
            }
        }
    }

    fn scan_intra_swap(&self, sol: &ClusterRoutes, f: &mut dyn FnMut(Move)) {
        for r in 0..sol.routes.len() {
            let l = sol.routes[r].len();
            if l < 2 {
                continue;
            }
            let p = &sol.pre[r];
            for i in 0..(l - 1) {
                for j in (i + 1)..l {
                    let mut pieces: Vec<Piece> = Vec::with_capacity(5);
                    if i > 0 {
                        pieces.push(p.piece(0, i - 1, false));
                    }
                    pieces.push(p.piece(j, j, false));
                    if i + 1 <= j - 1 {
                        pieces.push(p.piece(i + 1, j - 1, false));
                    }
                    pieces.push(p.piece(i, i, false));
                    if j + 1 <= l - 1 {
                        pieces.push(p.piece(j + 1, l - 1, false));
                    }
                    let delta = self.eval_single(sol, r, &pieces);
                    f(Move {
                        kind: MoveKind::IntraSwap,
                        r1: r,
                        r2: r,
                        i,
                        len1: 1,
                        j,
                        len2: 1,
                        rev1: false,
                        rev2: false,
                        delta,
                    });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hampath::PathCostTable;
    use crate::instance::{CostMatrix, Instance, Rounding};

    fn fixture() -> (Instance, CostMatrix) {
        let inst = Instance::new(
            "clu".into(),
            vec![
                (0.0, 0.0),
                (2.0, 0.0),
                (3.0, 1.0),
                (8.0, 0.0),
                (9.0, 1.0),
                (2.0, 6.0),
                (3.0, 7.0),
                (8.0, 6.0),
            ],
            vec![0, 1, 1, 2, 1, 2, 1, 3],
            6,
            2,
            vec![vec![1, 2], vec![3, 4], vec![5, 6], vec![7]],
            Rounding::NearestInteger,
        )
        .unwrap();
        let costs = CostMatrix::from_instance(&inst);
        (inst, costs)
    }

    #[test]
    fn swap11_candidate_count() {
        let (inst, costs) = fixture();
        let table = PathCostTable::build(&inst, &costs, 14).unwrap();
        let ctx = EvalCtx::new(&inst, &costs, &table);
        let sol = ClusterRoutes::new(&ctx, vec![vec![0, 1], vec![2, 3]]);
        let scan = MoveScan::new(&ctx, EvalMode::Penalized { rho: 0.0 });
        let mut count = 0;
        scan.for_each_move(&sol, MoveKind::Swap11, &mut |_| count += 1);
        assert_eq!(count, 4);
    }

    #[test]
    fn applied_delta_matches_recomputed_cost() {
        let (inst, costs) = fixture();
        let table = PathCostTable::build(&inst, &costs, 14).unwrap();
        let ctx = EvalCtx::new(&inst, &costs, &table);
        let scan = MoveScan {
            ctx: &ctx,
            mode: EvalMode::Penalized { rho: 0.0 },
            allow_reversal: true,
            or_opt_max: 3,
        };
        for kind in [
            MoveKind::Relocate1,
            MoveKind::Relocate2,
            MoveKind::Swap11,
            MoveKind::Swap21,
            MoveKind::Swap22,
            MoveKind::TwoOptStar,
            MoveKind::OrOpt,
            MoveKind::TwoOpt,
            MoveKind::IntraSwap,
        ] {
            let sol = ClusterRoutes::new(&ctx, vec![vec![0, 1, 2], vec![3]]);
            let before = sol.total_cost();
            let mut moves = Vec::new();
            scan.for_each_move(&sol, kind, &mut |mv| moves.push(mv));
            for mv in moves {
                let mut s = sol.clone();
                s.apply_move(&ctx, &mv);
                assert!(
                    (s.total_cost() - (before + mv.delta)).abs() < 1e-9,
                    "{kind:?} {mv:?}: applied {} expected {}",
                    s.total_cost(),
                    before + mv.delta
                );
            }
        }
    }

    #[test]
    fn hard_mode_rejects_overload() {
        let (mut inst, costs) = fixture();
        inst.capacity = 8; // loads 5 and 6: some relocations fit, some overload
        let table = PathCostTable::build(&inst, &costs, 14).unwrap();
        let ctx = EvalCtx::new(&inst, &costs, &table);
        let sol = ClusterRoutes::new(&ctx, vec![vec![0, 1], vec![2, 3]]);

        let hard = MoveScan::new(&ctx, EvalMode::Hard);
        let mut hard_count = 0;
        hard.for_each_move(&sol, MoveKind::Relocate1, &mut |mv| {
            let w = ctx.inst.cluster_demand(sol.routes[mv.r1][mv.i]);
            assert!(sol.loads[mv.r2] + w <= inst.capacity as u64);
            hard_count += 1;
        });
        let soft = MoveScan::new(&ctx, EvalMode::Penalized { rho: 0.0 });
        let mut soft_count = 0;
        soft.for_each_move(&sol, MoveKind::Relocate1, &mut |_| soft_count += 1);
        assert!(hard_count > 0);
        assert!(hard_count < soft_count);
    }
}
