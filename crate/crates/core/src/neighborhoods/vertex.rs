//! Vertex-level moves on plain customer routes, evaluated by direct edge
//! arithmetic on whichever cost matrix is supplied (the M-penalty solver
//! passes the penalized matrix).

use crate::instance::{CostMatrix, Instance};

use super::{Move, MoveKind, IMPROVE_EPS};

pub const VERTEX_INTER_KINDS: [MoveKind; 6] = [
    MoveKind::Relocate1,
    MoveKind::Relocate2,
    MoveKind::Swap11,
    MoveKind::Swap21,
    MoveKind::Swap22,
    MoveKind::TwoOptStar,
];

pub const VERTEX_INTRA_KINDS: [MoveKind; 3] =
    [MoveKind::TwoOpt, MoveKind::OrOpt, MoveKind::IntraSwap];

/// Customer routes over fixed fleet slots with cached loads and costs.
#[derive(Debug, Clone)]
pub struct VertexRoutes {
    pub routes: Vec<Vec<usize>>,
    pub loads: Vec<u64>,
    pub costs: Vec<f64>,
}

impl VertexRoutes {
    pub fn new(inst: &Instance, matrix: &CostMatrix, routes: Vec<Vec<usize>>) -> Self {
        let loads = routes
            .iter()
            .map(|r| r.iter().map(|&v| inst.demand[v] as u64).sum())
            .collect();
        let costs = routes.iter().map(|r| path_cost(matrix, r)).collect();
        VertexRoutes {
            routes,
            loads,
            costs,
        }
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    fn rebuild(&mut self, inst: &Instance, matrix: &CostMatrix, r: usize) {
        self.loads[r] = self.routes[r].iter().map(|&v| inst.demand[v] as u64).sum();
        self.costs[r] = path_cost(matrix, &self.routes[r]);
    }

    pub fn apply_move(&mut self, inst: &Instance, matrix: &CostMatrix, mv: &Move) {
        match mv.kind {
            MoveKind::Relocate1 | MoveKind::Relocate2 => {
                let seg: Vec<usize> = self.routes[mv.r1].drain(mv.i..mv.i + mv.len1).collect();
                self.routes[mv.r2].splice(mv.j..mv.j, seg);
            }
            MoveKind::Swap11 | MoveKind::Swap21 | MoveKind::Swap22 => {
                let seg1: Vec<usize> = self.routes[mv.r1][mv.i..mv.i + mv.len1].to_vec();
                let seg2: Vec<usize> = self.routes[mv.r2][mv.j..mv.j + mv.len2].to_vec();
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
            MoveKind::TwoOpt => self.routes[mv.r1][mv.i..=mv.j].reverse(),
            MoveKind::IntraSwap => self.routes[mv.r1].swap(mv.i, mv.j),
            MoveKind::EndpointMove | MoveKind::IntraClusterMove => {
                unreachable!("customer-level records are applied by their search")
            }
        }
        self.rebuild(inst, matrix, mv.r1);
        if mv.r2 != mv.r1 {
            self.rebuild(inst, matrix, mv.r2);
        }
    }
}

pub fn path_cost(matrix: &CostMatrix, route: &[usize]) -> f64 {
    if route.is_empty() {
        return 0.0;
    }
    let mut total = matrix.at(0, route[0]);
    for w in route.windows(2) {
        total += matrix.at(w[0], w[1]);
    }
    total + matrix.at(*route.last().unwrap(), 0)
}

/// Best strictly improving vertex move of `kind`; capacity is always hard.
pub fn best_move(
    inst: &Instance,
    matrix: &CostMatrix,
    sol: &VertexRoutes,
    kind: MoveKind,
) -> Option<Move> {
    let mut best: Option<Move> = None;
    for_each_move(inst, matrix, sol, kind, &mut |mv| {
        if mv.delta < -IMPROVE_EPS && best.map_or(true, |b| mv.delta < b.delta) {
            best = Some(mv);
        }
    });
    best
}

pub fn for_each_move(
    inst: &Instance,
    matrix: &CostMatrix,
    sol: &VertexRoutes,
    kind: MoveKind,
    f: &mut dyn FnMut(Move),
) {
    let at = |route: &[usize], p: isize| -> usize {
        if p < 0 || p as usize >= route.len() {
            0
        } else {
            route[p as usize]
        }
    };
    let c = |a: usize, b: usize| matrix.at(a, b);
    let q = inst.capacity as u64;
    let m = sol.routes.len();

    match kind {
        MoveKind::Relocate1 | MoveKind::Relocate2 => {
            let len = if kind == MoveKind::Relocate1 { 1 } else { 2 };
            for r1 in 0..m {
                let a = &sol.routes[r1];
                if a.len() < len {
                    continue;
                }
                for r2 in 0..m {
                    if r1 == r2 {
                        continue;
                    }
                    let b = &sol.routes[r2];
                    for i in 0..=(a.len() - len) {
                        let w: u64 = a[i..i + len].iter().map(|&v| inst.demand[v] as u64).sum();
                        if sol.loads[r2] + w > q {
                            continue;
                        }
                        let pa = at(a, i as isize - 1);
                        let sa = at(a, (i + len) as isize);
                        let removal = c(pa, sa) - c(pa, a[i]) - c(a[i + len - 1], sa);
                        for j in 0..=b.len() {
                            let pb = at(b, j as isize - 1);
                            let sb = at(b, j as isize);
                            let insertion = c(pb, a[i]) + c(a[i + len - 1], sb) - c(pb, sb);
                            f(Move {
                                kind,
                                r1,
                                r2,
                                i,
                                len1: len,
                                j,
                                len2: 0,
                                rev1: false,
                                rev2: false,
                                delta: removal + insertion,
                            });
                        }
                    }
                }
            }
        }
        MoveKind::Swap11 | MoveKind::Swap21 | MoveKind::Swap22 => {
            let (len1, len2) = match kind {
                MoveKind::Swap11 => (1, 1),
                MoveKind::Swap21 => (2, 1),
                _ => (2, 2),
            };
            let symmetric = len1 == len2;
            for r1 in 0..m {
                let a = &sol.routes[r1];
                if a.len() < len1 {
                    continue;
                }
                let r2_start = if symmetric { r1 + 1 } else { 0 };
                for r2 in r2_start..m {
                    if r1 == r2 {
                        continue;
                    }
                    let b = &sol.routes[r2];
                    if b.len() < len2 {
                        continue;
                    }
                    for i in 0..=(a.len() - len1) {
                        let w1: u64 = a[i..i + len1].iter().map(|&v| inst.demand[v] as u64).sum();
                        let pa = at(a, i as isize - 1);
                        let sa = at(a, (i + len1) as isize);
                        for j in 0..=(b.len() - len2) {
                            let w2: u64 =
                                b[j..j + len2].iter().map(|&v| inst.demand[v] as u64).sum();
                            if sol.loads[r1] - w1 + w2 > q || sol.loads[r2] - w2 + w1 > q {
                                continue;
                            }
                            let pb = at(b, j as isize - 1);
                            let sb = at(b, (j + len2) as isize);
                            let delta = c(pa, b[j]) + c(b[j + len2 - 1], sa)
                                - c(pa, a[i])
                                - c(a[i + len1 - 1], sa)
                                + c(pb, a[i])
                                + c(a[i + len1 - 1], sb)
                                - c(pb, b[j])
                                - c(b[j + len2 - 1], sb);
                            f(Move {
                                kind,
                                r1,
                                r2,
                                i,
                                len1,
                                j,
                                len2,
                                rev1: false,
                                rev2: false,
                                delta,
                            });
                        }
                    }
                }
            }
        }
        MoveKind::TwoOptStar => {
            for r1 in 0..m {
                let a = &sol.routes[r1];
                for r2 in (r1 + 1)..m {
                    let b = &sol.routes[r2];
                    for i in 0..=a.len() {
                        let tail1: u64 = a[i..].iter().map(|&v| inst.demand[v] as u64).sum();
                        let head1 = sol.loads[r1] - tail1;
                        for j in 0..=b.len() {
                            if (i == 0 && j == 0) || (i == a.len() && j == b.len()) {
                                continue;
                            }
                            let tail2: u64 = b[j..].iter().map(|&v| inst.demand[v] as u64).sum();
                            let head2 = sol.loads[r2] - tail2;
                            if head1 + tail2 > q || head2 + tail1 > q {
                                continue;
                            }
                            let pa = at(a, i as isize - 1);
                            let ai = at(a, i as isize);
                            let pb = at(b, j as isize - 1);
                            let bj = at(b, j as isize);
                            let delta = c(pa, bj) + c(pb, ai) - c(pa, ai) - c(pb, bj);
                            f(Move {
                                kind,
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
        MoveKind::OrOpt => {
            for r in 0..m {
                let a = &sol.routes[r];
                let l = a.len();
                for len in 1..=3usize.min(l.saturating_sub(1)) {
                    for i in 0..=(l - len) {
                        let pa = at(a, i as isize - 1);
                        let sa = at(a, (i + len) as isize);
                        let removal = c(pa, sa) - c(pa, a[i]) - c(a[i + len - 1], sa);
                        for j in 0..=l {
                            if j >= i && j <= i + len {
                                continue;
                            }
                            let pb = at(a, j as isize - 1);
                            let sb = at(a, j as isize);
                            let insertion = c(pb, a[i]) + c(a[i + len - 1], sb) - c(pb, sb);
                            f(Move {
                                kind,
                                r1: r,
                                r2: r,
                                i,
                                len1: len,
                                j,
                                len2: 0,
                                rev1: false,
                                rev2: false,
                                delta: removal + insertion,
                            });
                        }
                    }
                }
            }
        }
        MoveKind::TwoOpt => {
            for r in 0..m {
                let a = &sol.routes[r];
                let l = a.len();
                if l < 2 {
                    continue;
                }
                for i in 0..(l - 1) {
                    let pa = at(a, i as isize - 1);
                    for j in (i + 1)..l {
                        if i == 0 && j == l - 1 {
                            continue;
                        }
                        let sa = at(a, j as isize + 1);
                        let delta = c(pa, a[j]) + c(a[i], sa) - c(pa, a[i]) - c(a[j], sa);
                        f(Move {
                            kind,
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
        MoveKind::IntraSwap => {
            for r in 0..m {
                let a = &sol.routes[r];
                let l = a.len();
                if l < 2 {
                    continue;
                }
                for i in 0..(l - 1) {
                    for j in (i + 1)..l {
                        let pa = at(a, i as isize - 1);
                        let si = at(a, i as isize + 1);
                        let pj = at(a, j as isize - 1);
                        let sj = at(a, j as isize + 1);
                        let delta = if j == i + 1 {
                            c(pa, a[j]) + c(a[i], sj) - c(pa, a[i]) - c(a[j], sj)
                        } else {
                            c(pa, a[j]) + c(a[j], si) + c(pj, a[i]) + c(a[i], sj)
                                - c(pa, a[i])
                                - c(a[i], si)
                                - c(pj, a[j])
                                - c(a[j], sj)
                        };
                        f(Move {
                            kind,
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
        MoveKind::EndpointMove | MoveKind::IntraClusterMove => {}
    }
}
