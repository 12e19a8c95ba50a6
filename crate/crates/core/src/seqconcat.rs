//! Route evaluation by subsequence concatenation.
//!
//! A route is an ordered sequence of clusters. For any subsequence the matrix
//! `S[i, j]` holds the optimal cost of traversing all its clusters entering
//! the first cluster at customer i and leaving the last cluster at customer
//! j, with intra-cluster legs taken from the precomputed Hamiltonian-path
//! table. Concatenating two subsequences is a min-plus product over the exit
//! customers of the left part and the entry customers of the right part, so
//! any local-search move can be priced as a recombination of a few
//! preprocessed pieces in O(B^2) per junction instead of re-scanning the
//! whole route.
//!
//! Unreachable entries are IEEE +infinity: additions saturate and the min in
//! the merge formula needs no special cases.

use crate::hampath::PathCostTable;
use crate::instance::{CostMatrix, Instance};

/// Shared read-only context for route evaluations.
#[derive(Clone, Copy)]
pub struct EvalCtx<'a> {
    pub inst: &'a Instance,
    pub costs: &'a CostMatrix,
    pub table: &'a PathCostTable,
}

impl<'a> EvalCtx<'a> {
    pub fn new(inst: &'a Instance, costs: &'a CostMatrix, table: &'a PathCostTable) -> Self {
        EvalCtx { inst, costs, table }
    }

    fn members(&self, cluster: usize) -> &[usize] {
        &self.table.cluster(cluster).members
    }
}

/// A run of consecutive clusters with its entry/exit shortest-path matrix and
/// aggregate load.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsequence {
    /// First and last cluster ids of the run.
    pub first: usize,
    pub last: usize,
    /// Row count: entry customers of `first`. Column count: exit customers of `last`.
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols` matrix of optimal internal path costs.
    pub s: Vec<f64>,
    /// Total demand over all covered clusters.
    pub load: u64,
}

impl Subsequence {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.s[i * self.cols + j]
    }
}

/// Subsequence of a single cluster: `S[i,i] = +inf` unless the cluster is a
/// singleton, `S[i,j]` the optimal Hamiltonian-path cost otherwise.
pub fn init_single(ctx: &EvalCtx, cluster: usize) -> Subsequence {
    let paths = ctx.table.cluster(cluster);
    let l = paths.lambda();
    let load = ctx.inst.cluster_demand(cluster);
    Subsequence {
        first: cluster,
        last: cluster,
        rows: l,
        cols: l,
        s: paths.cost.clone(),
        load,
    }
}

/// Merge of two adjacent subsequences:
/// `S(a + b)[i,j] = min over exits x of a, entries y of b of
/// S(a)[i,x] + c(x,y) + S(b)[y,j]`.
pub fn concat(ctx: &EvalCtx, a: &Subsequence, b: &Subsequence) -> Subsequence {
    let exits = ctx.members(a.last);
    let entries = ctx.members(b.first);
    let rows = a.rows;
    let cols = b.cols;
    let mut s = vec![f64::INFINITY; rows * cols];
    // Two passes keep this O(B^2) per output row instead of O(B^2) per cell:
    // first the best cost from row i to each entry y, then on to each exit j.
    let mut to_entry = vec![f64::INFINITY; entries.len()];
    for i in 0..rows {
        for v in to_entry.iter_mut() {
            *v = f64::INFINITY;
        }
        for x in 0..a.cols {
            let base = a.at(i, x);
            if !base.is_finite() {
                continue;
            }
            for (y, &ey) in entries.iter().enumerate() {
                let cand = base + ctx.costs.at(exits[x], ey);
                if cand < to_entry[y] {
                    to_entry[y] = cand;
                }
            }
        }
        for j in 0..cols {
            let mut best = f64::INFINITY;
            for y in 0..entries.len() {
                let cand = to_entry[y] + b.at(y, j);
                if cand < best {
                    best = cand;
                }
            }
            s[i * cols + j] = best;
        }
    }
    Subsequence {
        first: a.first,
        last: b.last,
        rows,
        cols,
        s,
        load: a.load + b.load,
    }
}

/// A preprocessed piece used in move evaluation; `reversed` reads the
/// matrix transposed, which is valid because edge costs are symmetric.
#[derive(Clone, Copy)]
pub struct Piece<'a> {
    pub seq: &'a Subsequence,
    pub reversed: bool,
}

impl<'a> Piece<'a> {
    pub fn fwd(seq: &'a Subsequence) -> Self {
        Piece { seq, reversed: false }
    }

    pub fn rev(seq: &'a Subsequence) -> Self {
        Piece { seq, reversed: true }
    }

    fn entry_cluster(&self) -> usize {
        if self.reversed {
            self.seq.last
        } else {
            self.seq.first
        }
    }

    fn exit_cluster(&self) -> usize {
        if self.reversed {
            self.seq.first
        } else {
            self.seq.last
        }
    }

    fn entry_len(&self) -> usize {
        if self.reversed {
            self.seq.cols
        } else {
            self.seq.rows
        }
    }

    fn exit_len(&self) -> usize {
        if self.reversed {
            self.seq.rows
        } else {
            self.seq.cols
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        if self.reversed {
            self.seq.at(j, i)
        } else {
            self.seq.at(i, j)
        }
    }
}

/// Cost of the route formed by laying the pieces end to end between two
/// depot visits. Work is O(B^2) per junction; an empty piece list prices the
/// empty route at 0.
pub fn evaluate_pieces(ctx: &EvalCtx, pieces: &[Piece]) -> f64 {
    if pieces.is_empty() {
        return 0.0;
    }
    let first = &pieces[0];
    let mut exit_best: Vec<f64> = {
        let entries = ctx.members(first.entry_cluster());
        let mut v = vec![f64::INFINITY; first.exit_len()];
        for j in 0..first.exit_len() {
            let mut best = f64::INFINITY;
            for (i, &ei) in entries.iter().enumerate().take(first.entry_len()) {
                let cand = ctx.costs.at(0, ei) + first.at(i, j);
                if cand < best {
                    best = cand;
                }
            }
            v[j] = best;
        }
        v
    };
    let mut exit_cluster = first.exit_cluster();
    for piece in &pieces[1..] {
        let exits = ctx.members(exit_cluster);
        let entries = ctx.members(piece.entry_cluster());
        let mut to_entry = vec![f64::INFINITY; entries.len()];
        for (x, &ex) in exits.iter().enumerate() {
            let base = exit_best[x];
            if !base.is_finite() {
                continue;
            }
            for (y, &ey) in entries.iter().enumerate() {
                let cand = base + ctx.costs.at(ex, ey);
                if cand < to_entry[y] {
                    to_entry[y] = cand;
                }
            }
        }
        let mut next = vec![f64::INFINITY; piece.exit_len()];
        for j in 0..piece.exit_len() {
            let mut best = f64::INFINITY;
            for y in 0..entries.len() {
                let cand = to_entry[y] + piece.at(y, j);
                if cand < best {
                    best = cand;
                }
            }
            next[j] = best;
        }
        exit_best = next;
        exit_cluster = piece.exit_cluster();
    }
    let exits = ctx.members(exit_cluster);
    let mut total = f64::INFINITY;
    for (x, &ex) in exits.iter().enumerate() {
        let cand = exit_best[x] + ctx.costs.at(ex, 0);
        if cand < total {
            total = cand;
        }
    }
    total
}

/// Total demand carried by a piece list.
pub fn pieces_load(pieces: &[Piece]) -> u64 {
    pieces.iter().map(|p| p.seq.load).sum()
}

/// Optimal cost of a route given as a cluster sequence (0 for an empty route).
pub fn route_cost(ctx: &EvalCtx, clusters: &[usize]) -> f64 {
    if clusters.is_empty() {
        return 0.0;
    }
    let mut acc = init_single(ctx, clusters[0]);
    for &k in &clusters[1..] {
        let next = init_single(ctx, k);
        acc = concat(ctx, &acc, &next);
    }
    subsequence_route_cost(ctx, &acc)
}

/// Closes a subsequence with the two depot arcs: min over entry i and exit j
/// of `c(0,i) + S[i,j] + c(j,0)`.
pub fn subsequence_route_cost(ctx: &EvalCtx, seq: &Subsequence) -> f64 {
    let entries = ctx.members(seq.first);
    let exits = ctx.members(seq.last);
    let mut best = f64::INFINITY;
    for i in 0..seq.rows {
        for j in 0..seq.cols {
            let cand = ctx.costs.at(0, entries[i]) + seq.at(i, j) + ctx.costs.at(exits[j], 0);
            if cand < best {
                best = cand;
            }
        }
    }
    best
}

/// Decodes a cluster sequence into the optimal customer visit order (depot
/// excluded). The summed edge costs of the result equal [`route_cost`].
///
/// Entry/exit choices are recovered by a forward pass over the layered
/// cluster graph with argmin backtracking, then each cluster is expanded with
/// the visit order stored in the path table. Ties break toward the lowest
/// customer index, making decoding deterministic.
pub fn decode_customers(ctx: &EvalCtx, clusters: &[usize]) -> Vec<usize> {
    if clusters.is_empty() {
        return Vec::new();
    }
    let k = clusters.len();
    // f[t][j]: best cost from the depot through clusters 0..=t, leaving
    // cluster t at exit index j.
    let mut f: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut entry_choice: Vec<Vec<usize>> = Vec::with_capacity(k); // argmin entry per (t, exit)
    let mut prev_exit_choice: Vec<Vec<usize>> = Vec::with_capacity(k); // argmin prev exit per (t, entry)

    for (t, &cl) in clusters.iter().enumerate() {
        let paths = ctx.table.cluster(cl);
        let l = paths.lambda();
        let members = &paths.members;
        // g[y]: best cost from depot to entering this cluster at entry y.
        let mut g = vec![f64::INFINITY; l];
        let mut g_prev = vec![usize::MAX; l];
        if t == 0 {
            for (y, &ey) in members.iter().enumerate() {
                g[y] = ctx.costs.at(0, ey);
            }
        } else {
            let prev_members = ctx.members(clusters[t - 1]);
            let fp = &f[t - 1];
            for (y, &ey) in members.iter().enumerate() {
                for (x, &ex) in prev_members.iter().enumerate() {
                    let cand = fp[x] + ctx.costs.at(ex, ey);
                    if cand < g[y] {
                        g[y] = cand;
                        g_prev[y] = x;
                    }
                }
            }
        }
        let mut ft = vec![f64::INFINITY; l];
        let mut ec = vec![usize::MAX; l];
        for j in 0..l {
            for y in 0..l {
                let leg = if l == 1 { 0.0 } else { paths.cost_at(y, j) };
                if l > 1 && y == j {
                    continue;
                }
                let cand = g[y] + leg;
                if cand < ft[j] {
                    ft[j] = cand;
                    ec[j] = y;
                }
            }
        }
        f.push(ft);
        entry_choice.push(ec);
        prev_exit_choice.push(g_prev);
    }

    // Close the route at the depot.
    let last_members = ctx.members(clusters[k - 1]);
    let mut best = f64::INFINITY;
    let mut exit = usize::MAX;
    for (j, &ej) in last_members.iter().enumerate() {
        let cand = f[k - 1][j] + ctx.costs.at(ej, 0);
        if cand < best {
            best = cand;
            exit = j;
        }
    }

    // Backtrack entry/exit per cluster, then expand stored path orders.
    let mut pairs = vec![(usize::MAX, usize::MAX); k];
    let mut j = exit;
    for t in (0..k).rev() {
        let y = entry_choice[t][j];
        pairs[t] = (y, j);
        if t > 0 {
            j = prev_exit_choice[t][y];
        }
    }
    let mut out = Vec::with_capacity(ctx.inst.n());
    for (t, &cl) in clusters.iter().enumerate() {
        let paths = ctx.table.cluster(cl);
        let (y, j) = pairs[t];
        out.extend_from_slice(paths.order_at(y, j));
    }
    out
}

/// All-pairs subsequence table of one route: `S(sigma_u..v)` for every
/// `0 <= u <= v < K`, built left to right in O(K^2 B^2).
#[derive(Debug, Clone)]
pub struct RoutePreproc {
    len: usize,
    seqs: Vec<Subsequence>,
}

impl RoutePreproc {
    pub fn build(ctx: &EvalCtx, clusters: &[usize]) -> Self {
        let k = clusters.len();
        let mut seqs = Vec::with_capacity(k * (k + 1) / 2);
        for u in 0..k {
            let mut acc = init_single(ctx, clusters[u]);
            seqs.push(acc.clone());
            for &cl in &clusters[u + 1..] {
                let next = init_single(ctx, cl);
                acc = concat(ctx, &acc, &next);
                seqs.push(acc.clone());
            }
        }
        RoutePreproc { len: k, seqs }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Subsequence spanning cluster positions `u..=v`.
    pub fn get(&self, u: usize, v: usize) -> &Subsequence {
        debug_assert!(u <= v && v < self.len);
        // Packed upper triangle: row u holds the len-u spans starting at u.
        let start = u * self.len - u * u.saturating_sub(1) / 2;
        &self.seqs[start + (v - u)]
    }

    pub fn piece(&self, u: usize, v: usize, reversed: bool) -> Piece<'_> {
        Piece {
            seq: self.get(u, v),
            reversed,
        }
    }
}
