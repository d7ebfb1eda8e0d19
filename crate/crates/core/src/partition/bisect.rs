//! Multilevel two-way partitioning.
//!
//! Coarsening contracts a heavy-edge matching until the graph is small,
//! the coarsest graph is split by greedy region growing (best of several
//! tries), and the split is projected back level by level with a
//! Fiduccia-Mattheyses pass at every level.

use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::SymmetricGraph;

const UNMATCHED: u32 = u32::MAX;

/// Undirected graph with integer vertex and edge weights.
#[derive(Debug, Clone)]
pub(crate) struct WeightedGraph {
    xadj: Vec<usize>,
    adjncy: Vec<u32>,
    adjwgt: Vec<i64>,
    vwgt: Vec<i64>,
}

impl WeightedGraph {
    pub(crate) fn from_symmetric(g: &SymmetricGraph) -> Self {
        Self {
            xadj: g.offsets.clone(),
            adjncy: g.neighbors.iter().map(|&v| v as u32).collect(),
            adjwgt: g.weights.iter().map(|&w| w as i64).collect(),
            vwgt: vec![1; g.node_count()],
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.vwgt.len()
    }

    fn edges(&self, v: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        let r = self.xadj[v]..self.xadj[v + 1];
        self.adjncy[r.clone()]
            .iter()
            .zip(&self.adjwgt[r])
            .map(|(&u, &w)| (u as usize, w))
    }

    fn total_vwgt(&self) -> i64 {
        self.vwgt.iter().sum()
    }

    fn max_vwgt(&self) -> i64 {
        self.vwgt.iter().copied().max().unwrap_or(0)
    }

    pub(crate) fn cut(&self, sides: &[u8]) -> i64 {
        let mut cut = 0;
        for v in 0..self.len() {
            for (u, w) in self.edges(v) {
                if sides[u] != sides[v] {
                    cut += w;
                }
            }
        }
        cut / 2
    }
}

/// Heavy-edge matching followed by contraction. Returns the coarse graph and
/// the fine-to-coarse vertex map.
fn coarsen<R: Rng>(g: &WeightedGraph, max_vwgt: i64, rng: &mut R) -> (WeightedGraph, Vec<u32>) {
    let n = g.len();
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(rng);

    let mut mate = vec![UNMATCHED; n];
    for &u in &perm {
        let u = u as usize;
        if mate[u] != UNMATCHED {
            continue;
        }
        let mut best: Option<(usize, i64)> = None;
        for (v, w) in g.edges(u) {
            if mate[v] == UNMATCHED
                && v != u
                && g.vwgt[u] + g.vwgt[v] <= max_vwgt
                && best.map_or(true, |(_, bw)| w > bw)
            {
                best = Some((v, w));
            }
        }
        match best {
            Some((v, _)) => {
                mate[u] = v as u32;
                mate[v] = u as u32;
            }
            None => mate[u] = u as u32,
        }
    }

    let mut cmap = vec![UNMATCHED; n];
    let mut nc = 0u32;
    for &u in &perm {
        let u = u as usize;
        if cmap[u] == UNMATCHED {
            cmap[u] = nc;
            cmap[mate[u] as usize] = nc;
            nc += 1;
        }
    }

    let nc = nc as usize;
    let mut members: Vec<[u32; 2]> = vec![[UNMATCHED; 2]; nc];
    for &u in &perm {
        let c = cmap[u as usize] as usize;
        if members[c][0] == UNMATCHED {
            members[c][0] = u;
        } else if members[c][0] != u {
            members[c][1] = u;
        }
    }

    let mut xadj = Vec::with_capacity(nc + 1);
    let mut adjncy = Vec::with_capacity(g.adjncy.len());
    let mut adjwgt = Vec::with_capacity(g.adjncy.len());
    let mut vwgt = Vec::with_capacity(nc);
    let mut slot = vec![usize::MAX; nc];
    xadj.push(0);
    for (c, pair) in members.iter().enumerate() {
        let start = adjncy.len();
        let mut weight = 0;
        for &m in pair.iter().filter(|&&m| m != UNMATCHED) {
            let m = m as usize;
            weight += g.vwgt[m];
            for (v, w) in g.edges(m) {
                let cv = cmap[v] as usize;
                if cv == c {
                    continue;
                }
                if slot[cv] == usize::MAX || slot[cv] < start {
                    slot[cv] = adjncy.len();
                    adjncy.push(cv as u32);
                    adjwgt.push(w);
                } else {
                    adjwgt[slot[cv]] += w;
                }
            }
        }
        vwgt.push(weight);
        xadj.push(adjncy.len());
    }
    (
        WeightedGraph {
            xadj,
            adjncy,
            adjwgt,
            vwgt,
        },
        cmap,
    )
}

/// Balance target for side 0 and the allowed deviation.
#[derive(Debug, Clone, Copy)]
struct Balance {
    target0: f64,
    window: f64,
    /// Extra deviation tolerated in the middle of a refinement pass.
    slack: f64,
}

impl Balance {
    fn excess(&self, weight0: i64) -> f64 {
        ((weight0 as f64 - self.target0).abs() - self.window).max(0.0)
    }
}

/// Internal and external edge weight of each vertex under the current split.
struct Gains {
    internal: Vec<i64>,
    external: Vec<i64>,
}

impl Gains {
    fn compute(g: &WeightedGraph, sides: &[u8]) -> Self {
        let mut internal = vec![0; g.len()];
        let mut external = vec![0; g.len()];
        for v in 0..g.len() {
            for (u, w) in g.edges(v) {
                if sides[u] == sides[v] {
                    internal[v] += w;
                } else {
                    external[v] += w;
                }
            }
        }
        Self { internal, external }
    }

    fn gain(&self, v: usize) -> i64 {
        self.external[v] - self.internal[v]
    }
}

fn move_vertex(g: &WeightedGraph, sides: &mut [u8], gains: &mut Gains, v: usize) {
    let from = sides[v];
    sides[v] = 1 - from;
    std::mem::swap(&mut gains.internal[v], &mut gains.external[v]);
    for (u, w) in g.edges(v) {
        if sides[u] == from {
            gains.internal[u] -= w;
            gains.external[u] += w;
        } else {
            gains.internal[u] += w;
            gains.external[u] -= w;
        }
    }
}

fn side0_weight(g: &WeightedGraph, sides: &[u8]) -> i64 {
    sides
        .iter()
        .zip(&g.vwgt)
        .filter(|(&s, _)| s == 0)
        .map(|(_, &w)| w)
        .sum()
}

/// Fiduccia-Mattheyses refinement. Each pass moves every vertex at most once,
/// highest gain first, then rolls back to the best prefix under the ordering
/// (balance excess, cut). Returns the final cut.
fn fm_refine(
    g: &WeightedGraph,
    sides: &mut [u8],
    balance: Balance,
    max_passes: usize,
    keys: &[u32],
) -> i64 {
    let n = g.len();
    let mut gains = Gains::compute(g, sides);
    let mut cut: i64 = gains.external.iter().sum::<i64>() / 2;
    let mut weight0 = side0_weight(g, sides);
    let stall_limit = ((n as f64 * 0.01) as usize).clamp(15, 100);
    let mut locked = vec![false; n];

    for _ in 0..max_passes {
        let mut heaps: [BinaryHeap<(i64, u32, u32)>; 2] = [BinaryHeap::new(), BinaryHeap::new()];
        for v in 0..n {
            if gains.external[v] > 0 || balance.excess(weight0) > 0.0 {
                heaps[sides[v] as usize].push((gains.gain(v), keys[v], v as u32));
            }
        }
        locked.iter_mut().for_each(|l| *l = false);

        let mut moves: Vec<usize> = Vec::new();
        let mut best = (balance.excess(weight0), cut);
        let mut best_len = 0;

        loop {
            // drop stale heap entries
            for side in 0..2 {
                while let Some(&(gain, _, v)) = heaps[side].peek() {
                    let v = v as usize;
                    if locked[v] || sides[v] as usize != side || gains.gain(v) != gain {
                        heaps[side].pop();
                    } else {
                        break;
                    }
                }
            }
            let after_move = |side: usize, v: usize| {
                if side == 0 {
                    weight0 - g.vwgt[v]
                } else {
                    weight0 + g.vwgt[v]
                }
            };
            let allowed = |side: usize, v: usize| {
                let w0 = after_move(side, v);
                (w0 as f64 - balance.target0).abs() <= balance.window + balance.slack
            };

            let from = if balance.excess(weight0) > 0.0 {
                let heavy = if weight0 as f64 > balance.target0 { 0 } else { 1 };
                heaps[heavy].peek().map(|_| heavy)
            } else {
                let candidates = [0usize, 1].map(|s| {
                    heaps[s]
                        .peek()
                        .filter(|&&(_, _, v)| allowed(s, v as usize))
                        .map(|&(gain, _, _)| gain)
                });
                match candidates {
                    [Some(a), Some(b)] => Some(if b > a { 1 } else { 0 }),
                    [Some(_), None] => Some(0),
                    [None, Some(_)] => Some(1),
                    [None, None] => None,
                }
            };
            let Some(side) = from else { break };
            let (gain, _, v) = heaps[side].pop().expect("peeked");
            let v = v as usize;

            weight0 = after_move(side, v);
            cut -= gain;
            locked[v] = true;
            move_vertex(g, sides, &mut gains, v);
            moves.push(v);
            for (u, _) in g.edges(v) {
                if !locked[u] {
                    heaps[sides[u] as usize].push((gains.gain(u), keys[u], u as u32));
                }
            }

            let state = (balance.excess(weight0), cut);
            if state.0 < best.0 || (state.0 == best.0 && state.1 < best.1) {
                best = state;
                best_len = moves.len();
            } else if moves.len() - best_len > stall_limit {
                break;
            }
        }

        for &v in moves[best_len..].iter().rev() {
            let side = sides[v] as usize;
            weight0 += if side == 0 { -g.vwgt[v] } else { g.vwgt[v] };
            cut -= gains.gain(v);
            move_vertex(g, sides, &mut gains, v);
        }
        debug_assert_eq!(cut, g.cut(sides));
        if best_len == 0 {
            break;
        }
    }
    cut
}

/// Greedy region growing from `seed`: side 0 absorbs the frontier vertex with
/// the highest gain until it reaches its target weight.
fn grow_region<R: Rng>(g: &WeightedGraph, balance: Balance, keys: &[u32], rng: &mut R) -> Vec<u8> {
    let n = g.len();
    let mut sides = vec![1u8; n];
    let mut gains = Gains::compute(g, &sides);
    let mut weight0 = 0i64;
    let mut skipped = vec![false; n];
    let mut heap: BinaryHeap<(i64, u32, u32)> = BinaryHeap::new();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);
    let mut fallback = order.into_iter();

    while (weight0 as f64) < balance.target0 {
        let next = loop {
            match heap.pop() {
                Some((gain, _, v)) => {
                    let v = v as usize;
                    if sides[v] == 1 && !skipped[v] && gains.gain(v) == gain {
                        break Some(v);
                    }
                }
                None => {
                    // frontier exhausted: jump to an untouched vertex
                    break fallback
                        .by_ref()
                        .map(|v| v as usize)
                        .find(|&v| sides[v] == 1 && !skipped[v]);
                }
            }
        };
        let Some(v) = next else { break };
        if weight0 as f64 + g.vwgt[v] as f64 > balance.target0 + balance.window {
            skipped[v] = true;
            continue;
        }
        weight0 += g.vwgt[v];
        move_vertex(g, &mut sides, &mut gains, v);
        for (u, _) in g.edges(v) {
            if sides[u] == 1 && !skipped[u] {
                heap.push((gains.gain(u), keys[u], u as u32));
            }
        }
    }
    sides
}

/// Random tie-break priorities so equal-gain moves differ between runs.
fn random_keys<R: Rng>(n: usize, rng: &mut R) -> Vec<u32> {
    (0..n).map(|_| rng.gen()).collect()
}

/// Cut of one level before and after refinement, coarsest level first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelTrace {
    pub vertices: usize,
    pub cut_before: i64,
    pub cut_after: i64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BisectParams {
    /// Target side-1 to side-0 weight ratio, at least 1.
    pub ratio: f64,
    /// Allowed deviation of side 0 from its target, as a fraction of the
    /// total vertex weight.
    pub tolerance: f64,
    pub coarsen_stop: usize,
    pub initial_tries: usize,
    pub max_passes: usize,
}

pub(crate) struct BisectOutcome {
    pub sides: Vec<u8>,
    pub cut: i64,
    pub trace: Vec<LevelTrace>,
}

fn balance_for(g: &WeightedGraph, params: &BisectParams, total: i64) -> Balance {
    let max_vwgt = g.max_vwgt() as f64;
    Balance {
        target0: total as f64 / (1.0 + params.ratio),
        window: (params.tolerance * total as f64).max(max_vwgt / 2.0).max(0.5),
        slack: max_vwgt,
    }
}

pub(crate) fn bisect<R: Rng>(g: &WeightedGraph, params: &BisectParams, rng: &mut R) -> BisectOutcome {
    let total = g.total_vwgt();
    // Capping coarse vertex weights at twice the tolerance keeps the balance
    // window identical on every level, so a projected split stays feasible.
    let max_coarse_vwgt = ((1.5 * total as f64) / params.coarsen_stop.max(1) as f64)
        .ceil()
        .min((2.0 * params.tolerance * total as f64).floor()) as i64;

    let mut levels: Vec<WeightedGraph> = Vec::new();
    let mut maps: Vec<Vec<u32>> = Vec::new();
    {
        let mut current = g;
        while current.len() > params.coarsen_stop {
            let (coarse, cmap) = coarsen(current, max_coarse_vwgt.max(2), rng);
            if coarse.len() as f64 > 0.95 * current.len() as f64 {
                break;
            }
            levels.push(coarse);
            maps.push(cmap);
            current = levels.last().expect("just pushed");
        }
    }

    let coarsest = levels.last().unwrap_or(g);
    let balance = balance_for(coarsest, params, total);
    let mut best: Option<(f64, i64, Vec<u8>)> = None;
    let mut trace = Vec::with_capacity(levels.len() + 1);
    let mut first_cut = 0;
    for _ in 0..params.initial_tries.max(1) {
        let keys = random_keys(coarsest.len(), rng);
        let mut sides = grow_region(coarsest, balance, &keys, rng);
        let before = coarsest.cut(&sides);
        let cut = fm_refine(coarsest, &mut sides, balance, params.max_passes, &keys);
        let excess = balance.excess(side0_weight(coarsest, &sides));
        let better = match &best {
            None => true,
            Some((be, bc, _)) => excess < *be || (excess == *be && cut < *bc),
        };
        if better {
            first_cut = before;
            best = Some((excess, cut, sides));
        }
    }
    let (_, mut cut, mut sides) = best.expect("at least one try");
    trace.push(LevelTrace {
        vertices: coarsest.len(),
        cut_before: first_cut,
        cut_after: cut,
    });

    for depth in (0..levels.len()).rev() {
        let fine = if depth == 0 { g } else { &levels[depth - 1] };
        let cmap = &maps[depth];
        let projected: Vec<u8> = cmap.iter().map(|&c| sides[c as usize]).collect();
        sides = projected;
        let before = cut;
        debug_assert_eq!(before, fine.cut(&sides));
        let keys = random_keys(fine.len(), rng);
        cut = fm_refine(fine, &mut sides, balance_for(fine, params, total), params.max_passes, &keys);
        trace.push(LevelTrace {
            vertices: fine.len(),
            cut_before: before,
            cut_after: cut,
        });
    }

    ensure_nonempty(g, &mut sides);
    let cut = g.cut(&sides);
    BisectOutcome { sides, cut, trace }
}

/// Moves the cheapest vertex over if one side ended up empty.
fn ensure_nonempty(g: &WeightedGraph, sides: &mut [u8]) {
    if g.len() < 2 {
        return;
    }
    for empty in 0..2u8 {
        if sides.iter().all(|&s| s != empty) {
            let gains = Gains::compute(g, sides);
            let v = (0..g.len()).max_by_key(|&v| (gains.gain(v), std::cmp::Reverse(v))).unwrap();
            sides[v] = empty;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedWeightedGraph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(ratio: f64) -> BisectParams {
        BisectParams {
            ratio,
            tolerance: 0.03,
            coarsen_stop: 20,
            initial_tries: 4,
            max_passes: 10,
        }
    }

    fn grid(w: usize, h: usize) -> WeightedGraph {
        let mut edges = Vec::new();
        let name = |x: usize, y: usize| format!("{x:03}_{y:03}");
        for x in 0..w {
            for y in 0..h {
                if x + 1 < w {
                    edges.push((name(x, y), name(x + 1, y)));
                }
                if y + 1 < h {
                    edges.push((name(x, y), name(x, y + 1)));
                }
            }
        }
        let g = DirectedWeightedGraph::from_edges(edges.iter().map(|(a, b)| (a.as_str(), b.as_str(), 1)));
        WeightedGraph::from_symmetric(&g.symmetrized())
    }

    #[test]
    fn coarsening_preserves_weights() {
        let g = grid(10, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (c, cmap) = coarsen(&g, 4, &mut rng);
        assert!(c.len() < g.len());
        assert_eq!(c.total_vwgt(), g.total_vwgt());
        let fine_total: i64 = g.adjwgt.iter().sum();
        let coarse_total: i64 = c.adjwgt.iter().sum();
        let internal: i64 = (0..g.len())
            .flat_map(|v| g.edges(v).map(move |(u, w)| (v, u, w)))
            .filter(|&(v, u, _)| cmap[v] == cmap[u])
            .map(|(_, _, w)| w)
            .sum();
        assert_eq!(coarse_total, fine_total - internal);
    }

    #[test]
    fn fm_never_worsens_a_balanced_start() {
        let g = grid(12, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut sides: Vec<u8> = (0..g.len()).map(|i| (i % 2) as u8).collect();
            sides.shuffle(&mut rng);
            let before = g.cut(&sides);
            let balance = Balance {
                target0: 72.0,
                window: 4.0,
                slack: 1.0,
            };
            let keys = random_keys(g.len(), &mut rng);
            let after = fm_refine(&g, &mut sides, balance, 10, &keys);
            assert!(after <= before);
            assert_eq!(after, g.cut(&sides));
            assert!((side0_weight(&g, &sides) - 72).abs() <= 4);
        }
    }

    #[test]
    fn grid_bisection_is_near_optimal() {
        let g = grid(20, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = bisect(&g, &params(1.0), &mut rng);
        let w0 = out.sides.iter().filter(|&&s| s == 0).count() as i64;
        assert!((w0 - 200).abs() <= 12);
        // the optimum is a straight cut of 20 edges
        assert!(out.cut <= 30, "cut {}", out.cut);
        for level in &out.trace[1..] {
            assert!(level.cut_after <= level.cut_before);
        }
    }

    #[test]
    fn honours_uneven_ratio() {
        let g = grid(20, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = bisect(&g, &params(3.0), &mut rng);
        let w0 = out.sides.iter().filter(|&&s| s == 0).count() as f64;
        assert!((w0 - 100.0).abs() <= 12.0, "side 0 weight {w0}");
    }
}
