//! Random walk controversy (RWC).
//!
//! Walks start at a uniformly random non-hub node of one side and move along
//! out-edges proportionally to weight until they hit one of the `hub_k`
//! highest in-degree nodes of either side. A node without out-edges sends the
//! walker to a uniformly random non-hub node of the side it started on.
//!
//! `P_AB` is the probability that a walk started on side `A` ends at a hub of
//! side `B`. States that can never reach a hub are treated as leakage and the
//! probabilities are normalized over absorbed walks, which matches the restart
//! rule used by the Monte Carlo estimator.

use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedWeightedGraph, UserId};
use crate::partition::StanceLabel;

/// Below this many transient states the exact solver uses dense LU.
pub const DENSE_LIMIT: usize = 2000;
const RESIDUAL_TOLERANCE: f64 = 1e-10;
const MAX_SWEEPS: usize = 200_000;
const WALK_CHUNK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    X,
    Y,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::X => 0,
            Side::Y => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::X => "X",
            Side::Y => "Y",
        }
    }

    pub fn other(self) -> Self {
        match self {
            Side::X => Side::Y,
            Side::Y => Side::X,
        }
    }

    /// Skeptics are side X, advocates side Y.
    pub fn from_stance(label: StanceLabel) -> Option<Self> {
        match label {
            StanceLabel::Skeptic => Some(Side::X),
            StanceLabel::Advocate => Some(Side::Y),
            StanceLabel::Unassigned => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RwcMethod {
    Exact,
    Montecarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwcReport {
    pub pxx: f64,
    pub pxy: f64,
    pub pyx: f64,
    pub pyy: f64,
    pub rwc: f64,
    pub method: RwcMethod,
    pub hub_k: usize,
    pub walks: Option<u64>,
}

impl RwcReport {
    pub fn from_probabilities(
        [pxx, pxy, pyx, pyy]: [f64; 4],
        method: RwcMethod,
        hub_k: usize,
        walks: Option<u64>,
    ) -> Self {
        Self {
            pxx,
            pxy,
            pyx,
            pyy,
            rwc: pxx * pyy - pxy * pyx,
            method,
            hub_k,
            walks,
        }
    }

    pub fn probability(&self, from: Side, to: Side) -> f64 {
        match (from, to) {
            (Side::X, Side::X) => self.pxx,
            (Side::X, Side::Y) => self.pxy,
            (Side::Y, Side::X) => self.pyx,
            (Side::Y, Side::Y) => self.pyy,
        }
    }
}

/// Cross-side probabilities `(P_XY, P_YX)`.
pub fn mention_asymmetry(report: &RwcReport) -> (f64, f64) {
    (report.pxy, report.pyx)
}

/// Sides in graph order from a per-user map; every node must be labeled.
pub fn side_vector(g: &DirectedWeightedGraph, sides: &HashMap<UserId, Side>) -> Result<Vec<Side>> {
    g.ids()
        .iter()
        .map(|id| sides.get(id).copied().ok_or_else(|| Error::UnlabeledNode(id.clone())))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Dense LU below [`DENSE_LIMIT`] states, Gauss–Seidel above.
    #[default]
    Auto,
    Dense,
    Iterative,
}

/// The `hub_k` highest in-degree nodes of each side, ties broken by higher
/// in-strength and then by id.
pub fn select_hubs(g: &DirectedWeightedGraph, sides: &[Side], hub_k: usize) -> Result<[Vec<usize>; 2]> {
    if sides.len() != g.node_count() {
        return Err(Error::InvalidConfig(format!(
            "{} side labels for {} nodes",
            sides.len(),
            g.node_count()
        )));
    }
    if hub_k == 0 {
        return Err(Error::InvalidConfig("hub_k must be at least 1".into()));
    }
    let mut hubs = [Vec::new(), Vec::new()];
    for side in [Side::X, Side::Y] {
        let mut members: Vec<usize> = (0..g.node_count()).filter(|&v| sides[v] == side).collect();
        // at least one non-hub node must remain to start walks from
        if members.len() <= hub_k {
            return Err(Error::SideTooSmall {
                side: side.name(),
                found: members.len(),
                needed: hub_k + 1,
            });
        }
        members.sort_by(|&a, &b| {
            g.in_degree(b)
                .cmp(&g.in_degree(a))
                .then(g.in_strength(b).cmp(&g.in_strength(a)))
                .then(g.id(a).cmp(g.id(b)))
        });
        members.truncate(hub_k);
        members.sort_unstable();
        hubs[side.index()] = members;
    }
    Ok(hubs)
}

struct Chain<'a> {
    g: &'a DirectedWeightedGraph,
    sides: &'a [Side],
    hub_k: usize,
    is_hub: Vec<bool>,
}

impl<'a> Chain<'a> {
    fn new(g: &'a DirectedWeightedGraph, sides: &'a [Side], hub_k: usize) -> Result<Self> {
        let hubs = select_hubs(g, sides, hub_k)?;
        let mut is_hub = vec![false; g.node_count()];
        for &h in hubs.iter().flatten() {
            is_hub[h] = true;
        }
        Ok(Self {
            g,
            sides,
            hub_k,
            is_hub,
        })
    }

    fn starts(&self, side: Side) -> Vec<usize> {
        (0..self.g.node_count())
            .filter(|&v| self.sides[v] == side && !self.is_hub[v])
            .collect()
    }

    fn dangling(&self, v: usize) -> bool {
        self.g.out_degree(v) == 0
    }

    /// Non-hub nodes from which a walk started on the side owning `starts`
    /// can reach a hub.
    fn reaching(&self, starts: &[usize]) -> Vec<bool> {
        let g = self.g;
        let n = g.node_count();
        let mut reach = vec![false; n];
        let mut queue = VecDeque::new();
        let visit = |u: usize, reach: &mut Vec<bool>, queue: &mut VecDeque<usize>| {
            if !self.is_hub[u] && !reach[u] {
                reach[u] = true;
                queue.push_back(u);
            }
        };
        for h in (0..n).filter(|&v| self.is_hub[v]) {
            for &u in g.in_neighbors(h) {
                visit(u, &mut reach, &mut queue);
            }
        }
        let mut teleport_linked = false;
        loop {
            while let Some(v) = queue.pop_front() {
                for &u in g.in_neighbors(v) {
                    visit(u, &mut reach, &mut queue);
                }
            }
            if teleport_linked || !starts.iter().any(|&s| reach[s]) {
                break;
            }
            teleport_linked = true;
            for v in 0..n {
                if self.dangling(v) {
                    visit(v, &mut reach, &mut queue);
                }
            }
        }
        reach
    }

    fn check_absorbable(&self, side: Side, starts: &[usize], reach: &[bool]) -> Result<()> {
        if starts.iter().any(|&s| reach[s]) {
            Ok(())
        } else {
            Err(Error::Unabsorbable(side.name()))
        }
    }
}

/// Sparse row of the transient system `h_i = b_i + sum_j p_ij h_j`.
struct Row {
    entries: Vec<(usize, f64)>,
    absorb: [f64; 2],
    teleport: bool,
}

struct System {
    rows: Vec<Row>,
    /// Local indices of reachable start nodes, targets of teleport rows.
    teleport_targets: Vec<usize>,
    /// Number of start nodes, reachable or not.
    start_count: usize,
}

fn build_system(chain: &Chain, starts: &[usize], reach: &[bool]) -> (System, Vec<usize>) {
    let g = chain.g;
    let n = g.node_count();
    let mut local = vec![usize::MAX; n];
    let mut states = Vec::new();
    for v in 0..n {
        if reach[v] {
            local[v] = states.len();
            states.push(v);
        }
    }
    let rows = states
        .iter()
        .map(|&v| {
            if chain.dangling(v) {
                return Row {
                    entries: Vec::new(),
                    absorb: [0.0; 2],
                    teleport: true,
                };
            }
            let total = g.out_strength(v) as f64;
            let mut entries = Vec::with_capacity(g.out_degree(v));
            let mut absorb = [0.0; 2];
            for (&t, &w) in g.out_neighbors(v).iter().zip(g.out_weights(v)) {
                let p = w as f64 / total;
                if chain.is_hub[t] {
                    absorb[chain.sides[t].index()] += p;
                } else if reach[t] {
                    entries.push((local[t], p));
                }
            }
            Row {
                entries,
                absorb,
                teleport: false,
            }
        })
        .collect();
    let teleport_targets = starts.iter().filter(|&&s| reach[s]).map(|&s| local[s]).collect();
    (
        System {
            rows,
            teleport_targets,
            start_count: starts.len(),
        },
        local,
    )
}

fn solve_dense(sys: &System) -> Vec<[f64; 2]> {
    let m = sys.rows.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut b = DMatrix::<f64>::zeros(m, 2);
    let tp = 1.0 / sys.start_count as f64;
    for (i, row) in sys.rows.iter().enumerate() {
        if row.teleport {
            for &j in &sys.teleport_targets {
                a[(i, j)] -= tp;
            }
        }
        for &(j, p) in &row.entries {
            a[(i, j)] -= p;
        }
        b[(i, 0)] = row.absorb[0];
        b[(i, 1)] = row.absorb[1];
    }
    let lu = a.clone().lu();
    let mut x = lu.solve(&b).expect("absorbing system is nonsingular once non-reaching states are removed");
    // one round of iterative refinement
    let r = &b - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    (0..m).map(|i| [x[(i, 0)], x[(i, 1)]]).collect()
}

fn solve_iterative(sys: &System) -> Result<Vec<[f64; 2]>> {
    let m = sys.rows.len();
    let s = sys.start_count as f64;
    let mut is_target = vec![false; m];
    for &j in &sys.teleport_targets {
        is_target[j] = true;
    }
    let mut h = vec![[0.0f64; 2]; m];
    // running sum of h over teleport targets
    let mut tsum = [0.0f64; 2];
    let mut residual = f64::INFINITY;
    for sweep in 0..MAX_SWEEPS {
        for i in 0..m {
            let row = &sys.rows[i];
            let mut next = row.absorb;
            if row.teleport {
                if is_target[i] {
                    // h_i appears on its own right-hand side
                    for c in 0..2 {
                        next[c] = (tsum[c] - h[i][c]) / (s - 1.0);
                    }
                } else {
                    for c in 0..2 {
                        next[c] = tsum[c] / s;
                    }
                }
            }
            for &(j, p) in &row.entries {
                next[0] += p * h[j][0];
                next[1] += p * h[j][1];
            }
            if is_target[i] {
                for c in 0..2 {
                    tsum[c] += next[c] - h[i][c];
                }
            }
            h[i] = next;
        }
        if sweep % 8 == 7 || m < 64 {
            residual = system_residual(sys, &h);
            if residual <= RESIDUAL_TOLERANCE {
                return Ok(h);
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_SWEEPS,
        residual,
    })
}

fn system_residual(sys: &System, h: &[[f64; 2]]) -> f64 {
    let s = sys.start_count as f64;
    let mut tsum = [0.0; 2];
    for &j in &sys.teleport_targets {
        tsum[0] += h[j][0];
        tsum[1] += h[j][1];
    }
    let mut worst: f64 = 0.0;
    for (i, row) in sys.rows.iter().enumerate() {
        let mut rhs = row.absorb;
        if row.teleport {
            rhs[0] += tsum[0] / s;
            rhs[1] += tsum[1] / s;
        }
        for &(j, p) in &row.entries {
            rhs[0] += p * h[j][0];
            rhs[1] += p * h[j][1];
        }
        worst = worst.max((rhs[0] - h[i][0]).abs()).max((rhs[1] - h[i][1]).abs());
    }
    worst
}

fn normalize(mass: [f64; 2], side: Side) -> Result<[f64; 2]> {
    let total = mass[0] + mass[1];
    if total <= 0.0 {
        return Err(Error::Unabsorbable(side.name()));
    }
    Ok([mass[0] / total, mass[1] / total])
}

/// Exact RWC with the default solver choice.
pub fn rwc_exact(g: &DirectedWeightedGraph, sides: &[Side], hub_k: usize) -> Result<RwcReport> {
    rwc_exact_with(g, sides, hub_k, Solver::Auto)
}

pub fn rwc_exact_with(g: &DirectedWeightedGraph, sides: &[Side], hub_k: usize, solver: Solver) -> Result<RwcReport> {
    let chain = Chain::new(g, sides, hub_k)?;
    let mut p = [[0.0; 2]; 2];
    for side in [Side::X, Side::Y] {
        let starts = chain.starts(side);
        let reach = chain.reaching(&starts);
        chain.check_absorbable(side, &starts, &reach)?;
        let (sys, local) = build_system(&chain, &starts, &reach);
        let dense = match solver {
            Solver::Auto => sys.rows.len() < DENSE_LIMIT,
            Solver::Dense => true,
            Solver::Iterative => false,
        };
        let h = if dense {
            solve_dense(&sys)
        } else {
            solve_iterative(&sys)?
        };
        let mut mass = [0.0; 2];
        for &s in &starts {
            if reach[s] {
                mass[0] += h[local[s]][0];
                mass[1] += h[local[s]][1];
            }
        }
        p[side.index()] = normalize(mass, side)?;
    }
    Ok(RwcReport::from_probabilities(
        [p[0][0], p[0][1], p[1][0], p[1][1]],
        RwcMethod::Exact,
        chain.hub_k,
        None,
    ))
}

/// Monte Carlo RWC with `walks` walks per side. Walks longer than ten times
/// the node count restart from a fresh start node. Walks are simulated in
/// fixed-size chunks with one random stream per chunk, so the result does not
/// depend on the number of threads.
pub fn rwc_montecarlo(
    g: &DirectedWeightedGraph,
    sides: &[Side],
    hub_k: usize,
    walks: u64,
    seed: u64,
) -> Result<RwcReport> {
    if walks == 0 {
        return Err(Error::InvalidConfig("walks must be at least 1".into()));
    }
    let chain = Chain::new(g, sides, hub_k)?;
    let n = g.node_count();
    let mut cumulative = Vec::with_capacity(g.edge_count());
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for v in 0..n {
        let mut acc = 0u64;
        for &w in g.out_weights(v) {
            acc += w;
            cumulative.push(acc);
        }
        offsets.push(cumulative.len());
    }
    let cap = 10 * n;
    let mut p = [[0.0; 2]; 2];
    for side in [Side::X, Side::Y] {
        let starts = chain.starts(side);
        let reach = chain.reaching(&starts);
        chain.check_absorbable(side, &starts, &reach)?;
        let chunks = walks.div_ceil(WALK_CHUNK);
        let counts = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((side.index() as u64) << 32) | c);
                let len = WALK_CHUNK.min(walks - c * WALK_CHUNK);
                let mut counts = [0u64; 2];
                for _ in 0..len {
                    let end = 'walk: loop {
                        let mut v = starts[rng.gen_range(0..starts.len())];
                        for _ in 0..cap {
                            if chain.is_hub[v] {
                                break 'walk sides[v];
                            }
                            let (lo, hi) = (offsets[v], offsets[v + 1]);
                            v = if lo == hi {
                                starts[rng.gen_range(0..starts.len())]
                            } else {
                                let cum = &cumulative[lo..hi];
                                let r = rng.gen_range(0..cum[cum.len() - 1]);
                                g.out_neighbors(v)[cum.partition_point(|&c| c <= r)]
                            };
                        }
                    };
                    counts[end.index()] += 1;
                }
                counts
            })
            .reduce(|| [0, 0], |a, b| [a[0] + b[0], a[1] + b[1]]);
        p[side.index()] = [counts[0] as f64 / walks as f64, counts[1] as f64 / walks as f64];
    }
    Ok(RwcReport::from_probabilities(
        [p[0][0], p[0][1], p[1][0], p[1][1]],
        RwcMethod::Montecarlo,
        hub_k,
        Some(walks),
    ))
}
