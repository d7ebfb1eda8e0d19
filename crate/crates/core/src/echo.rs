//! Echo-chamber metrics: neighborhood leanings, topology spectra and
//! community structure.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{DirectedWeightedGraph, UserId};
use crate::partition::StanceLabel;

/// Average leaning of a user's in- and out-neighbors. Neighbors without a
/// score are ignored; an average is `None` when no scored neighbor exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborLeaning {
    pub user: UserId,
    pub own: f64,
    pub in_avg: Option<f64>,
    pub out_avg: Option<f64>,
}

fn mean_of<I: Iterator<Item = f64>>(values: I) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Unweighted neighbor averages for every scored node of `g`.
pub fn neighbor_leanings(g: &DirectedWeightedGraph, scores: &HashMap<UserId, f64>) -> Vec<NeighborLeaning> {
    let by_index: Vec<Option<f64>> = g.ids().iter().map(|id| scores.get(id).copied()).collect();
    (0..g.node_count())
        .filter_map(|v| {
            let own = by_index[v]?;
            Some(NeighborLeaning {
                user: g.id(v).clone(),
                own,
                in_avg: mean_of(g.in_neighbors(v).iter().filter_map(|&u| by_index[u])),
                out_avg: mean_of(g.out_neighbors(v).iter().filter_map(|&u| by_index[u])),
            })
        })
        .collect()
}

/// Records of users carrying `side` in `labels`.
pub fn filter_side<'a>(
    records: &'a [NeighborLeaning],
    labels: &'a HashMap<UserId, StanceLabel>,
    side: StanceLabel,
) -> impl Iterator<Item = &'a NeighborLeaning> + 'a {
    records.iter().filter(move |r| labels.get(&r.user) == Some(&side))
}

/// Pearson correlation of own score against the out-neighbor average over
/// records that have one.
pub fn own_out_correlation(records: &[NeighborLeaning]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = records.iter().filter_map(|r| Some((r.own, r.out_avg?))).collect();
    pearson(&pairs)
}

pub fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    if pairs.len() < 2 {
        return None;
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Joint histogram of `(in_avg, out_avg)` on a `bins x bins` grid over
/// `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaningDensity {
    pub bins: usize,
    /// Row-major by in-bin.
    pub counts: Vec<u64>,
}

impl LeaningDensity {
    pub fn get(&self, in_bin: usize, out_bin: usize) -> u64 {
        self.counts[in_bin * self.bins + out_bin]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bin of `x` in `[0, 1]`; 1.0 falls in the last bin.
pub fn unit_bin(x: f64, bins: usize) -> usize {
    ((x * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

/// Users lacking either average are skipped.
pub fn leaning_density<'a, I>(records: I, bins: usize) -> Result<LeaningDensity>
where
    I: IntoIterator<Item = &'a NeighborLeaning>,
{
    if bins < 2 {
        return Err(Error::InvalidConfig("density needs at least 2 bins".into()));
    }
    let mut counts = vec![0u64; bins * bins];
    for r in records {
        if let (Some(i), Some(o)) = (r.in_avg, r.out_avg) {
            counts[unit_bin(i, bins) * bins + unit_bin(o, bins)] += 1;
        }
    }
    Ok(LeaningDensity { bins, counts })
}

/// Degree binning for spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binning {
    /// `[0,1)`, `[1,2)`, `[2,4)`, `[4,8)`, ...
    Log2,
    /// `[0,w)`, `[w,2w)`, ...
    Linear(usize),
}

impl Binning {
    /// Half-open `[lo, hi)` bin containing `degree`.
    pub fn bin(self, degree: usize) -> (usize, usize) {
        match self {
            Binning::Log2 => {
                if degree == 0 {
                    (0, 1)
                } else {
                    let lo = 1usize << (usize::BITS - 1 - degree.leading_zeros());
                    (lo, lo * 2)
                }
            }
            Binning::Linear(w) => {
                let lo = degree / w * w;
                (lo, lo + w)
            }
        }
    }
}

impl fmt::Display for Binning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binning::Log2 => f.write_str("log2"),
            Binning::Linear(w) => write!(f, "linear:{w}"),
        }
    }
}

impl FromStr for Binning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "log2" {
            return Ok(Binning::Log2);
        }
        match s.strip_prefix("linear:").map(str::parse::<usize>) {
            Some(Ok(w)) if w > 0 => Ok(Binning::Linear(w)),
            _ => Err(Error::InvalidConfig(format!("unknown binning {s:?}; use log2 or linear:<width>"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub bin_lo: usize,
    pub bin_hi: usize,
    pub mean: f64,
    pub count: usize,
}

/// Groups `(degree, value)` pairs into bins and averages each non-empty bin.
pub fn spectrum<I: IntoIterator<Item = (usize, f64)>>(values: I, binning: Binning) -> Vec<SpectrumPoint> {
    let mut acc: std::collections::BTreeMap<(usize, usize), (f64, usize)> = Default::default();
    for (degree, value) in values {
        let e = acc.entry(binning.bin(degree)).or_default();
        e.0 += value;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|((lo, hi), (sum, count))| SpectrumPoint {
            bin_lo: lo,
            bin_hi: hi,
            mean: sum / count as f64,
            count,
        })
        .collect()
}

/// Sorted neighbor lists of the undirected simple projection.
pub fn undirected_projection(g: &DirectedWeightedGraph) -> Vec<Vec<usize>> {
    (0..g.node_count())
        .map(|v| {
            let mut nb: Vec<usize> = g.out_neighbors(v).iter().chain(g.in_neighbors(v)).copied().collect();
            nb.sort_unstable();
            nb.dedup();
            nb
        })
        .collect()
}

/// Local clustering on the undirected projection; 0 for degree below 2.
pub fn local_clustering(g: &DirectedWeightedGraph) -> Vec<f64> {
    let adj = undirected_projection(g);
    let mut mark = vec![false; adj.len()];
    (0..adj.len())
        .map(|v| {
            let k = adj[v].len();
            if k < 2 {
                return 0.0;
            }
            for &u in &adj[v] {
                mark[u] = true;
            }
            // every triangle is seen once from each of its two other corners
            let links: usize = adj[v].iter().map(|&u| adj[u].iter().filter(|&&w| mark[w]).count()).sum();
            for &u in &adj[v] {
                mark[u] = false;
            }
            links as f64 / (k * (k - 1)) as f64
        })
        .collect()
}

/// Mean local clustering per out-degree bin. Nodes whose projected degree is
/// below 2 are left out unless `include_low_degree` is set.
pub fn clustering_spectrum(g: &DirectedWeightedGraph, binning: Binning, include_low_degree: bool) -> Vec<SpectrumPoint> {
    let cc = local_clustering(g);
    let adj = undirected_projection(g);
    spectrum(
        (0..g.node_count())
            .filter(|&v| include_low_degree || adj[v].len() >= 2)
            .map(|v| (g.out_degree(v), cc[v])),
        binning,
    )
}

/// Mean total degree of each node's out-neighbors; `None` without out-edges.
pub fn out_neighbor_degree(g: &DirectedWeightedGraph) -> Vec<Option<f64>> {
    (0..g.node_count())
        .map(|v| mean_of(g.out_neighbors(v).iter().map(|&u| (g.in_degree(u) + g.out_degree(u)) as f64)))
        .collect()
}

pub fn knn_spectrum(g: &DirectedWeightedGraph, binning: Binning) -> Vec<SpectrumPoint> {
    let knn = out_neighbor_degree(g);
    spectrum(
        (0..g.node_count()).filter_map(|v| Some((g.out_degree(v), knn[v]?))),
        binning,
    )
}

/// Undirected weighted graph with self-loops, used by the community search.
/// `adj[i]` holds `(j, W_ij)` with `W` symmetric; a self-loop entry carries
/// the full diagonal value.
struct Aggregate {
    adj: Vec<Vec<(usize, f64)>>,
}

impl Aggregate {
    fn from_graph(g: &DirectedWeightedGraph) -> Self {
        let sym = g.symmetrized();
        let adj = (0..sym.node_count())
            .map(|v| {
                sym.neighbors(v)
                    .iter()
                    .zip(sym.weights(v))
                    .map(|(&u, &w)| (u, w as f64))
                    .collect()
            })
            .collect();
        Self { adj }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn strength(&self, v: usize) -> f64 {
        self.adj[v].iter().map(|&(_, w)| w).sum()
    }

    fn collapse(&self, community: &[usize], count: usize) -> Self {
        let mut maps: Vec<HashMap<usize, f64>> = vec![HashMap::new(); count];
        for (v, edges) in self.adj.iter().enumerate() {
            for &(u, w) in edges {
                *maps[community[v]].entry(community[u]).or_insert(0.0) += w;
            }
        }
        let adj = maps
            .into_iter()
            .map(|m| {
                let mut row: Vec<(usize, f64)> = m.into_iter().collect();
                row.sort_unstable_by_key(|&(u, _)| u);
                row
            })
            .collect();
        Self { adj }
    }
}

/// One round of local moves; returns the renumbered assignment and whether
/// anything moved.
fn local_moves(agg: &Aggregate, m2: f64) -> (Vec<usize>, usize, bool) {
    let n = agg.len();
    let strength: Vec<f64> = (0..n).map(|v| agg.strength(v)).collect();
    let mut community: Vec<usize> = (0..n).collect();
    let mut tot = strength.clone();
    let mut links: Vec<f64> = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut moved_any = false;
    loop {
        let mut moved = false;
        for v in 0..n {
            let own = community[v];
            for &(u, w) in &agg.adj[v] {
                if u == v {
                    continue;
                }
                let c = community[u];
                if links[c] == 0.0 {
                    touched.push(c);
                }
                links[c] += w;
            }
            tot[own] -= strength[v];
            let k = strength[v];
            let mut best = own;
            let mut best_gain = links[own] - tot[own] * k / m2;
            touched.sort_unstable();
            for &c in &touched {
                let gain = links[c] - tot[c] * k / m2;
                if gain > best_gain + 1e-12 {
                    best = c;
                    best_gain = gain;
                }
            }
            tot[best] += strength[v];
            if best != own {
                community[v] = best;
                moved = true;
            }
            for &c in &touched {
                links[c] = 0.0;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    let mut renumber = vec![usize::MAX; n];
    let mut next = 0;
    for c in community.iter_mut() {
        if renumber[*c] == usize::MAX {
            renumber[*c] = next;
            next += 1;
        }
        *c = renumber[*c];
    }
    (community, next, moved_any)
}

/// A partition of the nodes into communities, numbered by decreasing size.
#[derive(Debug, Clone, PartialEq)]
pub struct Communities {
    pub assignment: Vec<usize>,
    pub count: usize,
    pub modularity: f64,
}

/// Multilevel modularity optimization (Louvain) on the symmetrized weighted
/// graph. Nodes are visited in index order, so the result is deterministic.
pub fn detect_communities(g: &DirectedWeightedGraph) -> Result<Communities> {
    if g.is_empty() {
        return Err(Error::TooSmall { nodes: 0, needed: 1 });
    }
    let mut agg = Aggregate::from_graph(g);
    let m2: f64 = (0..agg.len()).map(|v| agg.strength(v)).sum();
    let mut assignment: Vec<usize> = (0..g.node_count()).collect();
    if m2 > 0.0 {
        loop {
            let (level, count, moved) = local_moves(&agg, m2);
            if !moved {
                break;
            }
            for c in assignment.iter_mut() {
                *c = level[*c];
            }
            agg = agg.collapse(&level, count);
        }
    }
    let (assignment, count) = order_by_size(&assignment);
    let modularity = modularity(g, &assignment);
    Ok(Communities {
        assignment,
        count,
        modularity,
    })
}

/// Renumbers communities by decreasing size, ties by smallest member.
fn order_by_size(assignment: &[usize]) -> (Vec<usize>, usize) {
    let k = assignment.iter().max().map_or(0, |&m| m + 1);
    let mut size = vec![0usize; k];
    let mut first = vec![usize::MAX; k];
    for (v, &c) in assignment.iter().enumerate() {
        size[c] += 1;
        first[c] = first[c].min(v);
    }
    let mut order: Vec<usize> = (0..k).filter(|&c| size[c] > 0).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(size[c]), first[c]));
    let mut rank = vec![0; k];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    (assignment.iter().map(|&c| rank[c]).collect(), order.len())
}

/// Newman modularity of `assignment` on the symmetrized weights.
pub fn modularity(g: &DirectedWeightedGraph, assignment: &[usize]) -> f64 {
    let agg = Aggregate::from_graph(g);
    let m2: f64 = (0..agg.len()).map(|v| agg.strength(v)).sum();
    if m2 == 0.0 {
        return 0.0;
    }
    let k = assignment.iter().max().map_or(0, |&m| m + 1);
    let mut inside = vec![0.0; k];
    let mut tot = vec![0.0; k];
    for (v, edges) in agg.adj.iter().enumerate() {
        for &(u, w) in edges {
            tot[assignment[v]] += w;
            if assignment[u] == assignment[v] {
                inside[assignment[v]] += w;
            }
        }
    }
    (0..k).map(|c| inside[c] / m2 - (tot[c] / m2).powi(2)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunitySummary {
    pub community: usize,
    pub size: usize,
    /// Mean score over members that have one.
    pub mean_leaning: Option<f64>,
    /// Member with the largest in-degree, ties by id.
    pub top_user: UserId,
}

pub fn summarize_communities(
    g: &DirectedWeightedGraph,
    communities: &Communities,
    scores: &HashMap<UserId, f64>,
) -> Vec<CommunitySummary> {
    let k = communities.count;
    let mut size = vec![0usize; k];
    let mut sum = vec![0.0; k];
    let mut scored = vec![0usize; k];
    let mut top: Vec<Option<usize>> = vec![None; k];
    for (v, &c) in communities.assignment.iter().enumerate() {
        size[c] += 1;
        if let Some(&s) = scores.get(g.id(v)) {
            sum[c] += s;
            scored[c] += 1;
        }
        // index order is id order, so the first maximum wins ties
        if top[c].map_or(true, |t| g.in_degree(v) > g.in_degree(t)) {
            top[c] = Some(v);
        }
    }
    (0..k)
        .map(|c| CommunitySummary {
            community: c,
            size: size[c],
            mean_leaning: (scored[c] > 0).then(|| sum[c] / scored[c] as f64),
            top_user: g.id(top[c].expect("communities are non-empty")).clone(),
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_neighbor_leanings<W: Write>(records: &[NeighborLeaning], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "own", "in_avg", "out_avg"])?;
    for r in records {
        w.write_record([r.user.as_str(), &r.own.to_string(), &opt(r.in_avg), &opt(r.out_avg)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_density<W: Write>(d: &LeaningDensity, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["in_bin", "out_bin", "count"])?;
    for i in 0..d.bins {
        for o in 0..d.bins {
            w.write_record([i.to_string(), o.to_string(), d.get(i, o).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectrum<W: Write>(points: &[SpectrumPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_lo", "bin_hi", "mean", "count"])?;
    for p in points {
        w.write_record([
            p.bin_lo.to_string(),
            p.bin_hi.to_string(),
            p.mean.to_string(),
            p.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_communities<W: Write>(summaries: &[CommunitySummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["community", "size", "mean_leaning", "top_user"])?;
    for s in summaries {
        w.write_record([
            s.community.to_string(),
            s.size.to_string(),
            opt(s.mean_leaning),
            s.top_user.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_assignment<W: Write>(g: &DirectedWeightedGraph, c: &Communities, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "community"])?;
    for (v, &k) in c.assignment.iter().enumerate() {
        w.write_record([g.id(v).as_str(), &k.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
