//! Network-based user classification.
//!
//! The retweet graph is bipartitioned many times with different seeds. After
//! aligning each run's labels to the first run, a user's leaning score is the
//! fraction of runs that put them on side 1. Scores near 0 or 1 mark users
//! consistently placed on one side; a few known seed users then decide which
//! extreme is which stance.

mod bisect;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bisect::LevelTrace;
use bisect::{BisectParams, WeightedGraph};

use crate::error::{Error, Result};
use crate::graph::{DirectedWeightedGraph, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StanceLabel {
    Skeptic,
    Advocate,
    Unassigned,
}

impl StanceLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            StanceLabel::Skeptic => "skeptic",
            StanceLabel::Advocate => "advocate",
            StanceLabel::Unassigned => "unassigned",
        }
    }

    /// Side index: 0 for skeptics, 1 for advocates.
    pub fn side(self) -> Option<usize> {
        match self {
            StanceLabel::Skeptic => Some(0),
            StanceLabel::Advocate => Some(1),
            StanceLabel::Unassigned => None,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            StanceLabel::Skeptic => StanceLabel::Advocate,
            StanceLabel::Advocate => StanceLabel::Skeptic,
            StanceLabel::Unassigned => StanceLabel::Unassigned,
        }
    }
}

impl fmt::Display for StanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StanceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "skeptic" => Ok(StanceLabel::Skeptic),
            "advocate" => Ok(StanceLabel::Advocate),
            "unassigned" | "" => Ok(StanceLabel::Unassigned),
            other => Err(Error::InvalidConfig(format!("unknown stance label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    /// Number of bipartitions in the ensemble.
    pub runs: usize,
    /// Target side sizes `1 : balance_ratio`.
    pub balance_ratio: f64,
    /// Allowed deviation from the target, as a fraction of the node count.
    pub balance_tolerance: f64,
    /// Coarsening stops once the graph has at most this many vertices.
    pub coarsen_stop: usize,
    /// Initial region-growing attempts per run, best cut kept.
    pub initial_tries: usize,
    /// A score within this distance of 0 or 1 counts as extreme.
    pub extremity_epsilon: f64,
    pub rng_seed: u64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            runs: 100,
            balance_ratio: 1.0,
            balance_tolerance: 0.03,
            coarsen_stop: 100,
            initial_tries: 4,
            extremity_epsilon: 0.05,
            rng_seed: 0,
        }
    }
}

impl PartitionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if !(self.balance_ratio >= 1.0) || !self.balance_ratio.is_finite() {
            return bad("balance ratio must be a finite number >= 1");
        }
        if !(self.balance_tolerance >= 0.0 && self.balance_tolerance < 0.5) {
            return bad("balance tolerance must lie in [0, 0.5)");
        }
        if !(self.extremity_epsilon > 0.0 && self.extremity_epsilon < 0.5) {
            return bad("extremity epsilon must lie in (0, 0.5)");
        }
        Ok(())
    }

    fn bisect_params(&self, ratio: f64) -> BisectParams {
        BisectParams {
            ratio,
            tolerance: self.balance_tolerance,
            coarsen_stop: self.coarsen_stop.max(2),
            initial_tries: self.initial_tries,
            max_passes: 10,
        }
    }
}

/// One bipartition: `sides[i]` is the part of node `i` in graph order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    pub sides: Vec<u8>,
    /// Total symmetrized weight crossing the cut.
    pub cut: u64,
    /// Cut before and after refinement on each level, coarsest first.
    pub trace: Vec<LevelTrace>,
}

impl Bipartition {
    pub fn side_of(&self, g: &DirectedWeightedGraph, id: &str) -> Option<u8> {
        g.index_of(id).map(|i| self.sides[i])
    }

    pub fn part_sizes(&self) -> [usize; 2] {
        let ones = self.sides.iter().filter(|&&s| s == 1).count();
        [self.sides.len() - ones, ones]
    }
}

fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

fn check_partitionable(g: &DirectedWeightedGraph) -> Result<()> {
    if g.node_count() < 2 {
        return Err(Error::TooSmall {
            nodes: g.node_count(),
            needed: 2,
        });
    }
    let (_, components) = g.weak_components();
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    Ok(())
}

fn bisect_prepared(wg: &WeightedGraph, params: &BisectParams, seed: u64, run: u64) -> Bipartition {
    let mut rng = run_rng(seed, run);
    let out = bisect::bisect(wg, params, &mut rng);
    Bipartition {
        sides: out.sides,
        cut: out.cut as u64,
        trace: out.trace,
    }
}

/// A single multilevel bipartition of the symmetrized graph. Side 0 targets
/// `1 / (1 + ratio)` of the nodes and side 1 the rest. `run` selects the
/// random stream, so the same `(cfg.rng_seed, run)` gives the same split.
pub fn bipartition_once(
    g: &DirectedWeightedGraph,
    ratio: f64,
    cfg: &PartitionConfig,
    run: u64,
) -> Result<Bipartition> {
    PartitionConfig {
        balance_ratio: ratio,
        ..cfg.clone()
    }
    .validate()?;
    check_partitionable(g)?;
    let wg = WeightedGraph::from_symmetric(&g.symmetrized());
    Ok(bisect_prepared(&wg, &cfg.bisect_params(ratio), cfg.rng_seed, run))
}

/// Per-user leaning score: the fraction of aligned runs placing the user on
/// side 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaningScore {
    pub user: UserId,
    pub score: f64,
    pub runs: usize,
}

impl LeaningScore {
    pub fn is_extreme(&self, epsilon: f64) -> bool {
        self.score <= epsilon || self.score >= 1.0 - epsilon
    }
}

pub fn extreme_count(scores: &[LeaningScore], epsilon: f64) -> usize {
    scores.iter().filter(|s| s.is_extreme(epsilon)).count()
}

/// Runs `cfg.runs` bipartitions (in parallel, merged by run index), aligns
/// each run to run 0 by majority overlap, and averages.
pub fn ensemble_leaning(g: &DirectedWeightedGraph, cfg: &PartitionConfig) -> Result<Vec<LeaningScore>> {
    cfg.validate()?;
    check_partitionable(g)?;
    let wg = WeightedGraph::from_symmetric(&g.symmetrized());
    Ok(ensemble_prepared(g, &wg, cfg, cfg.balance_ratio))
}

fn ensemble_prepared(
    g: &DirectedWeightedGraph,
    wg: &WeightedGraph,
    cfg: &PartitionConfig,
    ratio: f64,
) -> Vec<LeaningScore> {
    let params = cfg.bisect_params(ratio);
    let runs: Vec<Vec<u8>> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| bisect_prepared(wg, &params, cfg.rng_seed, run).sides)
        .collect();

    let n = g.node_count();
    let mut ones = vec![0usize; n];
    let reference = &runs[0];
    for sides in &runs {
        let agree = sides.iter().zip(reference).filter(|(a, b)| a == b).count();
        let flip = 2 * agree < n;
        for (count, &s) in ones.iter_mut().zip(sides) {
            if (s == 1) != flip {
                *count += 1;
            }
        }
    }
    g.ids()
        .iter()
        .zip(ones)
        .map(|(user, c)| LeaningScore {
            user: user.clone(),
            score: c as f64 / cfg.runs as f64,
            runs: cfg.runs,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneEntry {
    pub ratio: f64,
    pub extreme: usize,
    pub scores: Vec<LeaningScore>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best_ratio: f64,
    pub entries: Vec<TuneEntry>,
}

impl TuneResult {
    pub fn best(&self) -> &TuneEntry {
        self.entries
            .iter()
            .find(|e| e.ratio == self.best_ratio)
            .expect("best ratio comes from the grid")
    }
}

/// Runs the ensemble for every ratio in `grid` and keeps the one with the most
/// extreme users; ties go to the smaller ratio.
pub fn tune_balance(g: &DirectedWeightedGraph, grid: &[f64], cfg: &PartitionConfig) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("balance grid is empty".into()));
    }
    for &r in grid {
        PartitionConfig {
            balance_ratio: r,
            ..cfg.clone()
        }
        .validate()?;
    }
    check_partitionable(g)?;
    let wg = WeightedGraph::from_symmetric(&g.symmetrized());
    let entries: Vec<TuneEntry> = grid
        .iter()
        .map(|&ratio| {
            let scores = ensemble_prepared(g, &wg, cfg, ratio);
            TuneEntry {
                ratio,
                extreme: extreme_count(&scores, cfg.extremity_epsilon),
                scores,
            }
        })
        .collect();
    let best = entries
        .iter()
        .max_by(|a, b| a.extreme.cmp(&b.extreme).then(b.ratio.total_cmp(&a.ratio)))
        .expect("grid is non-empty");
    Ok(TuneResult {
        best_ratio: best.ratio,
        entries,
    })
}

/// Stance labels derived from leaning scores and seed users.
#[derive(Debug, Clone, PartialEq)]
pub struct StanceAssignment {
    pub labels: BTreeMap<UserId, StanceLabel>,
    /// Stance of the users with scores near 0.
    pub zero_side: StanceLabel,
    /// Seeds skipped because they are unscored or not extreme.
    pub ignored_seeds: Vec<UserId>,
}

/// Picks the polarity that agrees with the majority of (extreme) seed users,
/// then labels every extreme user; everyone else is unassigned.
pub fn assign_stances(
    scores: &[LeaningScore],
    seeds: &HashMap<UserId, StanceLabel>,
    epsilon: f64,
) -> Result<StanceAssignment> {
    let by_user: HashMap<&UserId, f64> = scores.iter().map(|s| (&s.user, s.score)).collect();
    let mut zero_skeptic = 0usize;
    let mut zero_advocate = 0usize;
    let mut ignored = Vec::new();
    let mut seed_list: Vec<(&UserId, &StanceLabel)> = seeds.iter().collect();
    seed_list.sort();
    for (user, &label) in seed_list {
        if label == StanceLabel::Unassigned {
            continue;
        }
        let low = match by_user.get(user) {
            Some(&x) if x <= epsilon => true,
            Some(&x) if x >= 1.0 - epsilon => false,
            _ => {
                ignored.push(user.clone());
                continue;
            }
        };
        if low == (label == StanceLabel::Skeptic) {
            zero_skeptic += 1;
        } else {
            zero_advocate += 1;
        }
    }
    let zero_side = match zero_skeptic.cmp(&zero_advocate) {
        std::cmp::Ordering::Greater => StanceLabel::Skeptic,
        std::cmp::Ordering::Less => StanceLabel::Advocate,
        std::cmp::Ordering::Equal if zero_skeptic == 0 => return Err(Error::NoUsableSeeds),
        std::cmp::Ordering::Equal => return Err(Error::SeedConflict(zero_skeptic)),
    };
    let labels = scores
        .iter()
        .map(|s| {
            let label = if s.score <= epsilon {
                zero_side
            } else if s.score >= 1.0 - epsilon {
                zero_side.opposite()
            } else {
                StanceLabel::Unassigned
            };
            (s.user.clone(), label)
        })
        .collect();
    Ok(StanceAssignment {
        labels,
        zero_side,
        ignored_seeds: ignored,
    })
}

/// Maps `x -> 1 - x` when needed so that 0 means skeptic and 1 advocate.
pub fn orient_scores(scores: &[LeaningScore], zero_side: StanceLabel) -> Vec<LeaningScore> {
    scores
        .iter()
        .map(|s| LeaningScore {
            score: if zero_side == StanceLabel::Advocate {
                1.0 - s.score
            } else {
                s.score
            },
            ..s.clone()
        })
        .collect()
}

/// A scored user as stored in the scores CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub user: UserId,
    pub score: f64,
    pub label: StanceLabel,
}

/// CSV `user,score,label`.
pub fn write_scores<W: Write>(rows: &[ScoreRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scores<R: Read>(input: R) -> Result<Vec<ScoreRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        let row: ScoreRow = row?;
        if !(0.0..=1.0).contains(&row.score) {
            return Err(Error::InvalidConfig(format!(
                "score {} for {} is outside [0, 1]",
                row.score, row.user
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Seeds CSV `user,label` with label `skeptic` or `advocate`.
pub fn read_seeds<R: Read>(input: R) -> Result<HashMap<UserId, StanceLabel>> {
    #[derive(Deserialize)]
    struct SeedRow {
        user: String,
        label: String,
    }
    let mut r = csv::Reader::from_reader(input);
    let mut seeds = HashMap::new();
    for (i, row) in r.deserialize().enumerate() {
        let row: SeedRow = row?;
        let user = UserId::parse(&row.user).ok_or(Error::Parse {
            line: i + 2,
            message: "empty user id".into(),
        })?;
        seeds.insert(user, row.label.parse()?);
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_cliques(k: usize) -> DirectedWeightedGraph {
        let mut edges = Vec::new();
        for block in ["a", "b"] {
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        edges.push((format!("{block}{i:02}"), format!("{block}{j:02}")));
                    }
                }
            }
        }
        edges.push(("a00".into(), "b00".into()));
        DirectedWeightedGraph::from_edges(edges.iter().map(|(s, t)| (s.as_str(), t.as_str(), 1)))
    }

    fn complete(n: usize) -> DirectedWeightedGraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    edges.push((format!("k{i:02}"), format!("k{j:02}")));
                }
            }
        }
        DirectedWeightedGraph::from_edges(edges.iter().map(|(s, t)| (s.as_str(), t.as_str(), 1)))
    }

    #[test]
    fn two_cliques_split_along_the_bridge() {
        let g = two_cliques(10);
        let cfg = PartitionConfig::default();
        for run in 0..5 {
            let b = bipartition_once(&g, 1.0, &cfg, run).unwrap();
            assert_eq!(b.cut, 1);
            assert_eq!(b.part_sizes(), [10, 10]);
            let a_side = b.side_of(&g, "a00").unwrap();
            assert!(g.ids().iter().all(|id| {
                let s = b.side_of(&g, id.as_str()).unwrap();
                (s == a_side) == id.as_str().starts_with('a')
            }));
        }
    }

    #[test]
    fn path_of_two() {
        let g = DirectedWeightedGraph::from_edges([("a", "b", 1)]);
        let b = bipartition_once(&g, 1.0, &PartitionConfig::default(), 0).unwrap();
        assert_ne!(b.sides[0], b.sides[1]);
    }

    #[test]
    fn rejects_disconnected_and_tiny_graphs() {
        let g = DirectedWeightedGraph::from_edges([("a", "b", 1), ("c", "d", 1)]);
        let cfg = PartitionConfig::default();
        assert!(matches!(bipartition_once(&g, 1.0, &cfg, 0), Err(Error::Disconnected { components: 2 })));
        assert!(matches!(ensemble_leaning(&g, &cfg), Err(Error::Disconnected { .. })));
        assert!(matches!(
            ensemble_leaning(&DirectedWeightedGraph::default(), &cfg),
            Err(Error::TooSmall { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = PartitionConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.runs = 0;
        assert!(cfg.validate().is_err());
        cfg = PartitionConfig {
            balance_ratio: 0.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg = PartitionConfig {
            extremity_epsilon: 0.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ensemble_on_two_cliques_is_fully_extreme() {
        let g = two_cliques(10);
        let scores = ensemble_leaning(&g, &PartitionConfig::default()).unwrap();
        let a = scores[0].score;
        for s in &scores {
            assert!(s.score == 0.0 || s.score == 1.0);
            let expected = if s.user.as_str().starts_with('a') { a } else { 1.0 - a };
            assert_eq!(s.score, expected);
        }
    }

    #[test]
    fn complete_graph_has_no_stable_cut() {
        let g = complete(20);
        let scores = ensemble_leaning(&g, &PartitionConfig::default()).unwrap();
        let middling = scores.iter().filter(|s| s.score > 0.2 && s.score < 0.8).count();
        assert!(middling >= 16, "only {middling} of 20 nodes in (0.2, 0.8)");
    }

    #[test]
    fn ensemble_is_deterministic() {
        let g = complete(15);
        let cfg = PartitionConfig {
            runs: 20,
            rng_seed: 9,
            ..Default::default()
        };
        assert_eq!(ensemble_leaning(&g, &cfg).unwrap(), ensemble_leaning(&g, &cfg).unwrap());
    }

    #[test]
    fn tune_single_value_and_symmetric_cliques() {
        let g = two_cliques(10);
        let cfg = PartitionConfig {
            runs: 20,
            ..Default::default()
        };
        assert_eq!(tune_balance(&g, &[1.3], &cfg).unwrap().best_ratio, 1.3);
        let t = tune_balance(&g, &[1.0, 3.0], &cfg).unwrap();
        assert_eq!(t.best_ratio, 1.0);
        assert!(t.entries[0].extreme > t.entries[1].extreme);
        assert!(tune_balance(&g, &[], &cfg).is_err());
    }

    fn score(user: &str, x: f64) -> LeaningScore {
        LeaningScore {
            user: user.into(),
            score: x,
            runs: 100,
        }
    }

    #[test]
    fn stances_follow_seed_polarity() {
        let scores = vec![score("a", 0.0), score("b", 1.0), score("c", 0.5)];
        let seeds: HashMap<UserId, StanceLabel> = [("a".into(), StanceLabel::Skeptic)].into_iter().collect();
        let st = assign_stances(&scores, &seeds, 0.05).unwrap();
        assert_eq!(st.labels[&UserId::from("a")], StanceLabel::Skeptic);
        assert_eq!(st.labels[&UserId::from("b")], StanceLabel::Advocate);
        assert_eq!(st.labels[&UserId::from("c")], StanceLabel::Unassigned);
        assert_eq!(st.zero_side, StanceLabel::Skeptic);

        let seeds: HashMap<UserId, StanceLabel> = [("a".into(), StanceLabel::Advocate)].into_iter().collect();
        let st = assign_stances(&scores, &seeds, 0.05).unwrap();
        assert_eq!(st.labels[&UserId::from("b")], StanceLabel::Skeptic);
    }

    #[test]
    fn seed_conflicts_and_non_extreme_seeds() {
        let scores = vec![score("a", 0.0), score("b", 0.0), score("c", 0.5)];
        let tie: HashMap<UserId, StanceLabel> = [
            ("a".into(), StanceLabel::Skeptic),
            ("b".into(), StanceLabel::Advocate),
        ]
        .into_iter()
        .collect();
        assert!(matches!(assign_stances(&scores, &tie, 0.05), Err(Error::SeedConflict(1))));

        let only_middle: HashMap<UserId, StanceLabel> = [("c".into(), StanceLabel::Skeptic)].into_iter().collect();
        assert!(matches!(assign_stances(&scores, &only_middle, 0.05), Err(Error::NoUsableSeeds)));

        let mixed: HashMap<UserId, StanceLabel> = [
            ("a".into(), StanceLabel::Skeptic),
            ("c".into(), StanceLabel::Advocate),
            ("zz".into(), StanceLabel::Advocate),
        ]
        .into_iter()
        .collect();
        let st = assign_stances(&scores, &mixed, 0.05).unwrap();
        assert_eq!(st.ignored_seeds, vec![UserId::from("c"), UserId::from("zz")]);
    }

    #[test]
    fn orientation_flips_scores() {
        let scores = vec![score("a", 0.25)];
        assert_eq!(orient_scores(&scores, StanceLabel::Advocate)[0].score, 0.75);
        assert_eq!(orient_scores(&scores, StanceLabel::Skeptic)[0].score, 0.25);
    }

    #[test]
    fn scores_csv_round_trip() {
        let rows = vec![
            ScoreRow {
                user: "a".into(),
                score: 0.0,
                label: StanceLabel::Skeptic,
            },
            ScoreRow {
                user: "b".into(),
                score: 0.37,
                label: StanceLabel::Unassigned,
            },
        ];
        let mut buf = Vec::new();
        write_scores(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("user,score,label\na,0.0,skeptic\n"));
        assert_eq!(read_scores(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn seeds_csv() {
        let seeds = read_seeds("user,label\nx,skeptic\ny,Advocate\n".as_bytes()).unwrap();
        assert_eq!(seeds[&UserId::from("y")], StanceLabel::Advocate);
        assert!(read_seeds("user,label\nx,maybe\n".as_bytes()).is_err());
    }
}
