//! Bagged CART trees with Gini impurity.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseRow;
use crate::logistic::ClassWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_samples_split: usize,
    pub max_depth: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub class_weights: ClassWeights,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 200,
            min_samples_split: 8,
            max_depth: 30,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            class_weights: ClassWeights::Balanced,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    /// Weighted share of the positive class.
    Leaf(f64),
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub dim: usize,
}

pub fn densify(row: &SparseRow, dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for &(j, v) in row {
        x[j] = v;
    }
    x
}

impl ForestModel {
    pub fn predict_proba(&self, row: &SparseRow) -> f64 {
        self.predict_dense(&densify(row, self.dim))
    }

    pub fn predict_dense(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

struct Builder<'a> {
    /// Column-major features.
    cols: &'a [Vec<f64>],
    y: &'a [bool],
    cfg: &'a ForestConfig,
    n_features: usize,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy)]
struct Sample {
    index: usize,
    weight: f64,
}

fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

impl Builder<'_> {
    fn leaf(&mut self, samples: &[Sample]) -> usize {
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        let pos: f64 = samples.iter().filter(|s| self.y[s.index]).map(|s| s.weight).sum();
        self.nodes.push(Node::Leaf(if total > 0.0 { pos / total } else { 0.5 }));
        self.nodes.len() - 1
    }

    fn grow(&mut self, samples: &mut [Sample], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        let pos: f64 = samples.iter().filter(|s| self.y[s.index]).map(|s| s.weight).sum();
        let pure = pos <= 0.0 || pos >= total;
        if pure || depth >= self.cfg.max_depth || samples.len() < self.cfg.min_samples_split {
            return self.leaf(samples);
        }
        let parent = gini(pos, total);
        let m = self.cols.len();
        let mut best: Option<(f64, usize, f64)> = None;
        for f in sample(rng, m, self.n_features.min(m)).into_iter() {
            let col = &self.cols[f];
            samples.sort_by(|a, b| col[a.index].total_cmp(&col[b.index]));
            let (mut lw, mut lp) = (0.0, 0.0);
            for k in 0..samples.len() - 1 {
                let s = samples[k];
                lw += s.weight;
                if self.y[s.index] {
                    lp += s.weight;
                }
                let (here, next) = (col[s.index], col[samples[k + 1].index]);
                if here == next {
                    continue;
                }
                let rw = total - lw;
                let child = (lw * gini(lp, lw) + rw * gini(pos - lp, rw)) / total;
                let gain = parent - child;
                // zero-gain splits are allowed so that XOR-like targets can be learned
                if best.map_or(true, |b| gain > b.0 + 1e-12) {
                    best = Some((gain, f, here + (next - here) / 2.0));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return self.leaf(samples);
        };
        let col = &self.cols[feature];
        let split = partition_in_place(samples, |s| col[s.index] <= threshold);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(0.0));
        let (l, r) = samples.split_at_mut(split);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

fn partition_in_place<T: Copy, F: Fn(&T) -> bool>(v: &mut [T], pred: F) -> usize {
    let mut k = 0;
    for i in 0..v.len() {
        if pred(&v[i]) {
            v.swap(i, k);
            k += 1;
        }
    }
    k
}

/// Trains `cfg.n_trees` trees in parallel; tree `t` draws from its own random
/// stream so the forest does not depend on the thread count.
pub fn train_forest(x: &[SparseRow], y: &[bool], dim: usize, cfg: &ForestConfig) -> Result<ForestModel> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InvalidConfig("forest needs matching, non-empty rows and labels".into()));
    }
    if cfg.n_trees == 0 {
        return Err(Error::InvalidConfig("n_trees must be positive".into()));
    }
    // a single-class sample trains to constant leaves
    let weights = match cfg.class_weights.per_example(y) {
        Err(Error::SingleClass) => vec![1.0; y.len()],
        other => other?,
    };
    let mut cols = vec![vec![0.0; x.len()]; dim];
    for (i, row) in x.iter().enumerate() {
        for &(j, v) in row {
            cols[j][i] = v;
        }
    }
    let n_features = match cfg.max_features {
        MaxFeatures::Sqrt => ((dim as f64).sqrt().round() as usize).max(1),
        MaxFeatures::All => dim.max(1),
    };
    let trees = (0..cfg.n_trees as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t);
            let n = x.len();
            let mut samples: Vec<Sample> = if cfg.bootstrap {
                (0..n)
                    .map(|_| {
                        let i = rng.gen_range(0..n);
                        Sample {
                            index: i,
                            weight: weights[i],
                        }
                    })
                    .collect()
            } else {
                (0..n).map(|i| Sample { index: i, weight: weights[i] }).collect()
            };
            let mut b = Builder {
                cols: &cols,
                y,
                cfg,
                n_features,
                nodes: Vec::new(),
            };
            if dim == 0 {
                b.leaf(&samples);
            } else {
                b.grow(&mut samples, 0, &mut rng);
            }
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestModel { trees, dim })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (Vec<SparseRow>, Vec<bool>) {
        let x = vec![vec![(0, 0.0), (1, 0.0)], vec![(0, 0.0), (1, 1.0)], vec![(0, 1.0), (1, 0.0)], vec![(0, 1.0), (1, 1.0)]];
        (x, vec![false, true, true, false])
    }

    fn exact_cfg(depth: usize) -> ForestConfig {
        ForestConfig {
            n_trees: 1,
            min_samples_split: 2,
            max_depth: depth,
            max_features: MaxFeatures::All,
            bootstrap: false,
            ..Default::default()
        }
    }

    fn accuracy(m: &ForestModel, x: &[SparseRow], y: &[bool]) -> f64 {
        x.iter().zip(y).filter(|(r, &yi)| (m.predict_proba(r) >= 0.5) == yi).count() as f64 / y.len() as f64
    }

    #[test]
    fn xor_needs_depth_two() {
        let (x, y) = xor();
        let deep = train_forest(&x, &y, 2, &exact_cfg(2)).unwrap();
        assert_eq!(accuracy(&deep, &x, &y), 1.0);
        let stump = train_forest(&x, &y, 2, &exact_cfg(1)).unwrap();
        assert!(accuracy(&stump, &x, &y) <= 0.75);
        assert!(stump.trees[0].depth() <= 1);
    }

    #[test]
    fn pure_labels_give_single_leaf_trees() {
        let x: Vec<SparseRow> = (0..20).map(|i| vec![(0, i as f64)]).collect();
        let y = vec![true; 20];
        let m = train_forest(&x, &y, 1, &ForestConfig { n_trees: 5, ..Default::default() }).unwrap();
        assert!(m.trees.iter().all(|t| t.nodes == vec![Node::Leaf(1.0)]));
        assert_eq!(accuracy(&m, &x, &y), 1.0);
    }

    #[test]
    fn two_points_split_once() {
        let x = vec![vec![(0, 1.0)], vec![(0, 2.0)]];
        let y = vec![true, false];
        let m = train_forest(&x, &y, 1, &exact_cfg(5)).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
        assert!(m.trees[0].nodes.len() == 3);
    }

    #[test]
    fn deterministic_given_seed() {
        let x: Vec<SparseRow> = (0..60).map(|i| vec![(0, (i % 7) as f64), (1, (i % 5) as f64)]).collect();
        let y: Vec<bool> = (0..60).map(|i| i % 7 > 3).collect();
        let cfg = ForestConfig {
            n_trees: 10,
            ..Default::default()
        };
        assert_eq!(train_forest(&x, &y, 2, &cfg).unwrap(), train_forest(&x, &y, 2, &cfg).unwrap());
    }
}
