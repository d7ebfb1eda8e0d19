//! Metrics, stratified cross-validation and feature importance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{check_labels, ProfileIndex, UserHistory};
use crate::error::{Error, Result};
use crate::features::{FeatureSpec, FittedFeatures, SparseRow};
use crate::model::{is_positive, Classifier, ClassifierSpec};
use crate::text::TextPipeline;

pub fn accuracy(scores: &[f64], y: &[bool]) -> f64 {
    let hits = scores.iter().zip(y).filter(|(s, &yi)| (**s >= 0.5) == yi).count();
    hits as f64 / y.len().max(1) as f64
}

/// Rank-based AUC: the probability that a random positive scores above a
/// random negative, ties counting one half. `None` without both classes.
pub fn auc(scores: &[f64], y: &[bool]) -> Option<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average ranks over tied groups
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    let pos = y.iter().filter(|&&v| v).count() as f64;
    let neg = y.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return None;
    }
    let rank_sum: f64 = ranks.iter().zip(y).filter(|(_, &v)| v).map(|(r, _)| r).sum();
    Some((rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg))
}

/// F1 of the positive (advocate) class.
pub fn f1(scores: &[f64], y: &[bool]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (&s, &yi) in scores.iter().zip(y) {
        match (s >= 0.5, yi) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}

/// Fold index of every example; each class is shuffled and dealt round-robin.
pub fn stratified_folds(y: &[bool], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidConfig("need at least 2 folds".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; y.len()];
    for (class, name) in [(false, "skeptic"), (true, "advocate")] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if idx.len() < folds {
            return Err(Error::TooFewExamples {
                class: name,
                found: idx.len(),
                needed: folds,
            });
        }
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            out[i] = k % folds;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldMetrics {
    pub accuracy: f64,
    pub auc: f64,
    pub f1: f64,
    /// Accuracy of predicting the training fold's majority class.
    pub baseline_accuracy: f64,
    pub test_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub auc: f64,
    pub f1: f64,
    pub baseline_accuracy: f64,
    pub fold_count: usize,
    pub folds: Vec<FoldMetrics>,
}

/// Stratified k-fold evaluation. Features are fitted on the training folds
/// only.
pub fn evaluate_cv(
    histories: &[UserHistory],
    profiles: &ProfileIndex,
    features: &FeatureSpec,
    classifier: &ClassifierSpec,
    pipeline: &TextPipeline,
    folds: usize,
    seed: u64,
) -> Result<EvalReport> {
    check_labels(histories)?;
    let y: Vec<bool> = histories.iter().map(|h| is_positive(h.label)).collect();
    let assignment = stratified_folds(&y, folds, seed)?;
    let mut per_fold = Vec::with_capacity(folds);
    for k in 0..folds {
        let train: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] != k).collect();
        let test: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] == k).collect();
        let fitted = FittedFeatures::fit(features, histories, profiles, &train, pipeline)?;
        let rows = |idx: &[usize]| -> Result<Vec<SparseRow>> {
            idx.iter().map(|&i| fitted.transform(&histories[i], profiles, pipeline)).collect()
        };
        let (xtr, xte) = (rows(&train)?, rows(&test)?);
        let ytr: Vec<bool> = train.iter().map(|&i| y[i]).collect();
        let yte: Vec<bool> = test.iter().map(|&i| y[i]).collect();
        let model = classifier.train(&xtr, &ytr, fitted.dim())?;
        let scores: Vec<f64> = xte.iter().map(|r| model.predict_proba(r)).collect();
        let majority = 2 * ytr.iter().filter(|&&v| v).count() >= ytr.len();
        per_fold.push(FoldMetrics {
            accuracy: accuracy(&scores, &yte),
            auc: auc(&scores, &yte).expect("stratified folds hold both classes"),
            f1: f1(&scores, &yte),
            baseline_accuracy: yte.iter().filter(|&&v| v == majority).count() as f64 / yte.len() as f64,
            test_size: yte.len(),
        });
    }
    let mean = |f: fn(&FoldMetrics) -> f64| per_fold.iter().map(f).sum::<f64>() / folds as f64;
    Ok(EvalReport {
        accuracy: mean(|m| m.accuracy),
        auc: mean(|m| m.auc),
        f1: mean(|m| m.f1),
        baseline_accuracy: mean(|m| m.baseline_accuracy),
        fold_count: folds,
        folds: per_fold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Importance {
    pub feature: String,
    pub importance: f64,
}

/// Logistic models rank features by signed coefficient (most advocate-leaning
/// first); forests by permutation importance, the mean accuracy drop over
/// `shuffles` seeded shuffles of one feature column.
pub fn feature_importance(
    model: &Classifier,
    names: &[String],
    x: &[SparseRow],
    y: &[bool],
    shuffles: usize,
    seed: u64,
) -> Vec<Importance> {
    let mut out: Vec<Importance> = match model {
        Classifier::Logistic(m) => names
            .iter()
            .zip(&m.beta)
            .map(|(n, &b)| Importance {
                feature: n.clone(),
                importance: b,
            })
            .collect(),
        Classifier::Forest(f) => {
            let dense: Vec<Vec<f64>> = x.iter().map(|r| crate::forest::densify(r, f.dim)).collect();
            let acc = |rows: &[Vec<f64>]| {
                let scores: Vec<f64> = rows.iter().map(|r| f.predict_dense(r)).collect();
                accuracy(&scores, y)
            };
            let base = acc(&dense);
            names
                .iter()
                .enumerate()
                .map(|(j, n)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(j as u64);
                    let mut rows = dense.clone();
                    let mut column: Vec<f64> = dense.iter().map(|r| r[j]).collect();
                    let mut drop = 0.0;
                    for _ in 0..shuffles {
                        column.shuffle(&mut rng);
                        for (r, &v) in rows.iter_mut().zip(&column) {
                            r[j] = v;
                        }
                        drop += base - acc(&rows);
                    }
                    Importance {
                        feature: n.clone(),
                        importance: drop / shuffles.max(1) as f64,
                    }
                })
                .collect()
        }
    };
    out.sort_by(|a, b| b.importance.total_cmp(&a.importance).then_with(|| a.feature.cmp(&b.feature)));
    out
}
