//! Aggregate account/behavior features and TF-IDF bag-of-words vectors.

use std::collections::{BTreeMap, HashMap, HashSet};

use echoscope_core::ingest::AccountProfile;
use serde::{Deserialize, Serialize};

use crate::dataset::{ProfileIndex, UserHistory};
use crate::error::{Error, Result};
use crate::text::{HeuristicTagger, Tagger, TextPipeline};

const DAY: f64 = 86_400.0;

pub const AGGREGATE_NAMES: [&str; 16] = [
    "account_age_days",
    "total_tweets",
    "tweet_rate",
    "followers",
    "friends",
    "pct_retweets",
    "pct_with_mentions",
    "pct_with_hashtags",
    "pct_with_url",
    "chars",
    "uppercase_chars",
    "verbs",
    "nouns",
    "articles",
    "question_marks",
    "exclamation_marks",
];

/// The 16 aggregate features, in [`AGGREGATE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateFeatures(pub [f64; 16]);

impl AggregateFeatures {
    pub fn get(&self, name: &str) -> Option<f64> {
        AGGREGATE_NAMES.iter().position(|n| *n == name).map(|i| self.0[i])
    }
}

/// Profile used when a user has none on file: created at the first history
/// tweet, with the history as the whole timeline and no follower data.
pub fn fallback_profile(h: &UserHistory) -> AccountProfile {
    AccountProfile {
        user: h.user.to_string(),
        created_at: h.tweets.first().map_or(h.split_point, |t| t.timestamp),
        followers: 0,
        friends: 0,
        statuses: h.tweets.len() as u64,
    }
}

/// Account age is measured at the split point.
pub fn aggregate_features(h: &UserHistory, profile: &AccountProfile, tagger: &dyn Tagger) -> Result<AggregateFeatures> {
    if h.tweets.is_empty() {
        return Err(Error::EmptyHistory(h.user.to_string()));
    }
    let n = h.tweets.len() as f64;
    let age = ((h.split_point - profile.created_at) as f64 / DAY).max(0.0);
    let total = profile.statuses as f64;
    let frac = |f: &dyn Fn(&echoscope_core::ingest::TweetRecord) -> bool| {
        h.tweets.iter().filter(|t| f(t)).count() as f64 / n
    };
    let per_tweet = |f: &dyn Fn(&str) -> usize| h.tweets.iter().map(|t| f(&t.text) as f64).sum::<f64>() / n;
    let pos: Vec<_> = h.tweets.iter().map(|t| tagger.count(&t.text)).collect();
    let pos_mean = |f: &dyn Fn(&crate::text::PosCounts) -> usize| pos.iter().map(|p| f(p) as f64).sum::<f64>() / n;
    Ok(AggregateFeatures([
        age,
        total,
        total / age.max(1.0),
        profile.followers as f64,
        profile.friends as f64,
        frac(&|t| t.is_retweet()),
        frac(&|t| !t.mentioned_user_ids.is_empty()),
        frac(&|t| !t.hashtags.is_empty()),
        frac(&|t| !t.urls.is_empty()),
        per_tweet(&|s| s.chars().count()),
        per_tweet(&|s| s.chars().filter(|c| c.is_uppercase()).count()),
        pos_mean(&|p| p.verbs),
        pos_mean(&|p| p.nouns),
        pos_mean(&|p| p.articles),
        per_tweet(&|s| s.matches('?').count()),
        per_tweet(&|s| s.matches('!').count()),
    ]))
}

/// Sparse vector as sorted `(index, value)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

/// TF-IDF vocabulary fitted on training documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub tokens: Vec<String>,
    pub idf: Vec<f64>,
    pub min_df: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn reindex(&mut self) {
        self.index = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Keeps tokens appearing in at least `min_df` of `docs`;
    /// `idf = ln((1 + N) / (1 + df)) + 1`.
    pub fn fit(docs: &[Vec<String>], min_df: usize) -> Result<Self> {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for d in docs {
            let unique: HashSet<&str> = d.iter().map(String::as_str).collect();
            for t in unique {
                *df.entry(t).or_default() += 1;
            }
        }
        let n = docs.len() as f64;
        let (tokens, idf): (Vec<String>, Vec<f64>) = df
            .into_iter()
            .filter(|&(_, c)| c >= min_df)
            .map(|(t, c)| (t.to_string(), ((1.0 + n) / (1.0 + c as f64)).ln() + 1.0))
            .unzip();
        if tokens.is_empty() {
            return Err(Error::EmptyVocabulary { min_df });
        }
        let mut v = Self {
            tokens,
            idf,
            min_df,
            index: HashMap::new(),
        };
        v.reindex();
        Ok(v)
    }

    /// Raw counts times idf, L2-normalized; out-of-vocabulary tokens are
    /// ignored and an empty document maps to the zero vector.
    pub fn transform(&self, doc: &[String]) -> SparseRow {
        let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
        for t in doc {
            if let Some(i) = self.index_of(t) {
                *tf.entry(i).or_default() += 1.0;
            }
        }
        let mut row: SparseRow = tf.into_iter().map(|(i, c)| (i, c * self.idf[i])).collect();
        let norm = row.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|e| e.1 /= norm);
        }
        row
    }
}

/// Concatenated tokens of a user's history.
pub fn user_document(h: &UserHistory, pipeline: &TextPipeline) -> Vec<String> {
    h.tweets.iter().flat_map(|t| pipeline.tokens(&t.text)).collect()
}

/// Fits a vocabulary on `train_indices` and vectorizes every history.
pub fn build_vocab_and_vectorize(
    histories: &[UserHistory],
    train_indices: &[usize],
    pipeline: &TextPipeline,
    min_df: usize,
) -> Result<(Vocabulary, Vec<SparseRow>)> {
    if train_indices.is_empty() {
        return Err(Error::InvalidConfig("no training documents".into()));
    }
    let docs: Vec<Vec<String>> = histories.iter().map(|h| user_document(h, pipeline)).collect();
    let train: Vec<Vec<String>> = train_indices.iter().map(|&i| docs[i].clone()).collect();
    let vocab = Vocabulary::fit(&train, min_df)?;
    let rows = docs.iter().map(|d| vocab.transform(d)).collect();
    Ok((vocab, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Aggregate,
    Bow,
    Combined,
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aggregate" => Ok(Self::Aggregate),
            "bow" => Ok(Self::Bow),
            "combined" => Ok(Self::Combined),
            _ => Err(Error::InvalidConfig(format!(
                "unknown feature set {s:?}; use aggregate, bow or combined"
            ))),
        }
    }
}

/// Unfitted featurizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    pub min_df: usize,
}

impl FeatureSpec {
    pub fn new(kind: FeatureKind) -> Self {
        Self { kind, min_df: 10 }
    }
}

/// Per-feature standardization fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    fn fit(rows: &[[f64; 16]]) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; 16];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; 16];
        for r in rows {
            for j in 0..16 {
                var[j] += (r[j] - mean[j]).powi(2) / n;
            }
        }
        let scale = var.iter().map(|v| if *v > 0.0 { v.sqrt() } else { 1.0 }).collect();
        Self { mean, scale }
    }

    fn apply(&self, r: &[f64; 16]) -> [f64; 16] {
        let mut out = [0.0; 16];
        for j in 0..16 {
            out[j] = (r[j] - self.mean[j]) / self.scale[j];
        }
        out
    }
}

/// Featurizer state fitted on training users; applies unchanged to new users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedFeatures {
    pub kind: FeatureKind,
    pub standardizer: Option<Standardizer>,
    pub vocabulary: Option<Vocabulary>,
}

impl FittedFeatures {
    pub fn fit(
        spec: &FeatureSpec,
        histories: &[UserHistory],
        profiles: &ProfileIndex,
        train: &[usize],
        pipeline: &TextPipeline,
    ) -> Result<Self> {
        let uses_aggregate = spec.kind != FeatureKind::Bow;
        let uses_bow = spec.kind != FeatureKind::Aggregate;
        let standardizer = if uses_aggregate {
            let rows = train
                .iter()
                .map(|&i| raw_aggregate(&histories[i], profiles).map(|a| a.0))
                .collect::<Result<Vec<_>>>()?;
            Some(Standardizer::fit(&rows))
        } else {
            None
        };
        let vocabulary = if uses_bow {
            let docs: Vec<Vec<String>> = train.iter().map(|&i| user_document(&histories[i], pipeline)).collect();
            Some(Vocabulary::fit(&docs, spec.min_df)?)
        } else {
            None
        };
        Ok(Self {
            kind: spec.kind,
            standardizer,
            vocabulary,
        })
    }

    pub fn dim(&self) -> usize {
        self.standardizer.as_ref().map_or(0, |_| 16) + self.vocabulary.as_ref().map_or(0, Vocabulary::len)
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        if self.standardizer.is_some() {
            names.extend(AGGREGATE_NAMES.iter().map(|s| s.to_string()));
        }
        if let Some(v) = &self.vocabulary {
            names.extend(v.tokens.iter().cloned());
        }
        names
    }

    pub fn transform(&self, h: &UserHistory, profiles: &ProfileIndex, pipeline: &TextPipeline) -> Result<SparseRow> {
        let mut row = SparseRow::new();
        let mut offset = 0;
        if let Some(s) = &self.standardizer {
            let a = s.apply(&raw_aggregate(h, profiles)?.0);
            row.extend(a.iter().enumerate().map(|(i, &v)| (i, v)));
            offset = 16;
        }
        if let Some(v) = &self.vocabulary {
            row.extend(v.transform(&user_document(h, pipeline)).into_iter().map(|(i, x)| (i + offset, x)));
        }
        Ok(row)
    }

    /// Rebuilds lookup tables after deserialization.
    pub fn restore(&mut self) {
        if let Some(v) = &mut self.vocabulary {
            v.reindex();
        }
    }
}

fn raw_aggregate(h: &UserHistory, profiles: &ProfileIndex) -> Result<AggregateFeatures> {
    let fallback;
    let profile = match profiles.get(h.user.as_str()) {
        Some(p) => p,
        None => {
            fallback = fallback_profile(h);
            &fallback
        }
    };
    aggregate_features(h, profile, &HeuristicTagger)
}
