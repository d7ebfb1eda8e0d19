//! Trained classifiers and the JSON model container.

use std::io::{Read, Write};

use echoscope_core::partition::StanceLabel;
use serde::{Deserialize, Serialize};

use crate::dataset::{ProfileIndex, UserHistory};
use crate::error::{Error, Result};
use crate::features::{FeatureSpec, FittedFeatures, SparseRow};
use crate::forest::{train_forest, ForestConfig, ForestModel};
use crate::logistic::{train_logistic, LogisticConfig, LogisticModel};
use crate::text::TextPipeline;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ClassifierSpec {
    Logistic(LogisticConfig),
    Forest(ForestConfig),
}

impl ClassifierSpec {
    pub fn train(&self, x: &[SparseRow], y: &[bool], dim: usize) -> Result<Classifier> {
        Ok(match self {
            ClassifierSpec::Logistic(c) => Classifier::Logistic(train_logistic(x, y, dim, c)?),
            ClassifierSpec::Forest(c) => Classifier::Forest(train_forest(x, y, dim, c)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Classifier {
    Logistic(LogisticModel),
    Forest(ForestModel),
}

impl Classifier {
    /// Probability of the advocate class.
    pub fn predict_proba(&self, row: &SparseRow) -> f64 {
        match self {
            Classifier::Logistic(m) => m.predict_proba(row),
            Classifier::Forest(m) => m.predict_proba(row),
        }
    }
}

/// Advocates are the positive class.
pub fn is_positive(label: StanceLabel) -> bool {
    label == StanceLabel::Advocate
}

pub fn label_of(score: f64) -> StanceLabel {
    if score >= 0.5 {
        StanceLabel::Advocate
    } else {
        StanceLabel::Skeptic
    }
}

/// Fitted featurizer plus classifier, stored as versioned JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceModel {
    pub format_version: u32,
    pub config_hash: String,
    pub features: FittedFeatures,
    pub classifier: Classifier,
}

impl StanceModel {
    /// Fits features and classifier on `train` (all histories when `None`).
    pub fn fit(
        histories: &[UserHistory],
        profiles: &ProfileIndex,
        features: &FeatureSpec,
        classifier: &ClassifierSpec,
        pipeline: &TextPipeline,
        config_hash: String,
    ) -> Result<Self> {
        let all: Vec<usize> = (0..histories.len()).collect();
        let fitted = FittedFeatures::fit(features, histories, profiles, &all, pipeline)?;
        let x = histories
            .iter()
            .map(|h| fitted.transform(h, profiles, pipeline))
            .collect::<Result<Vec<_>>>()?;
        let y: Vec<bool> = histories.iter().map(|h| is_positive(h.label)).collect();
        let classifier = classifier.train(&x, &y, fitted.dim())?;
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            config_hash,
            features: fitted,
            classifier,
        })
    }

    pub fn score(&self, h: &UserHistory, profiles: &ProfileIndex, pipeline: &TextPipeline) -> Result<f64> {
        Ok(self.classifier.predict_proba(&self.features.transform(h, profiles, pipeline)?))
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut m: Self = serde_json::from_reader(input)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion(m.format_version));
        }
        m.features.restore();
        Ok(m)
    }
}
