//! Flat `key = value` configuration. Lines starting with `#` are comments.
//! Values given on the command line override the file, which overrides the
//! built-in defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use echoscope_core::echo::Binning;
use echoscope_core::partition::PartitionConfig;
use echoscope_core::synth::WorldConfig;
use echoscope_stance::dataset::LabelSource;
use echoscope_stance::features::{FeatureKind, FeatureSpec};
use echoscope_stance::forest::ForestConfig;
use echoscope_stance::logistic::{ClassWeights, LogisticConfig};
use echoscope_stance::model::ClassifierSpec;
use sha2::{Digest, Sha256};

/// A configuration problem; reported as a usage error.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Every key with its default. Path keys default to empty, meaning the
/// artifact of the producing subcommand under the output directory.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("outdir", "out", "directory receiving <outdir>/<subcommand>/"),
    ("seed", "0", "global seed for every randomized step"),
    ("threads", "0", "worker threads, 0 for all cores"),
    ("tweets", "", "debate-period tweets, NDJSON"),
    ("historical", "", "historical timelines, NDJSON"),
    ("follows", "", "follow relations, TSV follower<TAB>followee"),
    ("profiles", "", "account profiles, NDJSON"),
    ("seeds", "", "seed users, CSV user,label"),
    ("scores", "", "leaning scores, CSV user,score,label"),
    ("histories", "", "stance dataset, NDJSON"),
    ("model", "", "trained stance model, JSON"),
    ("networks", "retweet,mention,follow", "networks analyzed by rwc, communities, echo and spectra"),
    ("edge_threshold", "2", "minimum retweet edge weight"),
    ("runs", "100", "bipartitions per ensemble"),
    ("balance_ratio", "1.0", "target side-size ratio 1:r"),
    ("balance_tolerance", "0.03", "allowed balance deviation, fraction of nodes"),
    ("coarsen_stop", "100", "coarsening stops at this many vertices"),
    ("initial_tries", "4", "initial partitions tried per run"),
    ("epsilon", "0.05", "scores within epsilon of 0 or 1 are extreme"),
    ("tune_grid", "1.0,1.25,1.54,2.0", "balance ratios tried by tune"),
    ("hub_k", "10", "absorbing hubs per side"),
    ("walks", "0", "Monte Carlo walks per side, 0 for the exact solver"),
    ("binning", "log2", "degree binning for spectra: log2 or linear:<width>"),
    ("density_bins", "10", "bins per axis of the neighbor-leaning density"),
    ("label_source", "own", "dataset labels: own or target"),
    ("earliest_split", "", "drop users whose split point precedes this time (UTC seconds)"),
    ("features", "bow", "aggregate, bow or combined"),
    ("min_df", "10", "minimum document frequency of a vocabulary token"),
    ("classifier", "logistic", "logistic or forest"),
    ("class_weights", "balanced", "balanced or uniform"),
    ("l2_lambda", "1.0", "logistic L2 penalty"),
    ("max_iter", "500", "logistic iteration cap"),
    ("trees", "200", "forest size"),
    ("max_depth", "30", "forest tree depth cap"),
    ("min_samples_split", "8", "forest minimum node size for a split"),
    ("folds", "5", "cross-validation folds"),
    ("synth_skeptics", "120", "synthetic skeptic users"),
    ("synth_advocates", "185", "synthetic advocate users"),
    ("synth_retweet_p_in", "0.06", ""),
    ("synth_retweet_p_out", "0.002", ""),
    ("synth_mention_p_in", "0.03", ""),
    ("synth_mention_p_out", "0.006", ""),
    ("synth_mention_asymmetry", "3.0", "skeptic-to-advocate mention multiplier"),
    ("synth_follow_p_in", "0.08", ""),
    ("synth_follow_p_out", "0.008", ""),
    ("synth_retweet_weight", "2", "retweets per retweet edge"),
    ("synth_tweets_per_user", "30", "historical tweets per user"),
    ("synth_vocab_overlap", "0.3", "shared fraction of the side vocabularies"),
    ("synth_seeds_per_side", "3", "seed users per side"),
];

/// Keys that do not change any artifact and stay out of the config hash.
const UNHASHED: &[&str] = &["outdir", "threads"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NetworkKind {
    Retweet,
    Mention,
    Follow,
}

impl NetworkKind {
    pub fn name(self) -> &'static str {
        match self {
            NetworkKind::Retweet => "retweet",
            NetworkKind::Mention => "mention",
            NetworkKind::Follow => "follow",
        }
    }
}

impl FromStr for NetworkKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "retweet" => Ok(Self::Retweet),
            "mention" => Ok(Self::Mention),
            "follow" => Ok(Self::Follow),
            _ => Err(ConfigError(format!("unknown network {s:?}"))),
        }
    }
}

/// Raw key-value pairs before interpretation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

fn check_key(key: &str) -> Result<(), ConfigError> {
    if KEYS.iter().any(|(k, _, _)| *k == key) {
        Ok(())
    } else {
        Err(ConfigError(format!("unknown configuration key {key:?}")))
    }
}

impl RawConfig {
    /// Parses the file format. Later lines override earlier ones.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("{origin}:{}: expected key = value", i + 1)))?;
            raw.set(k.trim(), v.trim()).map_err(|e| ConfigError(format!("{origin}:{}: {e}", i + 1)))?;
        }
        Ok(raw)
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        check_key(key)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// `key=value` as given to `--set`.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("--set expects key=value, got {pair:?}")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn merge(&mut self, over: &RawConfig) {
        for (k, v) in &over.values {
            self.values.insert(k.clone(), v.clone());
        }
    }
}

/// The interpreted configuration.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Resolved value of every key.
    values: BTreeMap<String, String>,
    explicit: BTreeSet<String>,
    pub outdir: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub networks: Vec<NetworkKind>,
    pub edge_threshold: u64,
    pub partition: PartitionConfig,
    pub tune_grid: Vec<f64>,
    pub hub_k: usize,
    pub walks: u64,
    pub binning: Binning,
    pub density_bins: usize,
    pub label_source: LabelSource,
    pub earliest_split: i64,
    pub features: FeatureSpec,
    pub classifier: ClassifierSpec,
    pub folds: usize,
    pub world: WorldConfig,
}

fn parse<T: FromStr>(values: &BTreeMap<String, String>, key: &str) -> Result<T, ConfigError> {
    let v = &values[key];
    v.parse()
        .map_err(|_| ConfigError(format!("invalid value {v:?} for {key}")))
}

impl PipelineConfig {
    pub fn resolve(raw: &RawConfig) -> Result<Self, ConfigError> {
        let mut values: BTreeMap<String, String> =
            KEYS.iter().map(|(k, d, _)| (k.to_string(), d.to_string())).collect();
        for (k, v) in &raw.values {
            values.insert(k.clone(), v.clone());
        }
        let explicit = raw.values.keys().cloned().collect();
        let v = &values;
        let seed: u64 = parse(v, "seed")?;

        let networks = v["networks"]
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<BTreeSet<NetworkKind>, _>>()?
            .into_iter()
            .collect::<Vec<_>>();
        let partition = PartitionConfig {
            runs: parse(v, "runs")?,
            balance_ratio: parse(v, "balance_ratio")?,
            balance_tolerance: parse(v, "balance_tolerance")?,
            coarsen_stop: parse(v, "coarsen_stop")?,
            initial_tries: parse(v, "initial_tries")?,
            extremity_epsilon: parse(v, "epsilon")?,
            rng_seed: seed,
        };
        partition.validate().map_err(|e| ConfigError(e.to_string()))?;
        let tune_grid = v["tune_grid"]
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| ConfigError(format!("invalid tune_grid {:?}", v["tune_grid"])))?;

        let label_source = match v["label_source"].as_str() {
            "own" => LabelSource::Own,
            "target" => LabelSource::Target,
            other => return Err(ConfigError(format!("label_source must be own or target, got {other:?}"))),
        };
        let earliest_split = if v["earliest_split"].is_empty() {
            i64::MIN
        } else {
            parse(v, "earliest_split")?
        };
        let kind: FeatureKind = v["features"].parse().map_err(|e: echoscope_stance::Error| ConfigError(e.to_string()))?;
        let class_weights = match v["class_weights"].as_str() {
            "balanced" => ClassWeights::Balanced,
            "uniform" => ClassWeights::Uniform,
            other => return Err(ConfigError(format!("class_weights must be balanced or uniform, got {other:?}"))),
        };
        let classifier = match v["classifier"].as_str() {
            "logistic" => ClassifierSpec::Logistic(LogisticConfig {
                l2_lambda: parse(v, "l2_lambda")?,
                class_weights,
                max_iter: parse(v, "max_iter")?,
                ..Default::default()
            }),
            "forest" => ClassifierSpec::Forest(ForestConfig {
                n_trees: parse(v, "trees")?,
                max_depth: parse(v, "max_depth")?,
                min_samples_split: parse(v, "min_samples_split")?,
                class_weights,
                seed,
                ..Default::default()
            }),
            other => return Err(ConfigError(format!("classifier must be logistic or forest, got {other:?}"))),
        };
        let world = WorldConfig {
            block_sizes: (parse(v, "synth_skeptics")?, parse(v, "synth_advocates")?),
            retweet_p_in: parse(v, "synth_retweet_p_in")?,
            retweet_p_out: parse(v, "synth_retweet_p_out")?,
            mention_p_in: parse(v, "synth_mention_p_in")?,
            mention_p_out: parse(v, "synth_mention_p_out")?,
            mention_cross_asymmetry: parse(v, "synth_mention_asymmetry")?,
            follow_p_in: parse(v, "synth_follow_p_in")?,
            follow_p_out: parse(v, "synth_follow_p_out")?,
            retweet_weight: parse(v, "synth_retweet_weight")?,
            tweets_per_user: parse(v, "synth_tweets_per_user")?,
            vocab_overlap: parse(v, "synth_vocab_overlap")?,
            seeds_per_side: parse(v, "synth_seeds_per_side")?,
            seed,
            ..Default::default()
        };
        let density_bins: usize = parse(v, "density_bins")?;
        if density_bins < 2 {
            return Err(ConfigError("density_bins must be at least 2".into()));
        }
        let folds: usize = parse(v, "folds")?;
        if folds < 2 {
            return Err(ConfigError("folds must be at least 2".into()));
        }
        Ok(Self {
            outdir: PathBuf::from(&v["outdir"]),
            seed,
            threads: parse(v, "threads")?,
            networks,
            edge_threshold: parse(v, "edge_threshold")?,
            partition,
            tune_grid,
            hub_k: parse(v, "hub_k")?,
            walks: parse(v, "walks")?,
            binning: v["binning"].parse().map_err(|e: echoscope_core::Error| ConfigError(e.to_string()))?,
            density_bins,
            label_source,
            earliest_split,
            features: FeatureSpec {
                kind,
                min_df: parse(v, "min_df")?,
            },
            classifier,
            folds,
            world,
            values,
            explicit,
        })
    }

    /// Path for an input key: the configured value, or the file the
    /// producing subcommand writes under the output directory.
    pub fn path(&self, key: &str) -> PathBuf {
        let v = &self.values[key];
        if !v.is_empty() {
            return PathBuf::from(v);
        }
        let (sub, file) = match key {
            "tweets" => ("synth", "tweets.ndjson"),
            "historical" => ("synth", "historical.ndjson"),
            "follows" => ("synth", "follows.tsv"),
            "profiles" => ("synth", "profiles.ndjson"),
            "seeds" => ("synth", "seeds.csv"),
            "scores" => ("partition", "scores.csv"),
            "histories" => ("dataset", "histories.ndjson"),
            "model" => ("train", "model.json"),
            _ => unreachable!("{key} is not a path key"),
        };
        self.outdir.join(sub).join(file)
    }

    /// Whether `key` was set by the file or a flag.
    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    /// Resolved values in key order.
    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// SHA-256 over the resolved `key=value` lines, leaving out keys that do
    /// not affect results.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.values {
            if UNHASHED.contains(&k.as_str()) {
                continue;
            }
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex(&h.finalize())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_format() {
        let raw = RawConfig::parse("# comment\n\nruns = 7\nseed=3 \n", "cfg").unwrap();
        let c = PipelineConfig::resolve(&raw).unwrap();
        assert_eq!(c.partition.runs, 7);
        assert_eq!(c.seed, 3);
        assert_eq!(c.partition.rng_seed, 3);
        assert_eq!(c.edge_threshold, 2);
        assert!(RawConfig::parse("runs 7", "cfg").is_err());
        assert!(RawConfig::parse("nonsense = 1", "cfg").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut raw = RawConfig::parse("runs = 7\nhub_k = 4", "cfg").unwrap();
        let mut flags = RawConfig::default();
        flags.set_pair("runs=9").unwrap();
        raw.merge(&flags);
        let c = PipelineConfig::resolve(&raw).unwrap();
        assert_eq!((c.partition.runs, c.hub_k), (9, 4));
    }

    #[test]
    fn bad_values_are_rejected() {
        for pair in ["runs=x", "binning=cubic", "classifier=svm", "networks=retweet,likes", "density_bins=1"] {
            let mut raw = RawConfig::default();
            raw.set_pair(pair).unwrap();
            assert!(PipelineConfig::resolve(&raw).is_err(), "{pair}");
        }
    }

    #[test]
    fn hash_ignores_outdir_and_threads() {
        let base = PipelineConfig::resolve(&RawConfig::default()).unwrap().hash();
        let mut raw = RawConfig::default();
        raw.set("outdir", "elsewhere").unwrap();
        raw.set("threads", "3").unwrap();
        assert_eq!(PipelineConfig::resolve(&raw).unwrap().hash(), base);
        raw.set("seed", "1").unwrap();
        assert_ne!(PipelineConfig::resolve(&raw).unwrap().hash(), base);
    }

    #[test]
    fn default_paths_point_into_outdir() {
        let mut raw = RawConfig::default();
        raw.set("outdir", "o").unwrap();
        raw.set("seeds", "my/seeds.csv").unwrap();
        let c = PipelineConfig::resolve(&raw).unwrap();
        assert_eq!(c.path("scores"), Path::new("o/partition/scores.csv"));
        assert_eq!(c.path("seeds"), Path::new("my/seeds.csv"));
        assert!(c.is_explicit("seeds") && !c.is_explicit("tweets"));
    }
}
