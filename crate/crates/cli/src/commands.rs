//! One function per subcommand. Each reads its inputs, writes into a
//! [`Stage`] and commits it.

use std::cell::OnceCell;
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use echoscope_core::controversy::{rwc_exact, rwc_montecarlo, side_vector, Side};
use echoscope_core::echo::{
    clustering_spectrum, detect_communities, filter_side, knn_spectrum, leaning_density, neighbor_leanings,
    own_out_correlation, summarize_communities, write_assignment, write_communities, write_density,
    write_neighbor_leanings, write_spectrum, NeighborLeaning,
};
use echoscope_core::ingest::{
    build_follow_network, build_mention_network, build_retweet_network, content_stats, read_follows, read_profiles,
    read_tweets, write_follows, write_profiles, write_token_counts, write_tweets, FollowRecord, Parsed, TweetRecord,
};
use echoscope_core::partition::{
    assign_stances, ensemble_leaning, extreme_count, orient_scores, read_scores, read_seeds, tune_balance,
    write_scores, ScoreRow, StanceLabel,
};
use echoscope_core::synth::generate_world;
use echoscope_core::{DirectedWeightedGraph, UserId};
use echoscope_stance::dataset::{build_dataset, profile_index, read_histories, retain_nonempty, write_histories};
use echoscope_stance::dataset::{ProfileIndex, UserHistory};
use echoscope_stance::eval::{evaluate_cv, feature_importance};
use echoscope_stance::features::FeatureKind;
use echoscope_stance::model::{is_positive, label_of, Classifier, StanceModel};
use echoscope_stance::text::TextPipeline;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{hex, NetworkKind, PipelineConfig};
use crate::stage::Stage;

/// Subcommand names in pipeline order.
pub const SUBCOMMANDS: [&str; 14] = [
    "synth",
    "build-nets",
    "partition",
    "tune",
    "rwc",
    "communities",
    "echo",
    "spectra",
    "content-stats",
    "dataset",
    "train",
    "eval",
    "score",
    "report",
];

/// Forests with more columns than this skip permutation importance.
const PERMUTATION_LIMIT: usize = 200;

/// Lazily loaded inputs shared by the steps of one subcommand.
pub struct Inputs<'a> {
    pub cfg: &'a PipelineConfig,
    tweets: OnceCell<Vec<TweetRecord>>,
    follows: OnceCell<Vec<FollowRecord>>,
    scores: OnceCell<Vec<ScoreRow>>,
}

fn existing(cfg: &PipelineConfig, key: &str) -> Result<PathBuf> {
    let p = cfg.path(key);
    if !p.is_file() {
        bail!("input `{key}` not found: {}", p.display());
    }
    Ok(p)
}

fn open(cfg: &PipelineConfig, key: &str) -> Result<BufReader<File>> {
    let p = existing(cfg, key)?;
    Ok(BufReader::new(File::open(&p).with_context(|| format!("opening {}", p.display()))?))
}

fn records<T>(parsed: Parsed<T>, what: &str) -> Vec<T> {
    if parsed.parse_errors > 0 {
        eprintln!("warning: skipped {} malformed {what} lines", parsed.parse_errors);
    }
    parsed.records
}

impl<'a> Inputs<'a> {
    pub fn new(cfg: &'a PipelineConfig) -> Self {
        Self {
            cfg,
            tweets: OnceCell::new(),
            follows: OnceCell::new(),
            scores: OnceCell::new(),
        }
    }

    fn tweets(&self) -> Result<&[TweetRecord]> {
        if self.tweets.get().is_none() {
            let t = records(read_tweets(open(self.cfg, "tweets")?)?, "tweet");
            let _ = self.tweets.set(t);
        }
        Ok(self.tweets.get().expect("just set"))
    }

    fn follows(&self) -> Result<&[FollowRecord]> {
        if self.follows.get().is_none() {
            let f = records(read_follows(open(self.cfg, "follows")?)?, "follow");
            let _ = self.follows.set(f);
        }
        Ok(self.follows.get().expect("just set"))
    }

    fn scores(&self) -> Result<&[ScoreRow]> {
        if self.scores.get().is_none() {
            let s = read_scores(open(self.cfg, "scores")?)?;
            let _ = self.scores.set(s);
        }
        Ok(self.scores.get().expect("just set"))
    }

    fn score_map(&self) -> Result<HashMap<UserId, f64>> {
        Ok(self.scores()?.iter().map(|r| (r.user.clone(), r.score)).collect())
    }

    fn label_map(&self) -> Result<HashMap<UserId, StanceLabel>> {
        Ok(self.scores()?.iter().map(|r| (r.user.clone(), r.label)).collect())
    }

    fn profiles(&self) -> Result<ProfileIndex> {
        Ok(profile_index(records(read_profiles(open(self.cfg, "profiles")?)?, "profile")))
    }

    /// Profiles when the feature set uses them; missing profiles are an error
    /// only then.
    fn profiles_for_features(&self) -> Result<ProfileIndex> {
        if self.cfg.features.kind == FeatureKind::Bow {
            Ok(ProfileIndex::new())
        } else {
            self.profiles()
        }
    }

    fn histories(&self) -> Result<Vec<UserHistory>> {
        Ok(read_histories(open(self.cfg, "histories")?)?)
    }

    /// The network as built from the inputs; retweet edges are thresholded.
    fn network(&self, kind: NetworkKind) -> Result<DirectedWeightedGraph> {
        Ok(match kind {
            NetworkKind::Retweet => build_retweet_network(self.tweets()?).threshold_edges(self.cfg.edge_threshold),
            NetworkKind::Mention => build_mention_network(self.tweets()?),
            NetworkKind::Follow => build_follow_network(self.follows()?),
        })
    }

    /// The giant weakly connected component of [`Self::network`].
    fn analyzed(&self, kind: NetworkKind) -> Result<DirectedWeightedGraph> {
        Ok(self.network(kind)?.giant_component())
    }

    fn stage(&self, name: &str) -> Result<Stage> {
        Stage::new(&self.cfg.outdir, name)
    }
}

pub fn run(name: &str, ctx: &Inputs) -> Result<PathBuf> {
    let stage = ctx.stage(name)?;
    match name {
        "synth" => synth(ctx, &stage)?,
        "build-nets" => build_nets(ctx, &stage)?,
        "partition" => partition(ctx, &stage)?,
        "tune" => tune(ctx, &stage)?,
        "rwc" => rwc(ctx, &stage)?,
        "communities" => communities(ctx, &stage)?,
        "echo" => echo(ctx, &stage)?,
        "spectra" => spectra(ctx, &stage)?,
        "content-stats" => content(ctx, &stage)?,
        "dataset" => dataset(ctx, &stage)?,
        "train" => train(ctx, &stage)?,
        "eval" => eval(ctx, &stage)?,
        "score" => score(ctx, &stage)?,
        "report" => report(ctx, &stage)?,
        other => unreachable!("unknown subcommand {other}"),
    }
    stage.commit()
}

fn csv_rows<W: Write>(w: &mut W, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

fn synth(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let world = generate_world(&ctx.cfg.world)?;
    stage.write("tweets.ndjson", |w| Ok(write_tweets(&world.tweets, w)?))?;
    stage.write("historical.ndjson", |w| Ok(write_tweets(&world.historical, w)?))?;
    stage.write("follows.tsv", |w| Ok(write_follows(&world.follows, w)?))?;
    stage.write("profiles.ndjson", |w| Ok(write_profiles(&world.profiles, w)?))?;
    stage.write("seeds.csv", |w| {
        csv_rows(w, "user,label", world.seeds.iter().map(|(u, l)| format!("{u},{l}")))
    })?;
    stage.write("planted.csv", |w| {
        csv_rows(w, "user,label", world.planted.iter().map(|(u, l)| format!("{u},{l}")))
    })?;
    stage.json(
        "summary.json",
        &json!({
            "users": world.planted.len(),
            "tweets": world.tweets.len(),
            "historical": world.historical.len(),
            "follows": world.follows.len(),
            "seeds": world.seeds.len(),
            "config": ctx.cfg.world,
        }),
    )
}

fn build_nets(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let mut summary = BTreeMap::new();
    for &kind in &ctx.cfg.networks {
        let g = ctx.network(kind)?;
        let gcc = g.giant_component();
        stage.write(&format!("{}.tsv", kind.name()), |w| {
            Ok(echoscope_core::graph::write_edge_list(&gcc, w)?)
        })?;
        let rho = gcc.reciprocity();
        summary.insert(
            kind.name(),
            json!({
                "nodes": g.node_count(),
                "edges": g.edge_count(),
                "gcc_nodes": gcc.node_count(),
                "gcc_edges": gcc.edge_count(),
                "reciprocity": if rho.undefined { None } else { Some(rho.value) },
            }),
        );
    }
    stage.json("summary.json", &summary)
}

fn score_rows(scores: &[echoscope_core::partition::LeaningScore], labels: &BTreeMap<UserId, StanceLabel>) -> Vec<ScoreRow> {
    scores
        .iter()
        .map(|s| ScoreRow {
            user: s.user.clone(),
            score: s.score,
            label: labels.get(&s.user).copied().unwrap_or(StanceLabel::Unassigned),
        })
        .collect()
}

fn label_counts(rows: &[ScoreRow]) -> Value {
    let count = |l| rows.iter().filter(|r| r.label == l).count();
    json!({
        "skeptic": count(StanceLabel::Skeptic),
        "advocate": count(StanceLabel::Advocate),
        "unassigned": count(StanceLabel::Unassigned),
    })
}

fn partition(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let cfg = ctx.cfg;
    let seeds = read_seeds(open(cfg, "seeds")?)?;
    let g = ctx.analyzed(NetworkKind::Retweet)?;
    let scores = ensemble_leaning(&g, &cfg.partition)?;
    let assigned = assign_stances(&scores, &seeds, cfg.partition.extremity_epsilon)?;
    let oriented = orient_scores(&scores, assigned.zero_side);
    let rows = score_rows(&oriented, &assigned.labels);
    stage.write("scores.csv", |w| Ok(write_scores(&rows, w)?))?;
    let extreme = extreme_count(&oriented, cfg.partition.extremity_epsilon);
    stage.json(
        "summary.json",
        &json!({
            "nodes": g.node_count(),
            "edges": g.edge_count(),
            "runs": cfg.partition.runs,
            "balance_ratio": cfg.partition.balance_ratio,
            "epsilon": cfg.partition.extremity_epsilon,
            "extreme": extreme,
            "extreme_share": extreme as f64 / g.node_count() as f64,
            "labels": label_counts(&rows),
            "ignored_seeds": assigned.ignored_seeds,
        }),
    )
}

fn tune(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let g = ctx.analyzed(NetworkKind::Retweet)?;
    let result = tune_balance(&g, &ctx.cfg.tune_grid, &ctx.cfg.partition)?;
    let n = g.node_count() as f64;
    stage.write("tune.csv", |w| {
        csv_rows(
            w,
            "ratio,extreme,share",
            result.entries.iter().map(|e| format!("{},{},{}", e.ratio, e.extreme, e.extreme as f64 / n)),
        )
    })?;
    stage.json(
        "summary.json",
        &json!({ "nodes": g.node_count(), "best_ratio": result.best_ratio, "extreme": result.best().extreme }),
    )
}

fn rwc(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let cfg = ctx.cfg;
    let sides: HashMap<UserId, Side> = ctx
        .label_map()?
        .into_iter()
        .filter_map(|(u, l)| Some((u, Side::from_stance(l)?)))
        .collect();
    for &kind in &cfg.networks {
        let g = ctx.network(kind)?;
        let keep: Vec<bool> = g.ids().iter().map(|id| sides.contains_key(id)).collect();
        let sub = g.induced_subgraph(&keep);
        let sv = side_vector(&sub, &sides)?;
        let report = if cfg.walks == 0 {
            rwc_exact(&sub, &sv, cfg.hub_k)
        } else {
            rwc_montecarlo(&sub, &sv, cfg.hub_k, cfg.walks, cfg.seed)
        }
        .with_context(|| format!("{} network", kind.name()))?;
        stage.json(&format!("{}.json", kind.name()), &report)?;
    }
    Ok(())
}

fn communities(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let scores = ctx.score_map()?;
    let mut summary = BTreeMap::new();
    for &kind in &ctx.cfg.networks {
        let g = ctx.analyzed(kind)?;
        let c = detect_communities(&g).with_context(|| format!("{} network", kind.name()))?;
        let rows = summarize_communities(&g, &c, &scores);
        stage.write(&format!("{}_communities.csv", kind.name()), |w| Ok(write_communities(&rows, w)?))?;
        stage.write(&format!("{}_assignment.csv", kind.name()), |w| Ok(write_assignment(&g, &c, w)?))?;
        summary.insert(
            kind.name(),
            json!({ "nodes": g.node_count(), "communities": c.count, "modularity": c.modularity }),
        );
    }
    stage.json("summary.json", &summary)
}

fn echo(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let scores = ctx.score_map()?;
    let labels = ctx.label_map()?;
    let bins = ctx.cfg.density_bins;
    let mut summary = BTreeMap::new();
    for &kind in &ctx.cfg.networks {
        let name = kind.name();
        let g = ctx.analyzed(kind)?;
        let records = neighbor_leanings(&g, &scores);
        stage.write(&format!("{name}_leanings.csv"), |w| Ok(write_neighbor_leanings(&records, w)?))?;
        let density = leaning_density(&records, bins)?;
        stage.write(&format!("{name}_density.csv"), |w| Ok(write_density(&density, w)?))?;
        let mut per_side = BTreeMap::new();
        for side in [StanceLabel::Skeptic, StanceLabel::Advocate] {
            let subset: Vec<NeighborLeaning> = filter_side(&records, &labels, side).cloned().collect();
            let density = leaning_density(&subset, bins)?;
            stage.write(&format!("{name}_density_{side}.csv"), |w| Ok(write_density(&density, w)?))?;
            per_side.insert(side.as_str(), json!({ "users": subset.len(), "correlation": own_out_correlation(&subset) }));
        }
        summary.insert(
            name,
            json!({
                "users": records.len(),
                "correlation": own_out_correlation(&records),
                "sides": per_side,
            }),
        );
    }
    stage.json("summary.json", &summary)
}

fn spectra(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let binning = ctx.cfg.binning;
    let mut summary = BTreeMap::new();
    for &kind in &ctx.cfg.networks {
        let name = kind.name();
        let g = ctx.analyzed(kind)?;
        let clustering = clustering_spectrum(&g, binning, false);
        let knn = knn_spectrum(&g, binning);
        stage.write(&format!("{name}_clustering.csv"), |w| Ok(write_spectrum(&clustering, w)?))?;
        stage.write(&format!("{name}_knn.csv"), |w| Ok(write_spectrum(&knn, w)?))?;
        summary.insert(name, json!({ "nodes": g.node_count(), "binning": binning.to_string() }));
    }
    stage.json("summary.json", &summary)
}

fn content(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let stats = content_stats(ctx.tweets()?, &ctx.label_map()?);
    stage.write("hashtags.csv", |w| Ok(write_token_counts(&stats.ranked_hashtags(), w)?))?;
    stage.write("domains.csv", |w| Ok(write_token_counts(&stats.ranked_domains(), w)?))?;
    stage.json(
        "summary.json",
        &json!({ "hashtags": stats.hashtags.len(), "domains": stats.domains.len() }),
    )
}

fn dataset(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let cfg = ctx.cfg;
    let historical = records(read_tweets(open(cfg, "historical")?)?, "historical tweet");
    let labels = ctx.label_map()?;
    let (mut histories, summary) =
        build_dataset(ctx.tweets()?, &historical, &labels, cfg.earliest_split, cfg.label_source);
    let empty = retain_nonempty(&mut histories);
    stage.write("histories.ndjson", |w| Ok(write_histories(&histories, w)?))?;
    let count = |l| histories.iter().filter(|h| h.label == l).count();
    stage.json(
        "summary.json",
        &json!({
            "candidates": summary.candidates,
            "retweet_both_sides": summary.retweet_both_sides,
            "before_earliest_split": summary.before_earliest_split,
            "unlabeled": summary.unlabeled,
            "empty_history": empty,
            "included": histories.len(),
            "skeptic": count(StanceLabel::Skeptic),
            "advocate": count(StanceLabel::Advocate),
        }),
    )
}

fn train(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let cfg = ctx.cfg;
    let histories = ctx.histories()?;
    let profiles = ctx.profiles_for_features()?;
    let pipeline = TextPipeline::default();
    let model = StanceModel::fit(&histories, &profiles, &cfg.features, &cfg.classifier, &pipeline, cfg.hash())?;
    stage.write("model.json", |w| Ok(model.write(w)?))?;

    let names = model.features.feature_names();
    let skip = matches!(model.classifier, Classifier::Forest(_)) && names.len() > PERMUTATION_LIMIT;
    if !skip {
        let x = histories
            .iter()
            .map(|h| model.features.transform(h, &profiles, &pipeline))
            .collect::<echoscope_stance::Result<Vec<_>>>()?;
        let y: Vec<bool> = histories.iter().map(|h| is_positive(h.label)).collect();
        let ranked = feature_importance(&model.classifier, &names, &x, &y, 10, cfg.seed);
        stage.write("importance.csv", |w| {
            csv_rows(w, "feature,importance", ranked.iter().map(|i| format!("{},{}", i.feature, i.importance)))
        })?;
    }
    stage.json(
        "summary.json",
        &json!({
            "users": histories.len(),
            "features": names.len(),
            "config_hash": model.config_hash,
            "importance": if skip { "skipped: too many features for permutation importance" } else { "importance.csv" },
        }),
    )
}

fn eval(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let cfg = ctx.cfg;
    let histories = ctx.histories()?;
    let profiles = ctx.profiles_for_features()?;
    let report = evaluate_cv(
        &histories,
        &profiles,
        &cfg.features,
        &cfg.classifier,
        &TextPipeline::default(),
        cfg.folds,
        cfg.seed,
    )?;
    stage.json("report.json", &report)
}

fn score(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let model = StanceModel::read(open(ctx.cfg, "model")?)?;
    let histories = ctx.histories()?;
    let profiles = if model.features.standardizer.is_some() {
        ctx.profiles()?
    } else {
        ProfileIndex::new()
    };
    let pipeline = TextPipeline::default();
    let rows = histories
        .iter()
        .map(|h| {
            let s = model.score(h, &profiles, &pipeline)?;
            Ok(ScoreRow {
                user: h.user.clone(),
                score: s,
                label: label_of(s),
            })
        })
        .collect::<echoscope_stance::Result<Vec<_>>>()?;
    stage.write("predictions.csv", |w| Ok(write_scores(&rows, w)?))?;
    let correct = histories.iter().zip(&rows).filter(|(h, r)| h.label == r.label).count();
    stage.json(
        "summary.json",
        &json!({
            "users": rows.len(),
            "model_config_hash": model.config_hash,
            "agreement_with_dataset_labels": correct as f64 / rows.len().max(1) as f64,
        }),
    )
}

fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let mut h = Sha256::new();
    let mut f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let bytes = std::io::copy(&mut f, &mut h)?;
    Ok((hex(&h.finalize()), bytes))
}

fn report(ctx: &Inputs, stage: &Stage) -> Result<()> {
    let cfg = ctx.cfg;
    let mut artifacts = Vec::new();
    let mut summaries = BTreeMap::new();
    for sub in SUBCOMMANDS.iter().filter(|&&s| s != "report") {
        let dir = cfg.outdir.join(sub);
        if !dir.is_dir() {
            continue;
        }
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.sort();
        for path in files.iter().filter(|p| p.is_file()) {
            let (sha256, bytes) = sha256_file(path)?;
            let file = path.file_name().expect("file").to_string_lossy();
            artifacts.push(json!({ "path": format!("{sub}/{file}"), "sha256": sha256, "bytes": bytes }));
            if file == "summary.json" || file == "report.json" {
                let v: Value = serde_json::from_reader(BufReader::new(File::open(path)?))?;
                summaries.insert(sub.to_string(), v);
            }
        }
    }
    if artifacts.is_empty() {
        bail!("no artifacts found under {}", cfg.outdir.display());
    }
    stage.json(
        "manifest.json",
        &json!({
            "tool": "echoscope",
            "version": env!("CARGO_PKG_VERSION"),
            "created_at": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            "config_hash": cfg.hash(),
            "config": cfg.values(),
            "seeds": {
                "global": cfg.seed,
                "partition": cfg.partition.rng_seed,
                "synth": cfg.world.seed,
                "forest": cfg.seed,
                "cross_validation": cfg.seed,
                "montecarlo": cfg.seed,
            },
            "artifacts": artifacts,
            "summaries": summaries,
        }),
    )
}
