//! Seeded ground-truth generators.
//!
//! Planted-partition graphs give known sides for partitioning, controversy
//! and echo-chamber checks; synthetic corpora give labeled users with
//! side-specific vocabulary and behavior for the stance classifiers. A
//! [`World`] ties both together and is written in the same NDJSON/TSV
//! formats that [`crate::ingest`] reads.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedWeightedGraph, GraphBuilder, UserId};
use crate::ingest::{AccountProfile, FollowRecord, TweetRecord};
use crate::partition::StanceLabel;

const DAY: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightLaw {
    Constant(u64),
    /// Geometric on `{1, 2, ...}` with the given mean (at least 1).
    Geometric(f64),
}

impl WeightLaw {
    fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        match *self {
            WeightLaw::Constant(w) => w.max(1),
            WeightLaw::Geometric(mean) => {
                let p = 1.0 / mean.max(1.0);
                let mut k = 1;
                while k < 10_000 && rng.gen::<f64>() >= p {
                    k += 1;
                }
                k
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub block_sizes: (usize, usize),
    pub p_in: f64,
    pub p_out: f64,
    pub directed: bool,
    pub weight_law: WeightLaw,
    /// Multiplier on the block 0 -> block 1 edge probability; 1 is symmetric.
    pub cross_asymmetry: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            block_sizes: (100, 100),
            p_in: 0.1,
            p_out: 0.005,
            directed: true,
            weight_law: WeightLaw::Constant(2),
            cross_asymmetry: 1.0,
            seed: 0,
        }
    }
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.block_sizes.0 >= 1
            && self.block_sizes.1 >= 1
            && (0.0..=1.0).contains(&self.p_in)
            && (0.0..=1.0).contains(&self.p_out)
            && self.p_out <= self.p_in
            && self.cross_asymmetry >= 0.0
            && self.cross_asymmetry.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid block model {self:?}")))
        }
    }
}

/// A generated graph with the block of every node.
#[derive(Debug, Clone)]
pub struct PlantedGraph {
    pub graph: DirectedWeightedGraph,
    pub blocks: BTreeMap<UserId, usize>,
}

impl PlantedGraph {
    /// Block of each node in graph order.
    pub fn block_vec(&self) -> Vec<usize> {
        self.graph.ids().iter().map(|id| self.blocks[id]).collect()
    }
}

/// Node id for global index `i`; zero padding keeps id order equal to index
/// order.
pub fn node_id(i: usize) -> UserId {
    UserId::from(format!("u{i:06}"))
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws every ordered (or, when undirected, unordered) pair independently.
/// Edge draws use one uniform per pair from a dedicated stream, so two calls
/// differing only in probabilities are coupled: raising a probability only
/// adds edges.
fn planted<F>(sizes: &[usize], prob: F, directed: bool, law: WeightLaw, seed: u64) -> PlantedGraph
where
    F: Fn(usize, usize) -> f64,
{
    let n: usize = sizes.iter().sum();
    let mut block_of = Vec::with_capacity(n);
    for (b, &size) in sizes.iter().enumerate() {
        block_of.extend(std::iter::repeat(b).take(size));
    }
    let ids: Vec<UserId> = (0..n).map(node_id).collect();
    let mut edge_rng = rng_for(seed, 0);
    let mut weight_rng = rng_for(seed, 1);
    let mut b = GraphBuilder::new();
    for id in &ids {
        b.add_node(id);
    }
    for i in 0..n {
        let range = if directed { 0..n } else { i + 1..n };
        for j in range {
            if i == j {
                continue;
            }
            let u: f64 = edge_rng.gen();
            if u < prob(block_of[i], block_of[j]) {
                let w = law.sample(&mut weight_rng);
                b.add_edge(&ids[i], &ids[j], w);
                if !directed {
                    b.add_edge(&ids[j], &ids[i], w);
                }
            }
        }
    }
    PlantedGraph {
        graph: b.build(),
        blocks: ids.into_iter().zip(block_of).collect(),
    }
}

/// Two-block stochastic block model with an optional asymmetry on
/// block 0 -> block 1 edges.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<PlantedGraph> {
    cfg.validate()?;
    let p01 = (cfg.p_out * cfg.cross_asymmetry).min(1.0);
    let (p_in, p_out) = (cfg.p_in, cfg.p_out);
    Ok(planted(
        &[cfg.block_sizes.0, cfg.block_sizes.1],
        |a, b| match (a, b) {
            (0, 1) => p01,
            (1, 0) => p_out,
            _ => p_in,
        },
        cfg.directed,
        cfg.weight_law,
        cfg.seed,
    ))
}

/// Planted partition with any number of equal-probability blocks.
pub fn generate_multiblock(sizes: &[usize], p_in: f64, p_out: f64, directed: bool, seed: u64) -> PlantedGraph {
    planted(
        sizes,
        |a, b| if a == b { p_in } else { p_out },
        directed,
        WeightLaw::Constant(1),
        seed,
    )
}

/// Erdős–Rényi `G(n, p)` with unit weights.
pub fn generate_gnp(n: usize, p: f64, directed: bool, seed: u64) -> DirectedWeightedGraph {
    planted(&[n], |_, _| p, directed, WeightLaw::Constant(1), seed).graph
}

const SYLLABLES: [&str; 16] = [
    "ba", "ce", "di", "fo", "gu", "la", "me", "ni", "po", "ru", "sa", "te", "vi", "zo", "ca", "de",
];

/// Pseudo-word for token index `i`: three letter-only syllables plus more as
/// needed, never an Italian stopword.
pub fn pseudo_word(mut i: usize) -> String {
    let mut w = String::from("z");
    for _ in 0..3 {
        w.push_str(SYLLABLES[i % 16]);
        i /= 16;
    }
    while i > 0 {
        w.push_str(SYLLABLES[i % 16]);
        i /= 16;
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextCorpusConfig {
    /// Users on the (skeptic, advocate) sides.
    pub users_per_side: (usize, usize),
    /// Fraction of each side's token pool shared with the other side.
    pub vocab_overlap: f64,
    pub tweets_per_user: usize,
    /// Distinct tokens available to each side.
    pub pool_size: usize,
    pub words_per_tweet: (usize, usize),
    /// Probability that a tweet is a retweet, per side.
    pub retweet_rate: (f64, f64),
    /// Probability that a word is written in capitals, per side.
    pub uppercase_rate: (f64, f64),
    /// Probability of a trailing exclamation mark, per side.
    pub exclamation_rate: (f64, f64),
    /// All history tweets fall before this time.
    pub end_ts: i64,
    /// Prefix for user ids.
    pub id_prefix: String,
    pub seed: u64,
}

impl TextCorpusConfig {
    pub fn new(users_per_side: usize, vocab_overlap: f64, tweets_per_user: usize, seed: u64) -> Self {
        Self {
            users_per_side: (users_per_side, users_per_side),
            vocab_overlap,
            tweets_per_user,
            pool_size: 300,
            words_per_tweet: (6, 14),
            retweet_rate: (0.3, 0.3),
            uppercase_rate: (0.05, 0.05),
            exclamation_rate: (0.1, 0.1),
            end_ts: 1_535_760_000, // 2018-09-01
            id_prefix: "t".into(),
            seed,
        }
    }
}

/// A generated user with label, profile and tweet history.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticUser {
    pub user: UserId,
    pub label: StanceLabel,
    pub profile: AccountProfile,
    pub tweets: Vec<TweetRecord>,
}

struct Vocabulary {
    pools: [Vec<String>; 2],
}

impl Vocabulary {
    fn new(pool_size: usize, overlap: f64) -> Self {
        let shared = ((overlap.clamp(0.0, 1.0) * pool_size as f64).round() as usize).min(pool_size);
        let own = pool_size - shared;
        let side0: Vec<String> = (0..pool_size).map(pseudo_word).collect();
        let side1: Vec<String> = (0..shared)
            .chain(pool_size..pool_size + own)
            .map(pseudo_word)
            .collect();
        Self { pools: [side0, side1] }
    }
}

fn compose_text<R: Rng>(
    rng: &mut R,
    pool: &[String],
    words: (usize, usize),
    upper: f64,
    exclaim: f64,
) -> String {
    let k = rng.gen_range(words.0..=words.1.max(words.0));
    let mut parts: Vec<String> = (0..k)
        .map(|_| {
            let w = &pool[rng.gen_range(0..pool.len())];
            if rng.gen::<f64>() < upper {
                w.to_uppercase()
            } else {
                w.clone()
            }
        })
        .collect();
    if rng.gen::<f64>() < exclaim {
        parts.last_mut().expect("at least one word").push('!');
    } else if rng.gen::<f64>() < 0.1 {
        parts.last_mut().expect("at least one word").push('?');
    }
    parts.join(" ")
}

fn side_pick<T: Copy>(pair: (T, T), side: usize) -> T {
    if side == 0 {
        pair.0
    } else {
        pair.1
    }
}

/// Generates one user's history of `count` tweets ending before `end_ts`.
#[allow(clippy::too_many_arguments)]
fn user_history<R: Rng>(
    rng: &mut R,
    user: &UserId,
    side: usize,
    vocab: &Vocabulary,
    cfg: &TextCorpusConfig,
    count: usize,
    start_ts: i64,
    end_ts: i64,
    tweet_seq: &mut u64,
) -> Vec<TweetRecord> {
    let pool = &vocab.pools[side];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let ts = rng.gen_range(start_ts..end_ts.max(start_ts + 1));
        let mut text = compose_text(
            rng,
            pool,
            cfg.words_per_tweet,
            side_pick(cfg.uppercase_rate, side),
            side_pick(cfg.exclamation_rate, side),
        );
        let mut mentions = Vec::new();
        let mut urls = Vec::new();
        let mut hashtags = Vec::new();
        let retweeted = if rng.gen::<f64>() < side_pick(cfg.retweet_rate, side) {
            // retweets of accounts outside the labeled population
            let target = UserId::from(format!("ext{}{:03}", side, rng.gen_range(0..50)));
            text = format!("RT @{target}: {text}");
            Some(target)
        } else {
            None
        };
        if rng.gen::<f64>() < 0.2 {
            let m = UserId::from(format!("ext{}{:03}", side, rng.gen_range(0..50)));
            text = format!("@{m} {text}");
            mentions.push(m);
        }
        if rng.gen::<f64>() < 0.15 {
            let host = if side == 0 { "byoblu.com" } else { "repubblica.it" };
            let u = format!("https://www.{host}/a/{}", rng.gen_range(0..1000));
            text = format!("{text} {u}");
            urls.push(u);
        }
        if rng.gen::<f64>() < 0.25 {
            let tag = pool[rng.gen_range(0..pool.len())].clone();
            text = format!("{text} #{tag}");
            hashtags.push(tag);
        }
        *tweet_seq += 1;
        out.push(TweetRecord {
            tweet_id: format!("h{tweet_seq}"),
            user_id: user.clone(),
            timestamp: ts,
            text,
            retweeted_user_id: retweeted,
            mentioned_user_ids: mentions,
            hashtags,
            urls,
        });
    }
    out.sort_by_key(|t| t.timestamp);
    out
}

fn profile_for<R: Rng>(rng: &mut R, user: &UserId, reference_ts: i64, tweets: usize) -> AccountProfile {
    AccountProfile {
        user: user.to_string(),
        created_at: reference_ts - rng.gen_range(200..3000) * DAY,
        followers: rng.gen_range(10..5000),
        friends: rng.gen_range(10..2000),
        statuses: tweets as u64 + rng.gen_range(0..5000),
    }
}

/// Labeled users whose tweets draw words from side-specific token pools that
/// share `vocab_overlap` of their tokens. Side 0 users are skeptics.
pub fn generate_text_corpus(cfg: &TextCorpusConfig) -> Result<Vec<SyntheticUser>> {
    if !(0.0..=1.0).contains(&cfg.vocab_overlap) {
        return Err(Error::InvalidConfig("vocab_overlap must lie in [0, 1]".into()));
    }
    if cfg.pool_size == 0 || cfg.words_per_tweet.0 == 0 {
        return Err(Error::InvalidConfig("pool size and words per tweet must be positive".into()));
    }
    let vocab = Vocabulary::new(cfg.pool_size, cfg.vocab_overlap);
    let mut rng = rng_for(cfg.seed, 2);
    let mut seq = 0;
    let mut users = Vec::new();
    let total = cfg.users_per_side.0 + cfg.users_per_side.1;
    for i in 0..total {
        let side = usize::from(i >= cfg.users_per_side.0);
        let user = UserId::from(format!("{}{i:06}", cfg.id_prefix));
        let start = cfg.end_ts - 365 * DAY;
        let tweets = user_history(
            &mut rng,
            &user,
            side,
            &vocab,
            cfg,
            cfg.tweets_per_user,
            start,
            cfg.end_ts,
            &mut seq,
        );
        let profile = profile_for(&mut rng, &user, cfg.end_ts, tweets.len());
        users.push(SyntheticUser {
            user,
            label: if side == 0 {
                StanceLabel::Skeptic
            } else {
                StanceLabel::Advocate
            },
            profile,
            tweets,
        });
    }
    Ok(users)
}

/// Everything needed to run the whole pipeline on synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub block_sizes: (usize, usize),
    pub retweet_p_in: f64,
    pub retweet_p_out: f64,
    pub mention_p_in: f64,
    pub mention_p_out: f64,
    /// Extra skeptic -> advocate mentions.
    pub mention_cross_asymmetry: f64,
    pub follow_p_in: f64,
    pub follow_p_out: f64,
    /// Retweets per retweet edge.
    pub retweet_weight: u64,
    pub tweets_per_user: usize,
    pub vocab_overlap: f64,
    pub seeds_per_side: usize,
    /// Debate tweets (retweets, mentions) happen after this time; histories
    /// precede it.
    pub debate_start_ts: i64,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            block_sizes: (120, 185),
            retweet_p_in: 0.06,
            retweet_p_out: 0.002,
            mention_p_in: 0.03,
            mention_p_out: 0.006,
            mention_cross_asymmetry: 3.0,
            follow_p_in: 0.08,
            follow_p_out: 0.008,
            retweet_weight: 2,
            tweets_per_user: 30,
            vocab_overlap: 0.3,
            seeds_per_side: 3,
            debate_start_ts: 1_535_760_000, // 2018-09-01
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    /// Debate tweets: retweets and mentions between users.
    pub tweets: Vec<TweetRecord>,
    /// Per-user timelines before the debate.
    pub historical: Vec<TweetRecord>,
    pub follows: Vec<FollowRecord>,
    pub profiles: Vec<AccountProfile>,
    pub seeds: Vec<(UserId, StanceLabel)>,
    pub planted: BTreeMap<UserId, StanceLabel>,
}

fn side_label(block: usize) -> StanceLabel {
    if block == 0 {
        StanceLabel::Skeptic
    } else {
        StanceLabel::Advocate
    }
}

pub fn generate_world(cfg: &WorldConfig) -> Result<World> {
    let sbm = |p_in: f64, p_out: f64, asym: f64, law: WeightLaw, stream: u64| {
        generate_sbm(&SbmConfig {
            block_sizes: cfg.block_sizes,
            p_in,
            p_out,
            directed: true,
            weight_law: law,
            cross_asymmetry: asym,
            seed: cfg.seed.wrapping_mul(31).wrapping_add(stream),
        })
    };
    let retweets = sbm(
        cfg.retweet_p_in,
        cfg.retweet_p_out,
        1.0,
        WeightLaw::Constant(cfg.retweet_weight),
        1,
    )?;
    let mentions = sbm(
        cfg.mention_p_in,
        cfg.mention_p_out,
        cfg.mention_cross_asymmetry,
        WeightLaw::Constant(1),
        2,
    )?;
    let follows = sbm(cfg.follow_p_in, cfg.follow_p_out, 1.0, WeightLaw::Constant(1), 3)?;

    let vocab = Vocabulary::new(300, cfg.vocab_overlap);
    let text_cfg = TextCorpusConfig::new(0, cfg.vocab_overlap, cfg.tweets_per_user, cfg.seed);
    let mut rng = rng_for(cfg.seed, 4);
    let blocks = &retweets.blocks;
    let mut seq = 0u64;

    let mut tweets = Vec::new();
    let debate_len = 90 * DAY;
    for (s, t, w) in retweets.graph.edges() {
        let (u, v) = (retweets.graph.id(s), retweets.graph.id(t));
        for _ in 0..w {
            seq += 1;
            let body = compose_text(&mut rng, &vocab.pools[blocks[v]], (5, 10), 0.0, 0.0);
            tweets.push(TweetRecord {
                tweet_id: format!("d{seq}"),
                user_id: u.clone(),
                timestamp: cfg.debate_start_ts + rng.gen_range(0..debate_len),
                text: format!("RT @{v}: {body}"),
                retweeted_user_id: Some(v.clone()),
                mentioned_user_ids: vec![],
                hashtags: vec![if blocks[v] == 0 { "novax".into() } else { "iovaccino".into() }],
                urls: vec![],
            });
        }
    }
    for (s, t, _) in mentions.graph.edges() {
        let (u, v) = (mentions.graph.id(s), mentions.graph.id(t));
        seq += 1;
        let body = compose_text(&mut rng, &vocab.pools[blocks[u]], (5, 10), 0.05, 0.1);
        tweets.push(TweetRecord {
            tweet_id: format!("d{seq}"),
            user_id: u.clone(),
            timestamp: cfg.debate_start_ts + rng.gen_range(0..debate_len),
            text: format!("@{v} {body}"),
            retweeted_user_id: None,
            mentioned_user_ids: vec![v.clone()],
            hashtags: vec!["vaccini".into()],
            urls: vec![format!(
                "https://www.{}/n/{}",
                if blocks[u] == 0 { "byoblu.com" } else { "repubblica.it" },
                rng.gen_range(0..100)
            )],
        });
    }
    tweets.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.tweet_id.cmp(&b.tweet_id)));

    let mut historical = Vec::new();
    let mut profiles = Vec::new();
    for (user, &block) in blocks {
        let h = user_history(
            &mut rng,
            user,
            block,
            &vocab,
            &text_cfg,
            cfg.tweets_per_user,
            cfg.debate_start_ts - 365 * DAY,
            cfg.debate_start_ts,
            &mut seq,
        );
        profiles.push(profile_for(&mut rng, user, cfg.debate_start_ts, h.len()));
        historical.extend(h);
    }

    let follow_records = follows
        .graph
        .edges()
        .map(|(s, t, _)| FollowRecord {
            follower: follows.graph.id(s).clone(),
            followee: follows.graph.id(t).clone(),
        })
        .collect();

    // most-retweeted users of each block act as known seeds
    let mut seeds = Vec::new();
    for block in 0..2 {
        let mut members: Vec<usize> = (0..retweets.graph.node_count())
            .filter(|&i| blocks[retweets.graph.id(i)] == block)
            .collect();
        members.shuffle(&mut rng);
        members.sort_by_key(|&i| std::cmp::Reverse(retweets.graph.in_degree(i)));
        for &i in members.iter().take(cfg.seeds_per_side) {
            seeds.push((retweets.graph.id(i).clone(), side_label(block)));
        }
    }

    Ok(World {
        tweets,
        historical,
        follows: follow_records,
        profiles,
        seeds,
        planted: blocks.iter().map(|(u, &b)| (u.clone(), side_label(b))).collect(),
    })
}
