//! Reading interaction records and turning them into networks.
//!
//! Tweets come as NDJSON with keys `id`, `user`, `ts`, `text`, `rt_user`
//! (nullable), `mentions`, `hashtags` and `urls`; follows come as
//! `follower<TAB>followee` lines. Malformed lines are skipped and counted.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::Result;
use crate::graph::{DirectedWeightedGraph, GraphBuilder, UserId};
use crate::partition::StanceLabel;

/// Domain reported for URLs that do not parse.
pub const INVALID_DOMAIN: &str = "(invalid)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub user_id: UserId,
    /// UTC seconds.
    pub timestamp: i64,
    pub text: String,
    pub retweeted_user_id: Option<UserId>,
    pub mentioned_user_ids: Vec<UserId>,
    /// Lowercase, NFC-normalized, without the leading `#`.
    pub hashtags: Vec<String>,
    pub urls: Vec<String>,
}

impl TweetRecord {
    pub fn is_retweet(&self) -> bool {
        self.retweeted_user_id.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FollowRecord {
    pub follower: UserId,
    pub followee: UserId,
}

/// Account metadata used by the aggregate stance features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountProfile {
    #[serde(deserialize_with = "string_or_number")]
    pub user: String,
    /// Account creation time, UTC seconds.
    pub created_at: i64,
    #[serde(default)]
    pub followers: u64,
    #[serde(default)]
    pub friends: u64,
    /// Lifetime tweet count as reported by the platform.
    #[serde(default)]
    pub statuses: u64,
}

/// Records parsed from one input, with the count of skipped lines.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub parse_errors: usize,
}

impl<T> Default for Parsed<T> {
    fn default() -> Self {
        Self {
            records: Vec::new(),
            parse_errors: 0,
        }
    }
}

#[derive(Deserialize)]
struct RawTweet {
    #[serde(deserialize_with = "string_or_number")]
    id: String,
    #[serde(deserialize_with = "string_or_number")]
    user: String,
    ts: i64,
    #[serde(default)]
    text: String,
    #[serde(default, deserialize_with = "opt_string_or_number")]
    rt_user: Option<String>,
    #[serde(default)]
    mentions: Vec<StringOrNumber>,
    #[serde(default)]
    hashtags: Vec<String>,
    #[serde(default)]
    urls: Vec<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StringOrNumber {
    S(String),
    N(serde_json::Number),
}

impl StringOrNumber {
    fn into_string(self) -> String {
        match self {
            StringOrNumber::S(s) => s,
            StringOrNumber::N(n) => n.to_string(),
        }
    }
}

fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    StringOrNumber::deserialize(d).map(StringOrNumber::into_string)
}

fn opt_string_or_number<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<String>, D::Error> {
    Ok(Option::<StringOrNumber>::deserialize(d)?.map(StringOrNumber::into_string))
}

/// Strips a leading `#`, applies NFC and lowercases.
pub fn normalize_hashtag(raw: &str) -> String {
    let trimmed = raw.trim();
    let bare = trimmed.strip_prefix('#').unwrap_or(trimmed);
    bare.nfc().collect::<String>().to_lowercase()
}

impl TryFrom<RawTweet> for TweetRecord {
    type Error = String;

    fn try_from(raw: RawTweet) -> std::result::Result<Self, String> {
        let user_id = UserId::parse(&raw.user).ok_or("empty user id")?;
        if raw.ts <= 0 {
            return Err(format!("timestamp {} is not positive", raw.ts));
        }
        let retweeted_user_id = match raw.rt_user {
            Some(rt) => Some(UserId::parse(&rt).ok_or("empty rt_user")?),
            None => None,
        };
        let mentioned_user_ids = raw
            .mentions
            .into_iter()
            .filter_map(|m| {
                let m = m.into_string();
                UserId::parse(m.trim().trim_start_matches('@'))
            })
            .collect();
        let hashtags = raw
            .hashtags
            .iter()
            .map(|h| normalize_hashtag(h))
            .filter(|h| !h.is_empty())
            .collect();
        Ok(TweetRecord {
            tweet_id: raw.id,
            user_id,
            timestamp: raw.ts,
            text: raw.text,
            retweeted_user_id,
            mentioned_user_ids,
            hashtags,
            urls: raw.urls,
        })
    }
}

/// Parses one NDJSON tweet line.
pub fn parse_tweet(line: &str) -> std::result::Result<TweetRecord, String> {
    let raw: RawTweet = serde_json::from_str(line).map_err(|e| e.to_string())?;
    TweetRecord::try_from(raw)
}

pub fn read_tweets<R: BufRead>(input: R) -> Result<Parsed<TweetRecord>> {
    let mut out = Parsed::default();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_tweet(&line) {
            Ok(t) => out.records.push(t),
            Err(_) => out.parse_errors += 1,
        }
    }
    Ok(out)
}

pub fn read_follows<R: BufRead>(input: R) -> Result<Parsed<FollowRecord>> {
    let mut out = Parsed::default();
    for line in input.lines() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let parsed = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => UserId::parse(a).zip(UserId::parse(b)),
            _ => None,
        };
        match parsed {
            Some((follower, followee)) if follower != followee => {
                out.records.push(FollowRecord { follower, followee })
            }
            _ => out.parse_errors += 1,
        }
    }
    Ok(out)
}

pub fn read_profiles<R: BufRead>(input: R) -> Result<Parsed<AccountProfile>> {
    let mut out = Parsed::default();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<AccountProfile>(&line) {
            Ok(p) if !p.user.trim().is_empty() => out.records.push(p),
            _ => out.parse_errors += 1,
        }
    }
    Ok(out)
}

/// Serializes a tweet in the NDJSON input schema (no trailing newline).
pub fn tweet_to_json(t: &TweetRecord) -> String {
    serde_json::json!({
        "id": t.tweet_id,
        "user": t.user_id,
        "ts": t.timestamp,
        "text": t.text,
        "rt_user": t.retweeted_user_id,
        "mentions": t.mentioned_user_ids,
        "hashtags": t.hashtags,
        "urls": t.urls,
    })
    .to_string()
}

pub fn write_tweets<'a, W, I>(tweets: I, mut out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a TweetRecord>,
{
    for t in tweets {
        writeln!(out, "{}", tweet_to_json(t))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_follows<'a, W, I>(follows: I, mut out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a FollowRecord>,
{
    for f in follows {
        writeln!(out, "{}\t{}", f.follower, f.followee)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_profiles<'a, W, I>(profiles: I, mut out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a AccountProfile>,
{
    for p in profiles {
        writeln!(out, "{}", serde_json::to_string(p)?)?;
    }
    out.flush()?;
    Ok(())
}

/// Edge `u -> v` weighted by how many times `u` retweeted `v`. No threshold
/// is applied here.
pub fn build_retweet_network<'a, I>(tweets: I) -> DirectedWeightedGraph
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let mut b = GraphBuilder::new();
    for t in tweets {
        if let Some(target) = &t.retweeted_user_id {
            b.add_edge(&t.user_id, target, 1);
        }
    }
    b.build()
}

/// Edge `u -> v` weighted by the number of tweets of `u` mentioning `v`
/// (replies included, as they carry the mention).
pub fn build_mention_network<'a, I>(tweets: I) -> DirectedWeightedGraph
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let mut b = GraphBuilder::new();
    for t in tweets {
        let distinct: BTreeSet<&UserId> = t.mentioned_user_ids.iter().collect();
        for target in distinct {
            b.add_edge(&t.user_id, target, 1);
        }
    }
    b.build()
}

/// Unit-weight follow edges; duplicates collapse.
pub fn build_follow_network<'a, I>(follows: I) -> DirectedWeightedGraph
where
    I: IntoIterator<Item = &'a FollowRecord>,
{
    let mut b = GraphBuilder::new();
    for f in follows {
        b.add_unit_edge_dedup(&f.follower, &f.followee);
    }
    b.build()
}

/// Host of a URL without scheme, credentials, port, path or a leading
/// `www.`. Unparseable input maps to [`INVALID_DOMAIN`].
pub fn extract_domain(raw: &str) -> String {
    let raw = raw.trim();
    let candidate = if raw.contains("://") {
        raw.to_string()
    } else {
        format!("http://{raw}")
    };
    match url::Url::parse(&candidate) {
        Ok(u) => match u.host_str() {
            Some(h) if !h.is_empty() => {
                let h = h.trim_end_matches('.').to_lowercase();
                h.strip_prefix("www.").map(str::to_string).unwrap_or(h)
            }
            _ => INVALID_DOMAIN.to_string(),
        },
        Err(_) => INVALID_DOMAIN.to_string(),
    }
}

/// Usage of one token on each side: index 0 is the skeptic side, 1 the
/// advocate side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenCount {
    pub token: String,
    pub skeptic: u64,
    pub advocate: u64,
}

impl TokenCount {
    pub fn total(&self) -> u64 {
        self.skeptic + self.advocate
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContentStats {
    pub hashtags: BTreeMap<String, [u64; 2]>,
    pub domains: BTreeMap<String, [u64; 2]>,
}

fn ranked(map: &BTreeMap<String, [u64; 2]>) -> Vec<TokenCount> {
    let mut v: Vec<TokenCount> = map
        .iter()
        .map(|(k, c)| TokenCount {
            token: k.clone(),
            skeptic: c[0],
            advocate: c[1],
        })
        .collect();
    // BTreeMap order already breaks ties by token
    v.sort_by(|a, b| b.total().cmp(&a.total()));
    v
}

impl ContentStats {
    /// Hashtags by total usage across sides, most used first.
    pub fn ranked_hashtags(&self) -> Vec<TokenCount> {
        ranked(&self.hashtags)
    }

    pub fn ranked_domains(&self) -> Vec<TokenCount> {
        ranked(&self.domains)
    }

    pub fn merge(&mut self, other: &ContentStats) {
        for (k, c) in &other.hashtags {
            let e = self.hashtags.entry(k.clone()).or_default();
            e[0] += c[0];
            e[1] += c[1];
        }
        for (k, c) in &other.domains {
            let e = self.domains.entry(k.clone()).or_default();
            e[0] += c[0];
            e[1] += c[1];
        }
    }
}

/// Per-side hashtag and URL-domain usage. Each (tweet, token) pair counts
/// once; tweets from users without a side label are ignored.
pub fn content_stats<'a, I>(tweets: I, labels: &HashMap<UserId, StanceLabel>) -> ContentStats
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let mut stats = ContentStats::default();
    for t in tweets {
        let Some(side) = labels.get(&t.user_id).and_then(|l| l.side()) else {
            continue;
        };
        let tags: BTreeSet<&String> = t.hashtags.iter().collect();
        for tag in tags {
            stats.hashtags.entry(tag.clone()).or_default()[side] += 1;
        }
        let domains: BTreeSet<String> = t.urls.iter().map(|u| extract_domain(u)).collect();
        for d in domains {
            stats.domains.entry(d).or_default()[side] += 1;
        }
    }
    stats
}

/// CSV `token,skeptic,advocate,total`, ranked by total.
pub fn write_token_counts<W: Write>(rows: &[TokenCount], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["token", "skeptic", "advocate", "total"])?;
    for r in rows {
        w.write_record([
            r.token.clone(),
            r.skeptic.to_string(),
            r.advocate.to_string(),
            r.total().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
