//! Split-point datasets: each user's history before their first retweet of a
//! stance-labeled account.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use echoscope_core::ingest::{parse_tweet, tweet_to_json, AccountProfile, TweetRecord};
use echoscope_core::partition::StanceLabel;
use echoscope_core::synth::SyntheticUser;
use echoscope_core::UserId;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which label a history is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    /// The user's own partition label; unlabeled users are dropped.
    #[default]
    Own,
    /// The side of the accounts the user retweets.
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserHistory {
    pub user: UserId,
    pub split_point: i64,
    /// Historical tweets strictly before `split_point`, oldest first.
    pub tweets: Vec<TweetRecord>,
    pub label: StanceLabel,
    /// Side of the labeled accounts the user retweets.
    pub target_side: StanceLabel,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DatasetSummary {
    pub candidates: usize,
    pub retweet_both_sides: usize,
    pub before_earliest_split: usize,
    pub unlabeled: usize,
    pub included: usize,
}

/// Applies the split-point rules:
/// the split point is the time of the user's first retweet of any labeled
/// user, users who retweet labeled users of both sides are dropped, as are
/// users whose split point precedes `earliest_split`. Histories are taken
/// from `historical` only.
pub fn build_dataset(
    tweets: &[TweetRecord],
    historical: &[TweetRecord],
    labels: &HashMap<UserId, StanceLabel>,
    earliest_split: i64,
    source: LabelSource,
) -> (Vec<UserHistory>, DatasetSummary) {
    struct Candidate {
        split: i64,
        sides: [bool; 2],
    }
    let mut candidates: BTreeMap<&UserId, Candidate> = BTreeMap::new();
    for t in tweets.iter().chain(historical) {
        let Some(target) = &t.retweeted_user_id else { continue };
        let Some(side) = labels.get(target).and_then(|l| l.side()) else {
            continue;
        };
        let c = candidates.entry(&t.user_id).or_insert(Candidate {
            split: t.timestamp,
            sides: [false; 2],
        });
        c.split = c.split.min(t.timestamp);
        c.sides[side] = true;
    }

    let mut by_user: HashMap<&UserId, Vec<&TweetRecord>> = HashMap::new();
    for t in historical {
        by_user.entry(&t.user_id).or_default().push(t);
    }

    let mut summary = DatasetSummary {
        candidates: candidates.len(),
        ..Default::default()
    };
    let mut out = Vec::new();
    for (user, c) in candidates {
        if c.sides[0] && c.sides[1] {
            summary.retweet_both_sides += 1;
            continue;
        }
        if c.split < earliest_split {
            summary.before_earliest_split += 1;
            continue;
        }
        let target_side = if c.sides[0] {
            StanceLabel::Skeptic
        } else {
            StanceLabel::Advocate
        };
        let label = match source {
            LabelSource::Target => target_side,
            LabelSource::Own => match labels.get(user) {
                Some(&l) if l != StanceLabel::Unassigned => l,
                _ => {
                    summary.unlabeled += 1;
                    continue;
                }
            },
        };
        let mut history: Vec<TweetRecord> = by_user
            .get(user)
            .map(|ts| ts.iter().filter(|t| t.timestamp < c.split).map(|&t| t.clone()).collect())
            .unwrap_or_default();
        history.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.tweet_id.cmp(&b.tweet_id)));
        out.push(UserHistory {
            user: user.clone(),
            split_point: c.split,
            tweets: history,
            label,
            target_side,
        });
    }
    summary.included = out.len();
    (out, summary)
}

/// Histories and profiles from a synthetic corpus, split at the corpus end.
pub fn histories_from_corpus(users: &[SyntheticUser], split_point: i64) -> (Vec<UserHistory>, ProfileIndex) {
    let histories = users
        .iter()
        .map(|u| UserHistory {
            user: u.user.clone(),
            split_point,
            tweets: u.tweets.iter().filter(|t| t.timestamp < split_point).cloned().collect(),
            label: u.label,
            target_side: u.label,
        })
        .collect();
    let profiles = users.iter().map(|u| (u.user.to_string(), u.profile.clone())).collect();
    (histories, profiles)
}

pub type ProfileIndex = HashMap<String, AccountProfile>;

pub fn profile_index(profiles: Vec<AccountProfile>) -> ProfileIndex {
    profiles.into_iter().map(|p| (p.user.clone(), p)).collect()
}

#[derive(Serialize, Deserialize)]
struct HistoryLine {
    user: String,
    split_point: i64,
    label: StanceLabel,
    target: StanceLabel,
    tweets: Vec<serde_json::Value>,
}

/// One JSON object per user, tweets in the input schema.
pub fn write_histories<W: Write>(histories: &[UserHistory], mut out: W) -> Result<()> {
    for h in histories {
        let line = HistoryLine {
            user: h.user.to_string(),
            split_point: h.split_point,
            label: h.label,
            target: h.target_side,
            tweets: h
                .tweets
                .iter()
                .map(|t| serde_json::from_str(&tweet_to_json(t)))
                .collect::<std::result::Result<_, _>>()?,
        };
        writeln!(out, "{}", serde_json::to_string(&line)?)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_histories<R: BufRead>(input: R) -> Result<Vec<UserHistory>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let h: HistoryLine = serde_json::from_str(&line)?;
        let tweets = h
            .tweets
            .iter()
            .map(|v| parse_tweet(&v.to_string()))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|message| echoscope_core::Error::Parse { line: i + 1, message })?;
        let user = UserId::parse(&h.user).ok_or_else(|| echoscope_core::Error::Parse {
            line: i + 1,
            message: "empty user id".into(),
        })?;
        out.push(UserHistory {
            user,
            split_point: h.split_point,
            tweets,
            label: h.label,
            target_side: h.target,
        });
    }
    Ok(out)
}

/// Drops users without any history tweet.
pub fn retain_nonempty(histories: &mut Vec<UserHistory>) -> usize {
    let before = histories.len();
    histories.retain(|h| !h.tweets.is_empty());
    before - histories.len()
}

pub(crate) fn check_labels(histories: &[UserHistory]) -> Result<()> {
    if let Some(h) = histories.iter().find(|h| h.label.side().is_none()) {
        return Err(Error::InvalidConfig(format!("history of {} has no stance label", h.user)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(id: &str, user: &str, ts: i64, rt: Option<&str>) -> TweetRecord {
        TweetRecord {
            tweet_id: id.into(),
            user_id: user.into(),
            timestamp: ts,
            text: "testo".into(),
            retweeted_user_id: rt.map(UserId::from),
            mentioned_user_ids: vec![],
            hashtags: vec![],
            urls: vec![],
        }
    }

    fn labels() -> HashMap<UserId, StanceLabel> {
        [
            ("adv", StanceLabel::Advocate),
            ("skep", StanceLabel::Skeptic),
            ("u", StanceLabel::Advocate),
            ("w", StanceLabel::Advocate),
        ]
        .into_iter()
        .map(|(u, l)| (UserId::from(u), l))
        .collect()
    }

    #[test]
    fn history_stops_at_first_labeled_retweet() {
        let tweets = vec![tweet("r1", "u", 100, Some("adv")), tweet("r2", "u", 300, Some("adv"))];
        let historical = vec![
            tweet("h1", "u", 10, None),
            tweet("h2", "u", 50, None),
            tweet("h3", "u", 150, None),
            tweet("h4", "u", 100, None),
        ];
        let (out, summary) = build_dataset(&tweets, &historical, &labels(), 0, LabelSource::Own);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].split_point, 100);
        let ts: Vec<i64> = out[0].tweets.iter().map(|t| t.timestamp).collect();
        assert_eq!(ts, vec![10, 50]);
        assert_eq!(out[0].target_side, StanceLabel::Advocate);
        assert_eq!(summary.included, 1);
    }

    #[test]
    fn both_sides_and_early_splits_are_excluded() {
        let tweets = vec![
            tweet("a", "u", 100, Some("adv")),
            tweet("b", "u", 200, Some("skep")),
            tweet("c", "w", 5, Some("adv")),
            tweet("d", "x", 500, Some("nobody")),
        ];
        let (out, summary) = build_dataset(&tweets, &[], &labels(), 50, LabelSource::Own);
        assert!(out.is_empty());
        assert_eq!(summary.retweet_both_sides, 1);
        assert_eq!(summary.before_earliest_split, 1);
        assert_eq!(summary.candidates, 2);
    }

    #[test]
    fn label_source() {
        let tweets = vec![tweet("a", "v", 100, Some("skep"))];
        let (own, s) = build_dataset(&tweets, &[], &labels(), 0, LabelSource::Own);
        assert!(own.is_empty());
        assert_eq!(s.unlabeled, 1);
        let (target, _) = build_dataset(&tweets, &[], &labels(), 0, LabelSource::Target);
        assert_eq!(target[0].label, StanceLabel::Skeptic);
    }

    #[test]
    fn histories_round_trip() {
        let tweets = vec![tweet("r1", "u", 100, Some("adv"))];
        let historical = vec![tweet("h1", "u", 10, Some("zz")), tweet("h2", "u", 50, None)];
        let (out, _) = build_dataset(&tweets, &historical, &labels(), 0, LabelSource::Own);
        let mut buf = Vec::new();
        write_histories(&out, &mut buf).unwrap();
        assert_eq!(read_histories(std::io::Cursor::new(buf)).unwrap(), out);
    }
}
