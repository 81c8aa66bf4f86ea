//! Per-user behavioral features and the five-feature vector.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{CommentRecord, Label, UserProfile};
use crate::error::{Error, Result};
use crate::parallel::Execution;
use crate::semantics::{self, Segmenter, SimilarityConfig};
use crate::time::{TimeZone, SECONDS_PER_DAY};

pub const NUM_FEATURES: usize = 5;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "reply_ratio",
    "avg_interval_s",
    "active_days",
    "num_reports",
    "similar_pairs",
];

/// Longest gap, in seconds, between two comments of the same epoch.
pub const EPOCH_GAP_S: i64 = SECONDS_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub reply_ratio: f64,
    pub avg_interval_s: f64,
    pub active_days: u32,
    pub num_reports: u32,
    pub similar_pairs: u32,
}

impl FeatureVector {
    /// Values in the fixed model order.
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.reply_ratio,
            self.avg_interval_s,
            f64::from(self.active_days),
            f64::from(self.num_reports),
            f64::from(self.similar_pairs),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    /// Average interval reported for users without any two comments in the
    /// same epoch.
    pub interval_sentinel_s: f64,
    /// Zone in which calendar dates are counted.
    pub tz: TimeZone,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            interval_sentinel_s: EPOCH_GAP_S as f64,
            tz: TimeZone::utc(),
        }
    }
}

/// A maximal run of comments with every consecutive gap within one day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epoch<'a> {
    pub comments: &'a [CommentRecord],
}

impl Epoch<'_> {
    fn gaps(&self) -> impl Iterator<Item = i64> + '_ {
        self.comments
            .windows(2)
            .map(|w| w[1].post_time.seconds() - w[0].post_time.seconds())
    }

    /// Mean consecutive gap, `None` for a single-comment epoch.
    pub fn mean_gap(&self) -> Option<f64> {
        let n = self.comments.len();
        if n < 2 {
            return None;
        }
        let total: i64 = self.gaps().sum();
        Some(total as f64 / (n - 1) as f64)
    }
}

pub fn reply_ratio(profile: &UserProfile) -> f64 {
    if profile.comments.is_empty() {
        return 0.0;
    }
    let replies = profile.comments.iter().filter(|c| c.is_reply).count();
    replies as f64 / profile.comments.len() as f64
}

pub fn split_epochs(profile: &UserProfile) -> Vec<Epoch<'_>> {
    let comments = &profile.comments;
    let mut epochs = Vec::new();
    let mut start = 0;
    for i in 1..comments.len() {
        if comments[i].post_time.seconds() - comments[i - 1].post_time.seconds() > EPOCH_GAP_S {
            epochs.push(Epoch {
                comments: &comments[start..i],
            });
            start = i;
        }
    }
    if !comments.is_empty() {
        epochs.push(Epoch {
            comments: &comments[start..],
        });
    }
    epochs
}

/// Unweighted mean over epochs of each epoch's mean gap.
pub fn avg_interval(profile: &UserProfile, cfg: &FeatureConfig) -> f64 {
    let means: Vec<f64> = split_epochs(profile)
        .iter()
        .filter_map(Epoch::mean_gap)
        .collect();
    if means.is_empty() {
        cfg.interval_sentinel_s
    } else {
        means.iter().sum::<f64>() / means.len() as f64
    }
}

pub fn active_days(profile: &UserProfile, tz: TimeZone) -> u32 {
    profile
        .comments
        .iter()
        .map(|c| c.post_time.day_number(tz))
        .collect::<HashSet<_>>()
        .len() as u32
}

pub fn num_reports(profile: &UserProfile) -> u32 {
    profile
        .comments
        .iter()
        .map(|c| c.report_id.as_str())
        .collect::<HashSet<_>>()
        .len() as u32
}

pub fn extract(profile: &UserProfile, similar_pairs: u32, cfg: &FeatureConfig) -> FeatureVector {
    FeatureVector {
        reply_ratio: reply_ratio(profile),
        avg_interval_s: avg_interval(profile, cfg),
        active_days: active_days(profile, cfg.tz),
        num_reports: num_reports(profile),
        similar_pairs,
    }
}

/// Features of one user, as written to a feature dump.
#[derive(Debug, Clone, PartialEq)]
pub struct UserFeatures {
    pub user_id: String,
    pub features: FeatureVector,
    pub label: Option<Label>,
}

/// Full feature extraction for every profile, including the semantic pair
/// count. Output follows the input order.
pub fn extract_all(
    profiles: &[UserProfile],
    segmenter: &Segmenter,
    similarity: &SimilarityConfig,
    cfg: &FeatureConfig,
    exec: Execution,
) -> Vec<UserFeatures> {
    exec.map(profiles, |profile| {
        // the outer map already spreads users across workers
        let pairs =
            semantics::count_similar_pairs(profile, segmenter, similarity, Execution::Sequential);
        UserFeatures {
            user_id: profile.user_id.clone(),
            features: extract(profile, pairs as u32, cfg),
            label: profile.label,
        }
    })
}

/// Selected feature indices, always ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct FeatureMask(Vec<usize>);

impl FeatureMask {
    pub fn all() -> Self {
        FeatureMask((0..NUM_FEATURES).collect())
    }

    pub fn new(indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(Error::Config(
                "feature mask must select at least one feature".into(),
            ));
        }
        if let Some(bad) = v.iter().find(|&&i| i >= NUM_FEATURES) {
            return Err(Error::Config(format!(
                "feature index {bad} out of range 0..{NUM_FEATURES}"
            )));
        }
        Ok(FeatureMask(v))
    }

    /// The three ablation sets: 2 = reply ratio + interval, 4 = all
    /// behavioral features, 5 = everything.
    pub fn ablation(size: usize) -> Result<Self> {
        match size {
            2 => Self::new([0, 1]),
            4 => Self::new([0, 1, 2, 3]),
            5 => Ok(Self::all()),
            other => Err(Error::Config(format!(
                "feature set must be 2, 4 or 5, got {other}"
            ))),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn select(&self, v: &FeatureVector) -> Vec<f64> {
        let all = v.to_array();
        self.0.iter().map(|&i| all[i]).collect()
    }
}

impl Default for FeatureMask {
    fn default() -> Self {
        Self::all()
    }
}

impl TryFrom<Vec<usize>> for FeatureMask {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        FeatureMask::new(v)
    }
}

impl From<FeatureMask> for Vec<usize> {
    fn from(m: FeatureMask) -> Self {
        m.0
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(|&i| FEATURE_NAMES[i]).collect();
        f.write_str(&names.join("+"))
    }
}

impl FromStr for FeatureMask {
    type Err = Error;

    /// Accepts `2`, `4`, `5` or a comma list of indices such as `0,1,4`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if !s.contains(',') {
            if let Ok(n) = s.parse::<usize>() {
                return Self::ablation(n);
            }
        }
        let indices = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad feature index {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(indices)
    }
}

const DUMP_HEADER: &str =
    "user_id,reply_ratio,avg_interval_s,active_days,num_reports,similar_pairs,label";

/// Feature dump: a header line, then one comma-separated line per user.
pub fn format_dump(rows: &[UserFeatures]) -> String {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let mut out = String::from(DUMP_HEADER);
    out.push('\n');
    for row in rows {
        let f = &row.features;
        wtr.write_record([
            row.user_id.clone(),
            f.reply_ratio.to_string(),
            f.avg_interval_s.to_string(),
            f.active_days.to_string(),
            f.num_reports.to_string(),
            f.similar_pairs.to_string(),
            row.label.map(|l| l.to_string()).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    out.push_str(&String::from_utf8(wtr.into_inner().expect("flush")).expect("utf-8"));
    out
}

pub fn parse_dump(text: &str) -> Result<Vec<UserFeatures>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Schema(format!("feature dump line {line}: {e}")))?;
        if rec.len() < 6 {
            return Err(Error::Schema(format!(
                "feature dump line {line}: expected at least 6 fields, found {}",
                rec.len()
            )));
        }
        let bad = |what: &str| Error::Schema(format!("feature dump line {line}: bad {what}"));
        let num = |i: usize, what: &str| rec[i].trim().parse::<f64>().map_err(|_| bad(what));
        let int = |i: usize, what: &str| rec[i].trim().parse::<u32>().map_err(|_| bad(what));
        let label = match rec.get(6).map(str::trim) {
            None | Some("") => None,
            Some(l) => Some(l.parse::<Label>()?),
        };
        rows.push(UserFeatures {
            user_id: rec[0].to_string(),
            features: FeatureVector {
                reply_ratio: num(1, "reply_ratio")?,
                avg_interval_s: num(2, "avg_interval_s")?,
                active_days: int(3, "active_days")?,
                num_reports: int(4, "num_reports")?,
                similar_pairs: int(5, "similar_pairs")?,
            },
            label,
        });
    }
    Ok(rows)
}

pub fn read_dump(path: &Path) -> Result<Vec<UserFeatures>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dump(&text)
}
