//! Labeled synthetic corpora drawn from per-class feature marginals.
//!
//! Each user gets one bin per feature, drawn independently from the class
//! marginal, and a comment timeline is then built so that feature
//! extraction lands in exactly those bins:
//!
//! * every active day is its own epoch (active days are two calendar days
//!   apart) and every gap inside an epoch equals the drawn interval, so the
//!   average interval is that value exactly;
//! * reply flags are placed to realize a ratio inside the drawn reply bin;
//! * similar pairs come from disjoint cliques of near-copies (shared base of
//!   at least eight content words plus one private word each), and all other
//!   comments share at most one content word with anything else.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, CleaningConfig, CommentRecord, Corpus, Label};
use crate::error::{Error, Result};
use crate::features::{self, FeatureConfig};
use crate::parallel::Execution;
use crate::semantics::{Segmenter, SimilarityConfig, DEFAULT_STOP_WORDS};
use crate::time::{Timestamp, SECONDS_PER_DAY};

pub const REPLY_BINS: usize = 2;
pub const INTERVAL_BINS: usize = 7;
pub const COUNT_BINS: usize = 7;

pub const INTERVAL_BIN_WIDTH_S: i64 = 150;
/// Upper bound of the open-ended interval bin.
pub const INTERVAL_TAIL_MAX_S: i64 = 3600;
/// Range of the open-ended ">6" bins for active days and reports.
pub const COUNT_TAIL: (u32, u32) = (7, 12);
/// Range of the open-ended ">=6" similar-pair bin.
pub const PAIR_TAIL: (u32, u32) = (6, 20);

/// 2010-09-10T00:00:00Z
const DEFAULT_START: i64 = 1_284_076_800;

pub fn reply_bin(ratio: f64) -> usize {
    usize::from(ratio > 0.5)
}

/// `[0,150) [150,300) ... [750,900) [900,inf)`.
pub fn interval_bin(seconds: f64) -> usize {
    if seconds >= 900.0 {
        6
    } else {
        (seconds / INTERVAL_BIN_WIDTH_S as f64).floor().max(0.0) as usize
    }
}

/// Active days and report counts: `1..=6` then `>6`.
pub fn count_bin(count: u32) -> usize {
    (count.clamp(1, 7) - 1) as usize
}

/// Similar pairs: `0..=5` then `>=6`.
pub fn pairs_bin(pairs: u32) -> usize {
    pairs.min(6) as usize
}

/// Bin weights of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureMarginals {
    pub reply: Vec<f64>,
    pub interval: Vec<f64>,
    pub active_days: Vec<f64>,
    pub reports: Vec<f64>,
    pub similar_pairs: Vec<f64>,
}

fn normalized(percentages: &[f64]) -> Vec<f64> {
    let total: f64 = percentages.iter().sum();
    percentages.iter().map(|p| p / total).collect()
}

impl FeatureMarginals {
    /// Normal users of the training forum.
    pub fn normal_users() -> Self {
        FeatureMarginals {
            reply: normalized(&[26.77, 73.23]),
            interval: normalized(&[22.91, 33.94, 20.67, 9.16, 7.83, 2.52, 2.97]),
            active_days: normalized(&[56.33, 21.91, 11.95, 6.19, 2.52, 0.66, 0.44]),
            reports: normalized(&[44.25, 25.22, 15.93, 8.63, 3.32, 1.77, 0.88]),
            similar_pairs: normalized(&[79.65, 8.41, 1.77, 4.20, 1.55, 0.22, 4.20]),
        }
    }

    /// Manually identified paid posters of the training forum.
    pub fn paid_posters() -> Self {
        FeatureMarginals {
            reply: normalized(&[84.29, 15.71]),
            interval: normalized(&[50.00, 28.57, 14.28, 4.29, 0.00, 1.43, 1.43]),
            active_days: normalized(&[61.43, 25.71, 11.43, 1.43, 0.00, 0.00, 0.00]),
            reports: normalized(&[44.29, 28.57, 12.85, 7.14, 4.29, 1.43, 1.43]),
            similar_pairs: normalized(&[5.71, 4.29, 2.86, 5.71, 2.86, 0.00, 78.57]),
        }
    }

    /// `(name, weights, expected bin count)` for every feature.
    pub fn features(&self) -> [(&'static str, &[f64], usize); 5] {
        [
            ("reply_ratio", &self.reply, REPLY_BINS),
            ("avg_interval_s", &self.interval, INTERVAL_BINS),
            ("active_days", &self.active_days, COUNT_BINS),
            ("num_reports", &self.reports, COUNT_BINS),
            ("similar_pairs", &self.similar_pairs, COUNT_BINS),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, weights, bins) in self.features() {
            if weights.len() != bins {
                return Err(Error::Config(format!(
                    "{name} needs {bins} bin weights, got {}",
                    weights.len()
                )));
            }
            if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::Config(format!(
                    "{name} weights must be non-negative"
                )));
            }
            let sum: f64 = weights.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("{name} weights sum to {sum}, not 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassDistributions {
    pub normal: FeatureMarginals,
    pub paid: FeatureMarginals,
}

impl Default for ClassDistributions {
    fn default() -> Self {
        ClassDistributions {
            normal: FeatureMarginals::normal_users(),
            paid: FeatureMarginals::paid_posters(),
        }
    }
}

impl ClassDistributions {
    pub fn for_label(&self, label: Label) -> &FeatureMarginals {
        match label {
            Label::Normal => &self.normal,
            Label::Paid => &self.paid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_normal: usize,
    pub n_paid: usize,
    pub seed: u64,
    pub distributions: ClassDistributions,
    /// Number of generated pseudo-words comment text draws from.
    pub vocabulary_size: usize,
    /// Number of distinct news reports users comment on.
    pub report_pool: usize,
    /// Comments added on top of the minimum each user needs, drawn from
    /// `0..=extra_comments`.
    pub extra_comments: usize,
    /// Earliest post time, epoch seconds.
    pub start_time: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_normal: 452,
            n_paid: 70,
            seed: 0,
            distributions: ClassDistributions::default(),
            vocabulary_size: 5000,
            report_pool: 24,
            extra_comments: 8,
            start_time: DEFAULT_START,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        self.distributions.normal.validate()?;
        self.distributions.paid.validate()?;
        if self.report_pool < COUNT_TAIL.1 as usize {
            return Err(Error::Config(format!(
                "report_pool must be at least {}",
                COUNT_TAIL.1
            )));
        }
        if self.vocabulary_size < 1000 {
            return Err(Error::Config(
                "vocabulary_size must be at least 1000".into(),
            ));
        }
        Ok(())
    }
}

/// Bin index per feature, in feature order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bins {
    pub reply: usize,
    pub interval: usize,
    pub active_days: usize,
    pub reports: usize,
    pub similar_pairs: usize,
}

impl Bins {
    pub fn of(v: &features::FeatureVector) -> Self {
        Bins {
            reply: reply_bin(v.reply_ratio),
            interval: interval_bin(v.avg_interval_s),
            active_days: count_bin(v.active_days),
            reports: count_bin(v.num_reports),
            similar_pairs: pairs_bin(v.similar_pairs),
        }
    }

    pub fn as_array(&self) -> [usize; 5] {
        [
            self.reply,
            self.interval,
            self.active_days,
            self.reports,
            self.similar_pairs,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrawnUser {
    pub user_id: String,
    pub label: Label,
    pub bins: Bins,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    /// Carries the label map.
    pub corpus: Corpus,
    /// In user id order.
    pub users: Vec<DrawnUser>,
}

impl SyntheticCorpus {
    pub fn labels(&self) -> BTreeMap<String, Label> {
        self.users
            .iter()
            .map(|u| (u.user_id.clone(), u.label))
            .collect()
    }
}

const LOCATIONS: [&str; 8] = [
    "Beijing",
    "Guangdong",
    "Shanghai",
    "Zhejiang",
    "Jiangsu",
    "Hubei",
    "Sichuan",
    "Fujian",
];
const FILLERS: [&str; 8] = ["the", "of", "and", "is", "this", "to", "a", "that"];
const ENDINGS: [&str; 4] = [".", "!", "?", "..."];

/// Deterministic pseudo-words, none of them stop words.
pub fn vocabulary(size: usize) -> Vec<String> {
    const ONSETS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let syllables: Vec<[u8; 2]> = ONSETS
        .iter()
        .flat_map(|&c| VOWELS.iter().map(move |&v| [c, v]))
        .collect();
    let s = syllables.len();
    let total = s * s * s;
    // stride coprime with the total so consecutive words look unrelated
    let stride = 7919;
    (0..total)
        .map(|i| (i * stride) % total)
        .map(|k| {
            let mut w = Vec::with_capacity(6);
            for part in [k / (s * s), (k / s) % s, k % s] {
                w.extend_from_slice(&syllables[part]);
            }
            String::from_utf8(w).expect("ascii")
        })
        .filter(|w| !DEFAULT_STOP_WORDS.contains(&w.as_str()))
        .take(size)
        .collect()
}

fn draw(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    WeightedIndex::new(weights)
        .expect("validated weights")
        .sample(rng)
}

fn draw_bins(rng: &mut ChaCha8Rng, m: &FeatureMarginals) -> Bins {
    Bins {
        reply: draw(rng, &m.reply),
        interval: draw(rng, &m.interval),
        active_days: draw(rng, &m.active_days),
        reports: draw(rng, &m.reports),
        similar_pairs: draw(rng, &m.similar_pairs),
    }
}

/// Largest-first split of `pairs` into cliques; a clique of `m` near-copies
/// contributes `m(m-1)/2` pairs.
pub fn clique_sizes(mut pairs: u32) -> Vec<usize> {
    let mut sizes = Vec::new();
    while pairs > 0 {
        let mut m = 2u32;
        while (m + 1) * m / 2 <= pairs {
            m += 1;
        }
        pairs -= m * (m - 1) / 2;
        sizes.push(m as usize);
    }
    sizes
}

struct UserPlan {
    times: Vec<i64>,
    replies: Vec<bool>,
    reports: Vec<usize>,
    /// Clique index per comment, `None` for a standalone comment.
    clique: Vec<Option<usize>>,
    clique_count: usize,
}

fn count_value(rng: &mut ChaCha8Rng, bin: usize) -> u32 {
    if bin < 6 {
        bin as u32 + 1
    } else {
        rng.gen_range(COUNT_TAIL.0..=COUNT_TAIL.1)
    }
}

fn plan_user(rng: &mut ChaCha8Rng, bins: &Bins, cfg: &SynthConfig) -> Option<UserPlan> {
    let days = count_value(rng, bins.active_days) as usize;
    let reports = count_value(rng, bins.reports) as usize;
    let pairs = if bins.similar_pairs < 6 {
        bins.similar_pairs as u32
    } else {
        rng.gen_range(PAIR_TAIL.0..=PAIR_TAIL.1)
    };
    let gap = if bins.interval < 6 {
        let lo = bins.interval as i64 * INTERVAL_BIN_WIDTH_S;
        rng.gen_range(lo..lo + INTERVAL_BIN_WIDTH_S)
    } else {
        rng.gen_range(6 * INTERVAL_BIN_WIDTH_S..=INTERVAL_TAIL_MAX_S)
    };
    let cliques = clique_sizes(pairs);
    let in_cliques: usize = cliques.iter().sum();
    let n = [4, days + 1, reports, in_cliques]
        .into_iter()
        .max()
        .unwrap()
        + rng.gen_range(0..=cfg.extra_comments);

    // comments per day: one each, a second on one day so an epoch has a gap
    let mut per_day = vec![1usize; days];
    let busy = rng.gen_range(0..days);
    per_day[busy] += 1;
    for _ in days + 1..n {
        per_day[rng.gen_range(0..days)] += 1;
    }
    let first_day = rng.gen_range(0..40i64);
    let mut times = Vec::with_capacity(n);
    for (d, &count) in per_day.iter().enumerate() {
        let span = (count as i64 - 1) * gap;
        if span >= SECONDS_PER_DAY {
            return None;
        }
        let day_start = cfg.start_time + (first_day + 2 * d as i64) * SECONDS_PER_DAY;
        let offset = rng.gen_range(0..SECONDS_PER_DAY - span);
        times.extend((0..count as i64).map(|k| day_start + offset + k * gap));
    }

    let target = if bins.reply == 0 {
        rng.gen_range(0.0..=0.5)
    } else {
        rng.gen_range(0.5..=1.0)
    };
    let half = n / 2;
    let k = ((target * n as f64).round() as usize).min(n);
    let k = if bins.reply == 0 {
        k.min(half)
    } else {
        k.max(half + 1)
    };
    let mut replies = vec![false; n];
    for i in rand::seq::index::sample(rng, n, k) {
        replies[i] = true;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut report_of = vec![0usize; n];
    for (slot, &i) in order.iter().enumerate() {
        report_of[i] = if slot < reports {
            slot
        } else {
            rng.gen_range(0..reports)
        };
    }

    order.shuffle(rng);
    let mut clique = vec![None; n];
    let mut next = 0;
    for (c, &size) in cliques.iter().enumerate() {
        for &i in &order[next..next + size] {
            clique[i] = Some(c);
        }
        next += size;
    }

    Some(UserPlan {
        times,
        replies,
        reports: report_of,
        clique,
        clique_count: cliques.len(),
    })
}

fn render(rng: &mut ChaCha8Rng, words: &[&str]) -> String {
    let mut parts: Vec<&str> = Vec::with_capacity(words.len() * 2);
    for w in words {
        if rng.gen_bool(0.3) {
            parts.push(FILLERS[rng.gen_range(0..FILLERS.len())]);
        }
        parts.push(w);
    }
    let mut text = parts.join(" ");
    if let Some(first) = text.get(..1) {
        text.replace_range(..1, &first.to_uppercase());
    }
    text.push_str(ENDINGS[rng.gen_range(0..ENDINGS.len())]);
    text
}

fn comment_texts(rng: &mut ChaCha8Rng, plan: &UserPlan, vocab: &[String]) -> Vec<String> {
    let n = plan.clique.len();
    // base lists of 8-12 words, one private word per clique member, one
    // topic word shared by the whole user
    let need = 12 * (plan.clique_count + n) + n + 2;
    let mut fresh = rand::seq::index::sample(rng, vocab.len(), need)
        .into_iter()
        .map(|i| vocab[i].as_str());
    let mut take = |k: usize| -> Vec<&str> { fresh.by_ref().take(k).collect() };
    let topics = take(2);
    let bases: Vec<Vec<&str>> = (0..plan.clique_count)
        .map(|_| {
            let len = rng.gen_range(8..=12);
            take(len)
        })
        .collect();
    (0..n)
        .map(|i| {
            let mut words = match plan.clique[i] {
                Some(c) => {
                    let mut w = bases[c].clone();
                    w.extend(take(1));
                    w
                }
                None => {
                    let len = rng.gen_range(6..=12);
                    take(len)
                }
            };
            if rng.gen_bool(0.5) {
                words.push(topics[rng.gen_range(0..2)]);
            }
            words.shuffle(rng);
            render(rng, &words)
        })
        .collect()
}

/// Builds a labeled corpus. Deterministic for a fixed config.
pub fn generate(cfg: &SynthConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let vocab = vocabulary(cfg.vocabulary_size);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut classes: Vec<Label> = std::iter::repeat_n(Label::Normal, cfg.n_normal)
        .chain(std::iter::repeat_n(Label::Paid, cfg.n_paid))
        .collect();
    classes.shuffle(&mut rng);
    let width = classes.len().to_string().len().max(5);

    let report_ids: Vec<String> = (1..=cfg.report_pool).map(|r| format!("R{r:03}")).collect();
    let mut records = Vec::new();
    let mut users = Vec::with_capacity(classes.len());
    for (u, &label) in classes.iter().enumerate() {
        let user_id = format!("u{u:0width$}");
        let marginals = cfg.distributions.for_label(label);
        let mut picked = None;
        for _ in 0..64 {
            let bins = draw_bins(&mut rng, marginals);
            if let Some(plan) = plan_user(&mut rng, &bins, cfg) {
                picked = Some((bins, plan));
                break;
            }
        }
        let (bins, plan) = picked.ok_or_else(|| {
            Error::Infeasible(format!("no feasible timeline for {user_id} after 64 draws"))
        })?;
        let mut pool: Vec<&String> = report_ids.iter().collect();
        pool.shuffle(&mut rng);
        let texts = comment_texts(&mut rng, &plan, &vocab);
        let location = LOCATIONS[rng.gen_range(0..LOCATIONS.len())];
        for (i, content) in texts.into_iter().enumerate() {
            records.push(CommentRecord {
                report_id: pool[plan.reports[i]].clone(),
                sequence_no: 0,
                post_time: Timestamp(plan.times[i]),
                post_location: location.to_string(),
                user_id: user_id.clone(),
                content,
                is_reply: plan.replies[i],
            });
        }
        users.push(DrawnUser {
            user_id,
            label,
            bins,
        });
    }

    records.sort_by(|a, b| {
        (a.report_id.as_str(), a.post_time, a.user_id.as_str()).cmp(&(
            b.report_id.as_str(),
            b.post_time,
            b.user_id.as_str(),
        ))
    });
    let mut current = String::new();
    let mut seq = 0;
    for r in &mut records {
        if r.report_id != current {
            current.clone_from(&r.report_id);
            seq = 0;
        }
        seq += 1;
        r.sequence_no = seq;
    }
    let labels = users.iter().map(|u| (u.user_id.clone(), u.label)).collect();
    Ok(SyntheticCorpus {
        corpus: Corpus::new(records, Some(labels)),
        users,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinMismatch {
    pub user_id: String,
    pub feature: &'static str,
    pub drawn: usize,
    pub realized: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTripReport {
    pub users: usize,
    /// Whether cleaning with the default config left the corpus untouched.
    pub clean_unchanged: bool,
    pub mismatches: Vec<BinMismatch>,
}

impl RoundTripReport {
    pub fn is_ok(&self) -> bool {
        self.clean_unchanged && self.mismatches.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if let Some(m) = self.mismatches.first() {
            return Err(Error::RoundTrip {
                user_id: m.user_id.clone(),
                feature: m.feature,
                drawn: m.drawn,
                realized: m.realized,
            });
        }
        if !self.clean_unchanged {
            return Err(Error::Infeasible(
                "cleaning altered the generated corpus".into(),
            ));
        }
        Ok(self)
    }
}

/// Generates, cleans, extracts features and compares every user's realized
/// bins to the drawn ones.
pub fn round_trip_check(cfg: &SynthConfig, exec: Execution) -> Result<RoundTripReport> {
    let synth = generate(cfg)?;
    let cleaned = corpus::clean(&synth.corpus, &CleaningConfig::default());
    let profiles = corpus::group_by_user(&cleaned);
    let extracted = features::extract_all(
        &profiles,
        &Segmenter::default(),
        &SimilarityConfig::default(),
        &FeatureConfig::default(),
        exec,
    );
    let realized: BTreeMap<&str, Bins> = extracted
        .iter()
        .map(|u| (u.user_id.as_str(), Bins::of(&u.features)))
        .collect();
    const NAMES: [&str; 5] = features::FEATURE_NAMES;
    let mut mismatches = Vec::new();
    for user in &synth.users {
        let Some(got) = realized.get(user.user_id.as_str()) else {
            mismatches.push(BinMismatch {
                user_id: user.user_id.clone(),
                feature: "presence",
                drawn: 1,
                realized: 0,
            });
            continue;
        };
        for ((name, drawn), realized) in NAMES.iter().zip(user.bins.as_array()).zip(got.as_array())
        {
            if drawn != realized {
                mismatches.push(BinMismatch {
                    user_id: user.user_id.clone(),
                    feature: name,
                    drawn,
                    realized,
                });
            }
        }
    }
    Ok(RoundTripReport {
        users: synth.users.len(),
        clean_unchanged: cleaned == synth.corpus,
        mismatches,
    })
}
