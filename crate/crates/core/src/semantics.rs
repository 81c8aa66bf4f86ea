//! Content-word extraction and similar-comment-pair counting.
//!
//! Two comments are similar when the number of content words they share
//! (counted with multiplicity) divided by the length of the shorter
//! content-word list reaches the ratio threshold. Similarity is checked
//! pairwise only, never closed transitively.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::UserProfile;
use crate::error::{Error, Result};
use crate::parallel::Execution;

/// Function words dropped by default. English plus common Chinese particles.
pub const DEFAULT_STOP_WORDS: &[&str] = &[
    "a", "about", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "but", "by", "can", "could", "did", "do", "does",
    "for", "from", "had", "has", "have", "he", "her", "here", "him", "his", "how", "i", "if", "in",
    "into", "is", "it", "its", "just", "me", "more", "most", "my", "no", "not", "now", "of", "on",
    "or", "our", "out", "over", "she", "so", "some", "such", "than", "that", "the", "their",
    "them", "then", "there", "these", "they", "this", "those", "to", "too", "up", "us", "very",
    "was", "we", "were", "what", "when", "which", "who", "why", "will", "with", "would", "you",
    "your", "的", "了", "是", "在", "和", "也", "就", "都", "而", "及", "与", "着", "或", "吗",
    "呢", "吧", "啊", "这", "那", "个", "我", "你", "他", "她", "它",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentMode {
    /// Split on anything that is not alphanumeric.
    Whitespace,
    /// Greedy longest match against a dictionary; unmatched characters
    /// become single-character tokens.
    Dictionary {
        words: HashSet<String>,
        max_chars: usize,
    },
}

/// Turns text into content words: split, case-fold, drop stop words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmenter {
    mode: SegmentMode,
    stop_words: HashSet<String>,
}

impl Segmenter {
    pub fn whitespace<I, S>(stop_words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Segmenter {
            mode: SegmentMode::Whitespace,
            stop_words: fold_all(stop_words),
        }
    }

    pub fn dictionary<D, I, S, T>(dictionary: D, stop_words: I) -> Result<Self>
    where
        D: IntoIterator<Item = T>,
        T: AsRef<str>,
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: HashSet<String> = fold_all(dictionary);
        if words.is_empty() {
            return Err(Error::Config(
                "dictionary segmentation needs a non-empty dictionary".into(),
            ));
        }
        let max_chars = words.iter().map(|w| w.chars().count()).max().unwrap_or(1);
        Ok(Segmenter {
            mode: SegmentMode::Dictionary { words, max_chars },
            stop_words: fold_all(stop_words),
        })
    }

    pub fn mode(&self) -> &SegmentMode {
        &self.mode
    }

    pub fn is_stop_word(&self, token: &str) -> bool {
        self.stop_words.contains(token)
    }

    pub fn segment(&self, text: &str) -> ContentWordList {
        let folded = text.to_lowercase();
        let runs = folded
            .split(|c: char| !c.is_alphanumeric())
            .filter(|r| !r.is_empty());
        let mut words = Vec::new();
        match &self.mode {
            SegmentMode::Whitespace => words.extend(runs.map(str::to_string)),
            SegmentMode::Dictionary {
                words: dict,
                max_chars,
            } => {
                for run in runs {
                    longest_match(run, dict, *max_chars, &mut words);
                }
            }
        }
        words.retain(|w| !self.stop_words.contains(w));
        ContentWordList { words }
    }
}

impl Default for Segmenter {
    fn default() -> Self {
        Segmenter::whitespace(DEFAULT_STOP_WORDS)
    }
}

fn fold_all<I, S>(items: I) -> HashSet<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    items
        .into_iter()
        .map(|s| s.as_ref().trim().to_lowercase())
        .filter(|s| !s.is_empty())
        .collect()
}

fn longest_match(run: &str, dict: &HashSet<String>, max_chars: usize, out: &mut Vec<String>) {
    // byte offsets of every char boundary, including the end
    let bounds: Vec<usize> = run
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(run.len()))
        .collect();
    let chars = bounds.len() - 1;
    let mut i = 0;
    while i < chars {
        let longest = max_chars.min(chars - i);
        let len = (2..=longest)
            .rev()
            .find(|&len| dict.contains(&run[bounds[i]..bounds[i + len]]))
            .unwrap_or(1);
        out.push(run[bounds[i]..bounds[i + len]].to_string());
        i += len;
    }
}

/// Reads a word list: UTF-8, one entry per line, `#` starts a comment line.
pub fn read_word_list(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Content words of one comment, in text order. Repeats are kept.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ContentWordList {
    pub words: Vec<String>,
}

impl ContentWordList {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ContentWordList {
            words: words.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityConfig {
    pub ratio_threshold: f64,
    pub pair_flag_threshold: u64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            ratio_threshold: 0.8,
            pair_flag_threshold: 3,
        }
    }
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio_threshold > 0.0 && self.ratio_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "ratio_threshold must lie in (0, 1], got {}",
                self.ratio_threshold
            )));
        }
        if self.pair_flag_threshold == 0 {
            return Err(Error::Config("pair_flag_threshold must be positive".into()));
        }
        Ok(())
    }

    fn accepts(&self, common: usize, shorter: usize) -> bool {
        shorter > 0 && ratio(common, shorter) >= self.ratio_threshold
    }
}

fn ratio(common: usize, shorter: usize) -> f64 {
    common as f64 / shorter as f64
}

/// Shared words (with multiplicity) over the length of the shorter list;
/// 0 when either list is empty.
pub fn pair_similarity(a: &ContentWordList, b: &ContentWordList) -> f64 {
    let shorter = a.len().min(b.len());
    if shorter == 0 {
        return 0.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for w in &a.words {
        *counts.entry(w.as_str()).or_default() += 1;
    }
    let mut common = 0;
    for w in &b.words {
        if let Some(c) = counts.get_mut(w.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    ratio(common, shorter)
}

pub fn is_similar(a: &ContentWordList, b: &ContentWordList, cfg: &SimilarityConfig) -> bool {
    pair_similarity(a, b) >= cfg.ratio_threshold
}

/// Content-word lists as sorted integer ids, so that a multiset
/// intersection is a linear merge.
struct InternedLists {
    lists: Vec<Vec<u32>>,
}

impl InternedLists {
    fn new(lists: &[ContentWordList]) -> Self {
        let mut ids: HashMap<&str, u32> = HashMap::new();
        let lists = lists
            .iter()
            .map(|l| {
                let mut v: Vec<u32> = l
                    .words
                    .iter()
                    .map(|w| {
                        let next = ids.len() as u32;
                        *ids.entry(w.as_str()).or_insert(next)
                    })
                    .collect();
                v.sort_unstable();
                v
            })
            .collect();
        InternedLists { lists }
    }

    fn common(a: &[u32], b: &[u32]) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    fn similar_after(&self, i: usize, cfg: &SimilarityConfig) -> u64 {
        let a = &self.lists[i];
        if a.is_empty() {
            return 0;
        }
        self.lists[i + 1..]
            .iter()
            .filter(|b| {
                let shorter = a.len().min(b.len());
                cfg.accepts(Self::common(a, b), shorter)
            })
            .count() as u64
    }
}

/// Users with at least this many comments get their pair scan split across
/// workers.
const PARALLEL_SCAN_MIN: usize = 64;

/// Number of unordered similar pairs among the given lists.
pub fn count_similar_pairs_in(
    lists: &[ContentWordList],
    cfg: &SimilarityConfig,
    exec: Execution,
) -> u64 {
    let interned = InternedLists::new(lists);
    let n = lists.len();
    let exec = if n >= PARALLEL_SCAN_MIN {
        exec
    } else {
        Execution::Sequential
    };
    exec.sum_range(n, |i| interned.similar_after(i, cfg))
}

pub fn count_similar_pairs(
    profile: &UserProfile,
    segmenter: &Segmenter,
    cfg: &SimilarityConfig,
    exec: Execution,
) -> u64 {
    let lists: Vec<ContentWordList> = profile
        .comments
        .iter()
        .map(|c| segmenter.segment(&c.content))
        .collect();
    count_similar_pairs_in(&lists, cfg, exec)
}

/// Standalone heuristic: flag a user with at least `pair_flag_threshold`
/// similar pairs.
pub fn semantic_flag(similar_pairs: u64, cfg: &SimilarityConfig) -> bool {
    similar_pairs >= cfg.pair_flag_threshold
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> ContentWordList {
        ContentWordList::new(s.split_whitespace())
    }

    #[test]
    fn whitespace_segmentation() {
        let seg = Segmenter::whitespace(["the"]);
        assert_eq!(
            seg.segment("Buy the product now").words,
            ["buy", "product", "now"]
        );
        assert!(seg.segment("").is_empty());
        assert_eq!(
            seg.segment("Cheap!!! cheap, CHEAP.").words,
            ["cheap", "cheap", "cheap"]
        );
    }

    #[test]
    fn dictionary_segmentation() {
        let seg = Segmenter::dictionary(["ab", "c"], Vec::<String>::new()).unwrap();
        assert_eq!(seg.segment("abc").words, ["ab", "c"]);
        let seg = Segmenter::dictionary(["腾讯", "公司", "腾讯公司"], ["的"]).unwrap();
        assert_eq!(
            seg.segment("腾讯公司的产品").words,
            ["腾讯公司", "产", "品"]
        );
        assert!(Segmenter::dictionary(Vec::<String>::new(), ["x"]).is_err());
    }

    #[test]
    fn similarity_values() {
        let a = words("buy product now cheap");
        let b = words("buy product cheap");
        assert_eq!(pair_similarity(&a, &b), 1.0);
        assert_eq!(pair_similarity(&a, &a), 1.0);
        assert_eq!(pair_similarity(&a, &words("x y z")), 0.0);
        assert_eq!(pair_similarity(&a, &ContentWordList::default()), 0.0);
        // multiset: "a a" shares two words with "a a b", one with "a b"
        assert_eq!(pair_similarity(&words("a a"), &words("a a b")), 1.0);
        assert_eq!(pair_similarity(&words("a a"), &words("a b")), 0.5);
    }

    #[test]
    fn threshold_is_inclusive() {
        let cfg = SimilarityConfig::default();
        assert!(is_similar(&words("a b c"), &words("a b c d"), &cfg));
        assert!(!is_similar(&words("a b x"), &words("a b c"), &cfg));
        assert!(is_similar(&words("a b c d e"), &words("a b c d f"), &cfg));
        assert!(!is_similar(
            &ContentWordList::default(),
            &ContentWordList::default(),
            &cfg
        ));
    }

    #[test]
    fn pair_counting() {
        let cfg = SimilarityConfig::default();
        let same = vec![words("a b c d e"); 3];
        assert_eq!(
            count_similar_pairs_in(&same, &cfg, Execution::Sequential),
            3
        );
        let distinct = vec![words("a b"), words("c d"), words("e f")];
        assert_eq!(
            count_similar_pairs_in(&distinct, &cfg, Execution::Sequential),
            0
        );
        // A~B and B~C but not A~C
        let chain = vec![
            words("a1 a2 a3 a4 b1 b2 b3 b4"),
            words("a1 a2 a3 a4 b1 b2 b3 b4 c1 c2 c3 c4"),
            words("a1 a2 a3 a4 c1 c2 c3 c4"),
        ];
        assert!(is_similar(&chain[0], &chain[1], &cfg));
        assert!(is_similar(&chain[1], &chain[2], &cfg));
        assert!(!is_similar(&chain[0], &chain[2], &cfg));
        assert_eq!(
            count_similar_pairs_in(&chain, &cfg, Execution::Sequential),
            2
        );
    }

    #[test]
    fn flag_threshold() {
        let cfg = SimilarityConfig::default();
        assert!(!semantic_flag(2, &cfg));
        assert!(semantic_flag(3, &cfg));
        assert!(!semantic_flag(0, &cfg));
    }

    #[test]
    fn config_validation() {
        assert!(SimilarityConfig::default().validate().is_ok());
        let bad = SimilarityConfig {
            ratio_threshold: 0.0,
            ..SimilarityConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
