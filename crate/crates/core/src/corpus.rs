//! Comment records, file ingestion, cleaning and per-user grouping.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{TimeZone, Timestamp};

/// Field names shared by both input formats.
pub const FIELDS: [&str; 7] = [
    "report_id",
    "sequence_no",
    "post_time",
    "post_location",
    "user_id",
    "content",
    "is_reply",
];

const TZ_DIRECTIVE: &str = "# timezone=";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Paid,
    Normal,
}

impl Label {
    /// +1 for paid posters (the positive class), -1 for normal users.
    pub fn sign(self) -> f64 {
        match self {
            Label::Paid => 1.0,
            Label::Normal => -1.0,
        }
    }

    pub fn from_sign(value: f64) -> Self {
        // zero goes to the negative class
        if value > 0.0 {
            Label::Paid
        } else {
            Label::Normal
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Paid => "paid",
            Label::Normal => "normal",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paid" => Ok(Label::Paid),
            "normal" => Ok(Label::Normal),
            other => Err(Error::Schema(format!(
                "unknown label {other:?} (expected paid or normal)"
            ))),
        }
    }
}

/// One posted comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommentRecord {
    pub report_id: String,
    pub sequence_no: u64,
    #[serde(serialize_with = "serialize_time")]
    pub post_time: Timestamp,
    pub post_location: String,
    pub user_id: String,
    pub content: String,
    /// true for a reply to another comment, false for a new comment
    pub is_reply: bool,
}

fn serialize_time<S: serde::Serializer>(
    t: &Timestamp,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&t.to_rfc3339())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    /// Sorted by `(report_id, sequence_no)`.
    pub records: Vec<CommentRecord>,
    pub labels: Option<BTreeMap<String, Label>>,
}

impl Corpus {
    pub fn new(mut records: Vec<CommentRecord>, labels: Option<BTreeMap<String, Label>>) -> Self {
        records.sort_by(|a, b| {
            a.report_id
                .cmp(&b.report_id)
                .then(a.sequence_no.cmp(&b.sequence_no))
        });
        Corpus { records, labels }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn user_count(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.user_id.as_str())
            .collect::<HashSet<_>>()
            .len()
    }

    pub fn with_labels(mut self, labels: BTreeMap<String, Label>) -> Self {
        self.labels = Some(labels);
        self
    }

    /// Serializes to the line-delimited format, one JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }
}

/// All comments of one user, ordered by post time.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    pub user_id: String,
    pub comments: Vec<CommentRecord>,
    pub label: Option<Label>,
}

impl UserProfile {
    /// Builds a profile, sorting the comments by time. Returns `None` when
    /// `comments` is empty or mixes user ids.
    pub fn new(mut comments: Vec<CommentRecord>, label: Option<Label>) -> Option<Self> {
        let user_id = comments.first()?.user_id.clone();
        if comments.iter().any(|c| c.user_id != user_id) {
            return None;
        }
        comments.sort_by(|a, b| {
            a.post_time
                .cmp(&b.post_time)
                .then_with(|| a.report_id.cmp(&b.report_id))
                .then(a.sequence_no.cmp(&b.sequence_no))
        });
        Some(UserProfile {
            user_id,
            comments,
            label,
        })
    }

    pub fn len(&self) -> usize {
        self.comments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comments.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    pub min_comments: usize,
    pub excluded_user_ids: BTreeSet<String>,
    pub drop_anonymous: bool,
    /// User ids treated as anonymous in addition to the empty id.
    pub anonymous_user_ids: BTreeSet<String>,
    pub dedup: bool,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            min_comments: 4,
            excluded_user_ids: BTreeSet::from(["Mobile User".to_string()]),
            drop_anonymous: true,
            anonymous_user_ids: BTreeSet::from(["Anonymous".to_string()]),
            dedup: true,
        }
    }
}

impl CleaningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_comments < 1 {
            return Err(Error::Config("min_comments must be at least 1".into()));
        }
        Ok(())
    }

    fn is_anonymous(&self, user_id: &str) -> bool {
        user_id.trim().is_empty() || self.anonymous_user_ids.contains(user_id)
    }
}

/// Applies, in order: exact-duplicate removal on
/// `(report_id, user_id, post_time, content)` keeping the first occurrence,
/// excluded user ids, anonymous records, and finally users left with fewer
/// than `min_comments` records.
pub fn clean(corpus: &Corpus, cfg: &CleaningConfig) -> Corpus {
    let mut seen: HashSet<(&str, &str, Timestamp, &str)> = HashSet::new();
    let kept: Vec<&CommentRecord> = corpus
        .records
        .iter()
        .filter(|r| {
            !cfg.dedup
                || seen.insert((
                    r.report_id.as_str(),
                    r.user_id.as_str(),
                    r.post_time,
                    r.content.as_str(),
                ))
        })
        .filter(|r| !cfg.excluded_user_ids.contains(&r.user_id))
        .filter(|r| !(cfg.drop_anonymous && cfg.is_anonymous(&r.user_id)))
        .collect();

    let mut per_user: HashMap<&str, usize> = HashMap::new();
    for r in &kept {
        *per_user.entry(r.user_id.as_str()).or_default() += 1;
    }
    let records = kept
        .into_iter()
        .filter(|r| per_user[r.user_id.as_str()] >= cfg.min_comments)
        .cloned()
        .collect();
    Corpus::new(records, corpus.labels.clone())
}

/// One time-sorted profile per distinct user id, in user id order.
pub fn group_by_user(corpus: &Corpus) -> Vec<UserProfile> {
    let mut groups: BTreeMap<&str, Vec<CommentRecord>> = BTreeMap::new();
    for r in &corpus.records {
        groups
            .entry(r.user_id.as_str())
            .or_default()
            .push(r.clone());
    }
    groups
        .into_iter()
        .filter_map(|(user, comments)| {
            let label = corpus.labels.as_ref().and_then(|m| m.get(user).copied());
            UserProfile::new(comments, label)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// Delimited text with a header row naming the seven fields.
    Delimited,
    /// One JSON object per line.
    JsonLines,
}

impl InputFormat {
    /// Guesses from the extension: `.jsonl`/`.ndjson`/`.json` are JSON lines,
    /// everything else delimited text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson" | "json") => InputFormat::JsonLines,
            _ => InputFormat::Delimited,
        }
    }
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" | "delimited" | "tsv" => Ok(InputFormat::Delimited),
            "jsonl" | "json" | "ndjson" => Ok(InputFormat::JsonLines),
            other => Err(Error::Config(format!("unknown input format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub format: InputFormat,
    pub delimiter: u8,
    /// Overrides any `# timezone=` line in the file.
    pub tz: Option<TimeZone>,
    /// Used when neither the file nor `tz` declares a zone.
    pub default_tz: TimeZone,
}

impl IngestOptions {
    pub fn new(format: InputFormat) -> Self {
        IngestOptions {
            format,
            delimiter: b',',
            tz: None,
            default_tz: TimeZone::utc(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordErrorKind {
    /// Structurally broken: missing fields, bad JSON, wrong types.
    Malformed,
    /// Structurally fine but the post time does not parse.
    Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordError {
    pub line: u64,
    pub kind: RecordErrorKind,
    pub message: String,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: Corpus,
    pub errors: Vec<RecordError>,
    /// The zone the file's naive timestamps were read in.
    pub tz: TimeZone,
    /// Records seen, including the ones that failed.
    pub total: usize,
}

pub fn ingest(path: &Path, opts: &IngestOptions) -> Result<Ingested> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ingested = ingest_str(&text, opts)?;
    let malformed: Vec<&RecordError> = ingested
        .errors
        .iter()
        .filter(|e| e.kind == RecordErrorKind::Malformed)
        .collect();
    if malformed.len() * 10 > ingested.total {
        let first = malformed[0];
        return Err(Error::TooManyMalformed {
            path: path.to_path_buf(),
            malformed: malformed.len(),
            total: ingested.total,
            first_line: first.line,
            first_message: first.message.clone(),
        });
    }
    Ok(ingested)
}

/// Parses file contents. The malformed-ratio check is applied by [`ingest`].
pub fn ingest_str(text: &str, opts: &IngestOptions) -> Result<Ingested> {
    let (declared, body, line_offset) = split_tz_directive(text)?;
    let tz = opts.tz.or(declared).unwrap_or(opts.default_tz);
    let (records, errors, total) = match opts.format {
        InputFormat::Delimited => parse_delimited(body, opts.delimiter, tz, line_offset)?,
        InputFormat::JsonLines => parse_json_lines(body, tz, line_offset),
    };
    Ok(Ingested {
        corpus: Corpus::new(records, None),
        errors,
        tz,
        total,
    })
}

fn split_tz_directive(text: &str) -> Result<(Option<TimeZone>, &str, u64)> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    if let Some(rest) = text.strip_prefix(TZ_DIRECTIVE) {
        let (value, body) = rest.split_once('\n').unwrap_or((rest, ""));
        let tz = value.trim().parse()?;
        return Ok((Some(tz), body, 1));
    }
    Ok((None, text, 0))
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" | "reply" => Some(true),
        "false" | "0" | "no" | "n" | "new" => Some(false),
        _ => None,
    }
}

type Parsed = (Vec<CommentRecord>, Vec<RecordError>, usize);

fn parse_delimited(body: &str, delimiter: u8, tz: TimeZone, line_offset: u64) -> Result<Parsed> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(body.as_bytes());
    if body.trim().is_empty() {
        return Ok((Vec::new(), Vec::new(), 0));
    }
    let headers = reader
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header row: {e}")))?
        .clone();
    let mut index = [0usize; 7];
    for (slot, name) in index.iter_mut().zip(FIELDS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("header row lacks field {name:?}")))?;
    }

    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut total = 0;
    for row in reader.records() {
        total += 1;
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line()) + line_offset;
                errors.push(RecordError {
                    line,
                    kind: RecordErrorKind::Malformed,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line()) + line_offset;
        let malformed = |message: String| RecordError {
            line,
            kind: RecordErrorKind::Malformed,
            message,
        };
        if row.len() != headers.len() {
            errors.push(malformed(format!(
                "expected {} fields, found {}",
                headers.len(),
                row.len()
            )));
            continue;
        }
        let field = |i: usize| row.get(index[i]).unwrap_or("");
        let Ok(sequence_no) = field(1).trim().parse::<u64>() else {
            errors.push(malformed(format!("bad sequence_no {:?}", field(1))));
            continue;
        };
        let Some(is_reply) = parse_bool(field(6)) else {
            errors.push(malformed(format!("bad is_reply {:?}", field(6))));
            continue;
        };
        let Some(post_time) = tz.parse_post_time(field(2)) else {
            errors.push(RecordError {
                line,
                kind: RecordErrorKind::Timestamp,
                message: format!("unparseable post_time {:?}", field(2)),
            });
            continue;
        };
        records.push(CommentRecord {
            report_id: field(0).to_string(),
            sequence_no,
            post_time,
            post_location: field(3).to_string(),
            user_id: field(4).to_string(),
            content: field(5).to_string(),
            is_reply,
        });
    }
    Ok((records, errors, total))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTime {
    Epoch(i64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    report_id: String,
    sequence_no: u64,
    post_time: RawTime,
    post_location: String,
    user_id: String,
    content: String,
    is_reply: bool,
}

fn parse_json_lines(body: &str, tz: TimeZone, line_offset: u64) -> Parsed {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut total = 0;
    for (i, text) in body.lines().enumerate() {
        if text.trim().is_empty() {
            continue;
        }
        total += 1;
        let line = i as u64 + 1 + line_offset;
        let raw: RawRecord = match serde_json::from_str(text) {
            Ok(raw) => raw,
            Err(e) => {
                errors.push(RecordError {
                    line,
                    kind: RecordErrorKind::Malformed,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let post_time = match &raw.post_time {
            RawTime::Epoch(secs) => Some(Timestamp(*secs)),
            RawTime::Text(s) => tz.parse_post_time(s),
        };
        let Some(post_time) = post_time else {
            errors.push(RecordError {
                line,
                kind: RecordErrorKind::Timestamp,
                message: "unparseable post_time".into(),
            });
            continue;
        };
        records.push(CommentRecord {
            report_id: raw.report_id,
            sequence_no: raw.sequence_no,
            post_time,
            post_location: raw.post_location,
            user_id: raw.user_id,
            content: raw.content,
            is_reply: raw.is_reply,
        });
    }
    (records, errors, total)
}

/// Reads a `user_id<TAB>label` file. Blank lines and `#` comments are skipped.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, Label>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text).map_err(|e| match e {
        Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_labels(text: &str) -> Result<BTreeMap<String, Label>> {
    let mut labels = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (user, label) = line
            .split_once('\t')
            .ok_or_else(|| Error::Schema(format!("line {}: expected user_id<TAB>label", i + 1)))?;
        let label = label
            .parse()
            .map_err(|e| Error::Schema(format!("line {}: {e}", i + 1)))?;
        labels.insert(user.to_string(), label);
    }
    Ok(labels)
}

pub fn format_labels(labels: &BTreeMap<String, Label>) -> String {
    let mut out = String::new();
    for (user, label) in labels {
        out.push_str(user);
        out.push('\t');
        out.push_str(label.as_str());
        out.push('\n');
    }
    out
}

pub fn write_labels(path: &Path, labels: &BTreeMap<String, Label>) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(format_labels(labels).as_bytes())
        .map_err(|e| Error::io(path, e))
}
