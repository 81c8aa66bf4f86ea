//! The `paidposter` command-line driver.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, missing input files,
//! invalid configuration), 2 data error. Logs go to standard error; primary
//! output goes to standard output or `--out`, always sorted by user id.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::corpus::{self, CleaningConfig, Corpus, IngestOptions, InputFormat, Label};
use crate::error::{Error, Result};
use crate::eval;
use crate::features::{self, FeatureConfig, FeatureMask, UserFeatures};
use crate::parallel::Execution;
use crate::semantics::{self, Segmenter, SimilarityConfig, DEFAULT_STOP_WORDS};
use crate::svm::{self, CvReport, SvmModel, TrainConfig};
use crate::synth::{self, SynthConfig};
use crate::time::TimeZone;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "paidposter",
    version,
    about = "Detect paid posters in news-comment corpora"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML file with [cleaning], [similarity], [features], [train] and [synth] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice (folds, SMO tie-breaking, synthesis).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Time zone for naive timestamps and calendar days, e.g. UTC or +08:00.
    #[arg(long, global = true)]
    tz: Option<String>,
    /// Write the primary output here instead of standard output.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Feature ablation: 2 (reply ratio, interval), 4 (all behavioral) or 5 (all).
    #[arg(long = "features-set", global = true)]
    features_set: Option<FeatureMask>,
    /// Run every stage on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// More log output on standard error (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Debug, Args)]
struct CorpusInput {
    /// Comment file (delimited text or JSON lines).
    input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<InputFormat>,
    /// Field delimiter for delimited text.
    #[arg(long, default_value = ",")]
    delimiter: char,
    /// Label file (`user_id<TAB>label`).
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SegmenterArgs {
    /// Stop-word file replacing the built-in list.
    #[arg(long)]
    stop_words: Option<PathBuf>,
    /// Dictionary file; enables longest-match segmentation.
    #[arg(long)]
    dictionary: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a comment file and write it as normalized JSON lines.
    Ingest {
        #[command(flatten)]
        input: CorpusInput,
    },
    /// Ingest and clean a comment file; writes JSON lines.
    Clean {
        #[command(flatten)]
        input: CorpusInput,
    },
    /// Ingest, clean and extract the per-user feature dump.
    Features {
        #[command(flatten)]
        input: CorpusInput,
        #[command(flatten)]
        segmenter: SegmenterArgs,
    },
    /// Cross-validate and train a model on a feature dump.
    Train {
        /// Feature dump.
        #[arg(long)]
        features: PathBuf,
        /// Label file; otherwise the dump's label column is used.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Skip cross-validation.
        #[arg(long)]
        no_cv: bool,
    },
    /// Classify the users of a feature dump.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
    /// Score predictions against a label file.
    Eval {
        /// Predictions (`user_id,label,decision_value`).
        #[arg(long)]
        pred: PathBuf,
        /// Label file (`user_id<TAB>label`).
        #[arg(long)]
        truth: PathBuf,
    },
    /// Generate a labeled synthetic corpus.
    Synth {
        #[arg(long)]
        n_normal: Option<usize>,
        #[arg(long)]
        n_paid: Option<usize>,
        /// Label file path; defaults to the corpus path with a `.labels` extension.
        #[arg(long)]
        labels_out: Option<PathBuf>,
    },
    /// Train on one corpus, test on another, print the confusion matrix.
    Pipeline {
        #[arg(long)]
        train_corpus: PathBuf,
        /// Defaults to the training corpus path with a `.labels` extension.
        #[arg(long)]
        train_labels: Option<PathBuf>,
        #[arg(long)]
        test_corpus: PathBuf,
        /// Defaults to the test corpus path with a `.labels` extension.
        #[arg(long)]
        test_labels: Option<PathBuf>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Skip cross-validation on the training corpus.
        #[arg(long)]
        no_cv: bool,
        #[command(flatten)]
        segmenter: SegmenterArgs,
    },
}

/// Contents of a `--config` file. Every table is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cleaning: CleaningConfig,
    pub similarity: SimilarityConfig,
    pub features: FeatureSettings,
    pub train: TrainConfig,
    pub synth: SynthConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSettings {
    pub interval_sentinel_s: f64,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings {
            interval_sentinel_s: FeatureConfig::default().interval_sentinel_s,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.cleaning.validate()?;
        self.similarity.validate()?;
        self.train.validate()?;
        self.synth.validate()?;
        let s = self.features.interval_sentinel_s;
        if !s.is_finite() || s < 0.0 {
            return Err(Error::Config(
                "interval_sentinel_s must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::TimeZone(_) => EXIT_USAGE,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    init_logging(cli.common.verbose);
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .format_timestamp(None)
        .try_init();
}

/// Settings resolved from the config file and flags.
struct Context {
    cfg: RunConfig,
    tz: Option<TimeZone>,
    default_tz: TimeZone,
    exec: Execution,
    out: Option<PathBuf>,
}

impl Context {
    fn new(common: &Common) -> Result<Self> {
        let mut cfg = match &common.config {
            Some(path) => {
                require(path)?;
                RunConfig::load(path)?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = common.seed {
            cfg.train.seed = seed;
            cfg.synth.seed = seed;
        }
        if let Some(mask) = &common.features_set {
            cfg.train.feature_mask = mask.clone();
        }
        let tz = common.tz.as_deref().map(str::parse).transpose()?;
        let exec = if common.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        };
        Ok(Context {
            cfg,
            tz,
            default_tz: TimeZone::from_env()?,
            exec,
            out: common.out.clone(),
        })
    }

    fn feature_config(&self, file_tz: TimeZone) -> FeatureConfig {
        FeatureConfig {
            interval_sentinel_s: self.cfg.features.interval_sentinel_s,
            tz: file_tz,
        }
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|()| stdout.flush())
                    .map_err(|e| Error::io("<stdout>", e))
            }
        }
    }
}

/// Missing inputs are usage errors, reported before any work starts.
fn require(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ))
    }
}

fn sibling_labels(path: &Path) -> PathBuf {
    path.with_extension("labels")
}

fn delimiter_byte(c: char) -> Result<u8> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Error::Config(format!("delimiter must be one ASCII character, got {c:?}")))
}

/// Ingested corpus plus the zone its calendar days are counted in.
fn load_corpus(ctx: &Context, input: &CorpusInput) -> Result<(Corpus, TimeZone)> {
    require(&input.input)?;
    if let Some(labels) = &input.labels {
        require(labels)?;
    }
    let format = input
        .format
        .unwrap_or_else(|| InputFormat::from_path(&input.input));
    let opts = IngestOptions {
        delimiter: delimiter_byte(input.delimiter)?,
        tz: ctx.tz,
        default_tz: ctx.default_tz,
        ..IngestOptions::new(format)
    };
    let ingested = corpus::ingest(&input.input, &opts)?;
    for err in &ingested.errors {
        log::warn!("{}: {err}", input.input.display());
    }
    log::info!(
        "{}: {} of {} records ingested",
        input.input.display(),
        ingested.corpus.len(),
        ingested.total
    );
    let mut corpus = ingested.corpus;
    if let Some(path) = &input.labels {
        corpus = corpus.with_labels(corpus::read_labels(path)?);
    }
    Ok((corpus, ingested.tz))
}

fn build_segmenter(args: &SegmenterArgs) -> Result<Segmenter> {
    for path in [&args.stop_words, &args.dictionary].into_iter().flatten() {
        require(path)?;
    }
    let stop: Vec<String> = match &args.stop_words {
        Some(path) => semantics::read_word_list(path)?.into_iter().collect(),
        None => DEFAULT_STOP_WORDS.iter().map(|s| s.to_string()).collect(),
    };
    match &args.dictionary {
        Some(path) => Segmenter::dictionary(semantics::read_word_list(path)?, stop),
        None => Ok(Segmenter::whitespace(stop)),
    }
}

fn corpus_features(
    ctx: &Context,
    corpus: &Corpus,
    tz: TimeZone,
    segmenter: &Segmenter,
) -> Vec<UserFeatures> {
    let cleaned = corpus::clean(corpus, &ctx.cfg.cleaning);
    log::info!(
        "cleaning kept {} of {} records, {} users",
        cleaned.len(),
        corpus.len(),
        cleaned.user_count()
    );
    let profiles = corpus::group_by_user(&cleaned);
    features::extract_all(
        &profiles,
        segmenter,
        &ctx.cfg.similarity,
        &ctx.feature_config(tz),
        ctx.exec,
    )
}

/// Pairs each user with a label from `labels` (or the dump's own column).
fn labeled(rows: &[UserFeatures], labels: Option<&BTreeMap<String, Label>>) -> Result<Vec<Label>> {
    rows.iter()
        .map(|row| {
            labels
                .and_then(|m| m.get(&row.user_id).copied())
                .or(row.label)
                .ok_or_else(|| Error::Schema(format!("no label for user {:?}", row.user_id)))
        })
        .collect()
}

fn cv_summary(report: &CvReport, folds: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{folds}-fold cross-validation");
    for cand in &report.candidates {
        let _ = writeln!(
            out,
            "  C={} gamma={} mean accuracy {}",
            cand.c,
            cand.gamma,
            eval::percent(cand.mean_accuracy)
        );
    }
    let _ = writeln!(
        out,
        "selected C={} gamma={} ({})",
        report.best.c,
        report.best.gamma,
        eval::percent(report.best.mean_accuracy)
    );
    out
}

fn apply_overrides(cfg: &mut TrainConfig, c: Option<f64>, gamma: Option<f64>) {
    if let Some(c) = c {
        cfg.c = c;
    }
    if gamma.is_some() {
        cfg.gamma = gamma;
    }
}

/// Cross-validates (unless skipped), then trains on everything with the
/// selected parameters. Returns the model and the CV summary.
fn fit(
    ctx: &Context,
    rows: &[UserFeatures],
    labels: &[Label],
    cfg: &TrainConfig,
    cv: bool,
) -> Result<(SvmModel, String)> {
    cfg.validate()?;
    let vectors: Vec<_> = rows.iter().map(|r| r.features).collect();
    let mut final_cfg = cfg.clone();
    let mut summary = String::new();
    if cv {
        let report = svm::cross_validate(&vectors, labels, cfg, ctx.exec)?;
        summary = cv_summary(&report, cfg.folds);
        final_cfg.c = report.best.c;
        final_cfg.gamma = Some(report.best.gamma);
    }
    let model = svm::train(&vectors, labels, &final_cfg)?;
    let _ = writeln!(
        summary,
        "model: {} support vectors, features [{}], C={} gamma={}, converged={}",
        model.support_vectors.len(),
        model.feature_mask,
        model.c,
        model.gamma,
        model.converged
    );
    Ok((model, summary))
}

/// `user_id,label,decision_value`, sorted by user id.
pub fn format_predictions(rows: &[UserFeatures], model: &SvmModel, exec: Execution) -> String {
    let mut sorted: Vec<&UserFeatures> = rows.iter().collect();
    sorted.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    let vectors: Vec<_> = sorted.iter().map(|r| r.features).collect();
    let predictions = model.predict_all(&vectors, exec);
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["user_id", "label", "decision_value"])
        .expect("in-memory write");
    for (row, p) in sorted.iter().zip(&predictions) {
        wtr.write_record([
            row.user_id.as_str(),
            p.label.as_str(),
            &format!("{:.16e}", p.decision),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("flush")).expect("utf-8")
}

pub fn parse_predictions(text: &str) -> Result<BTreeMap<String, Label>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Schema(format!("predictions line {line}: {e}")))?;
        let (Some(user), Some(label)) = (rec.get(0), rec.get(1)) else {
            return Err(Error::Schema(format!(
                "predictions line {line}: expected user_id,label"
            )));
        };
        if out
            .insert(user.to_string(), label.trim().parse()?)
            .is_some()
        {
            return Err(Error::Schema(format!(
                "predictions line {line}: duplicate user {user:?}"
            )));
        }
    }
    Ok(out)
}

fn execute(cli: &Cli) -> Result<()> {
    let ctx = Context::new(&cli.common)?;
    match &cli.command {
        Command::Ingest { input } => {
            let (corpus, _) = load_corpus(&ctx, input)?;
            ctx.emit(&corpus.to_jsonl())
        }
        Command::Clean { input } => {
            let (corpus, _) = load_corpus(&ctx, input)?;
            let cleaned = corpus::clean(&corpus, &ctx.cfg.cleaning);
            log::info!(
                "cleaning kept {} of {} records",
                cleaned.len(),
                corpus.len()
            );
            ctx.emit(&cleaned.to_jsonl())
        }
        Command::Features { input, segmenter } => {
            let segmenter = build_segmenter(segmenter)?;
            let (corpus, tz) = load_corpus(&ctx, input)?;
            let rows = corpus_features(&ctx, &corpus, tz, &segmenter);
            ctx.emit(&features::format_dump(&rows))
        }
        Command::Train {
            features: dump,
            labels,
            c,
            gamma,
            no_cv,
        } => {
            require(dump)?;
            if let Some(l) = labels {
                require(l)?;
            }
            let out = ctx
                .out
                .as_ref()
                .ok_or_else(|| Error::Config("train needs --out for the model file".into()))?;
            let rows = features::read_dump(dump)?;
            let label_map = labels.as_deref().map(corpus::read_labels).transpose()?;
            let y = labeled(&rows, label_map.as_ref())?;
            let mut cfg = ctx.cfg.train.clone();
            apply_overrides(&mut cfg, *c, *gamma);
            let (model, summary) = fit(&ctx, &rows, &y, &cfg, !no_cv)?;
            svm::save(&model, out)?;
            print!("{summary}");
            Ok(())
        }
        Command::Predict {
            model,
            features: dump,
        } => {
            require(model)?;
            require(dump)?;
            let model = svm::load(model)?;
            let rows = features::read_dump(dump)?;
            ctx.emit(&format_predictions(&rows, &model, ctx.exec))
        }
        Command::Eval { pred, truth } => {
            require(pred)?;
            require(truth)?;
            let text = fs::read_to_string(pred).map_err(|e| Error::io(pred, e))?;
            let predictions = parse_predictions(&text)?;
            let truth = corpus::read_labels(truth)?;
            let m = eval::confusion(&predictions, &truth)?;
            ctx.emit(&eval::report(&m, &m.metrics()?))
        }
        Command::Synth {
            n_normal,
            n_paid,
            labels_out,
        } => {
            let mut cfg = ctx.cfg.synth.clone();
            if let Some(n) = n_normal {
                cfg.n_normal = *n;
            }
            if let Some(n) = n_paid {
                cfg.n_paid = *n;
            }
            cfg.validate()?;
            let out = ctx
                .out
                .as_ref()
                .ok_or_else(|| Error::Config("synth needs --out for the corpus file".into()))?;
            let generated = synth::generate(&cfg)?;
            generated.corpus.write_jsonl(out)?;
            let labels_path = labels_out.clone().unwrap_or_else(|| sibling_labels(out));
            corpus::write_labels(&labels_path, &generated.labels())?;
            log::info!(
                "wrote {} records for {} users to {}",
                generated.corpus.len(),
                generated.users.len(),
                out.display()
            );
            Ok(())
        }
        Command::Pipeline {
            train_corpus,
            train_labels,
            test_corpus,
            test_labels,
            c,
            gamma,
            no_cv,
            segmenter,
        } => {
            let segmenter = build_segmenter(segmenter)?;
            let input = |path: &PathBuf, labels: &Option<PathBuf>| CorpusInput {
                input: path.clone(),
                format: None,
                delimiter: ',',
                labels: Some(labels.clone().unwrap_or_else(|| sibling_labels(path))),
            };
            let train_in = input(train_corpus, train_labels);
            let test_in = input(test_corpus, test_labels);
            for i in [&train_in, &test_in] {
                require(&i.input)?;
                require(i.labels.as_ref().expect("set above"))?;
            }
            let mut cfg = ctx.cfg.train.clone();
            apply_overrides(&mut cfg, *c, *gamma);
            cfg.validate()?;

            let (train, tz) = load_corpus(&ctx, &train_in)?;
            let train_rows = corpus_features(&ctx, &train, tz, &segmenter);
            let train_y = labeled(&train_rows, None)?;
            let (model, summary) = fit(&ctx, &train_rows, &train_y, &cfg, !no_cv)?;
            eprint!("{summary}");

            let (test, tz) = load_corpus(&ctx, &test_in)?;
            let test_rows = corpus_features(&ctx, &test, tz, &segmenter);
            let truth: BTreeMap<String, Label> = test_rows
                .iter()
                .map(|r| {
                    Ok((
                        r.user_id.clone(),
                        labeled(std::slice::from_ref(r), None)?[0],
                    ))
                })
                .collect::<Result<_>>()?;
            let vectors: Vec<_> = test_rows.iter().map(|r| r.features).collect();
            let predictions: BTreeMap<String, Label> = test_rows
                .iter()
                .zip(model.predict_all(&vectors, ctx.exec))
                .map(|(r, p)| (r.user_id.clone(), p.label))
                .collect();
            let m = eval::confusion(&predictions, &truth)?;
            ctx.emit(&eval::report(&m, &m.metrics()?))
        }
    }
}
