use paidposter::corpus::{self, CleaningConfig, Label};
use paidposter::features::{self, FeatureConfig};
use paidposter::semantics::{self, Segmenter, SimilarityConfig};
use paidposter::synth::{self, SynthConfig};
use paidposter::Execution;

fn small(seed: u64) -> SynthConfig {
    SynthConfig {
        n_normal: 60,
        n_paid: 40,
        seed,
        ..SynthConfig::default()
    }
}

#[test]
fn round_trip_is_exact_for_several_seeds() {
    for seed in 0..5 {
        let report = synth::round_trip_check(&small(seed), Execution::default()).unwrap();
        assert_eq!(report.users, 100);
        report.into_result().unwrap();
    }
}

#[test]
fn drawn_bins_constrain_realized_values() {
    let generated = synth::generate(&small(9)).unwrap();
    let profiles = corpus::group_by_user(&corpus::clean(
        &generated.corpus,
        &CleaningConfig::default(),
    ));
    let seg = Segmenter::default();
    let sim = SimilarityConfig::default();
    for (user, profile) in generated.users.iter().zip(&profiles) {
        assert_eq!(user.user_id, profile.user_id);
        assert!(profile.len() >= 4);
        let pairs = semantics::count_similar_pairs(profile, &seg, &sim, Execution::Sequential);
        if user.bins.similar_pairs == 0 {
            assert_eq!(pairs, 0);
        }
        let ratio = features::reply_ratio(profile);
        assert_eq!(ratio > 0.5, user.bins.reply == 1, "{}", user.user_id);
        let interval = features::avg_interval(profile, &FeatureConfig::default());
        assert!(interval < 3600.0 + 1e-9);
    }
}

#[test]
fn labels_and_counts() {
    let generated = synth::generate(&small(2)).unwrap();
    let labels = generated.labels();
    assert_eq!(labels.values().filter(|l| **l == Label::Paid).count(), 40);
    assert_eq!(generated.corpus.labels.as_ref(), Some(&labels));
    assert_eq!(generated.corpus.user_count(), 100);
    // sequence numbers are 1.. within each report
    let mut last: Option<(&str, u64)> = None;
    for r in &generated.corpus.records {
        match last {
            Some((report, seq)) if report == r.report_id => assert_eq!(r.sequence_no, seq + 1),
            _ => assert_eq!(r.sequence_no, 1),
        }
        last = Some((&r.report_id, r.sequence_no));
    }
}

#[test]
fn same_seed_same_bytes_other_seed_differs() {
    let a = synth::generate(&small(5)).unwrap().corpus.to_jsonl();
    let b = synth::generate(&small(5)).unwrap().corpus.to_jsonl();
    let c = synth::generate(&small(6)).unwrap().corpus.to_jsonl();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn generated_jsonl_ingests_back() {
    let generated = synth::generate(&small(3)).unwrap();
    let text = generated.corpus.to_jsonl();
    let ingested = corpus::ingest_str(
        &text,
        &corpus::IngestOptions::new(corpus::InputFormat::JsonLines),
    )
    .unwrap();
    assert!(ingested.errors.is_empty());
    assert_eq!(ingested.corpus.records, generated.corpus.records);
}

#[test]
fn config_from_toml() {
    let cfg: SynthConfig = toml::from_str("n_normal = 3\nn_paid = 2\nseed = 9\n").unwrap();
    assert_eq!((cfg.n_normal, cfg.n_paid, cfg.seed), (3, 2, 9));
    assert!(toml::from_str::<SynthConfig>("n_users = 3\n").is_err());
}
