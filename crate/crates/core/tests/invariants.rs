use paidposter::corpus::{self, CleaningConfig, CommentRecord, Corpus, UserProfile};
use paidposter::features::{self, FeatureConfig};
use paidposter::{Execution, Segmenter, SimilarityConfig, Timestamp};
use proptest::prelude::*;

fn records() -> impl Strategy<Value = Vec<CommentRecord>> {
    let users = prop::sample::select(vec!["ann", "ben", "cat", "Mobile User", "Anonymous", ""]);
    let reports = prop::sample::select(vec!["R1", "R2", "R3"]);
    let texts = prop::sample::select(vec!["hello world", "good news", "same text"]);
    prop::collection::vec(
        (
            reports,
            0u64..50,
            0i64..400_000,
            users,
            texts,
            any::<bool>(),
        ),
        0..80,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .map(|(report, seq, t, user, text, reply)| CommentRecord {
                report_id: report.into(),
                sequence_no: seq,
                post_time: Timestamp(t),
                post_location: String::new(),
                user_id: user.into(),
                content: text.into(),
                is_reply: reply,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn clean_is_idempotent_and_shrinking(rows in records(), min in 1usize..6) {
        let cfg = CleaningConfig { min_comments: min, ..CleaningConfig::default() };
        let input = Corpus::new(rows, None);
        let once = corpus::clean(&input, &cfg);
        prop_assert!(once.len() <= input.len());
        prop_assert_eq!(corpus::clean(&once, &cfg), once.clone());
        let profiles = corpus::group_by_user(&once);
        prop_assert_eq!(profiles.iter().map(UserProfile::len).sum::<usize>(), once.len());
        for p in &profiles {
            prop_assert!(p.len() >= min);
            prop_assert!(!["", "Anonymous", "Mobile User"].contains(&p.user_id.as_str()));
            prop_assert!(p.comments.windows(2).all(|w| w[0].post_time <= w[1].post_time));
        }
    }

    #[test]
    fn features_are_in_range_and_shift_invariant(rows in records(), shift_days in -100i64..100) {
        let cfg = CleaningConfig { min_comments: 1, ..CleaningConfig::default() };
        let cleaned = corpus::clean(&Corpus::new(rows, None), &cfg);
        let shifted = Corpus::new(
            cleaned.records.iter().cloned().map(|mut r| { r.post_time.0 += shift_days * 86_400; r }).collect(),
            None,
        );
        let fc = FeatureConfig::default();
        let seg = Segmenter::default();
        let sim = SimilarityConfig::default();
        let a = features::extract_all(&corpus::group_by_user(&cleaned), &seg, &sim, &fc, Execution::Sequential);
        let b = features::extract_all(&corpus::group_by_user(&shifted), &seg, &sim, &fc, Execution::default());
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((0.0..=1.0).contains(&x.features.reply_ratio));
            prop_assert!(x.features.active_days >= 1 && x.features.num_reports >= 1);
            prop_assert!(x.features.avg_interval_s >= 0.0);
            // whole-day shifts keep calendar-day counts; any shift keeps gaps
            prop_assert_eq!(x.features, y.features);
        }
    }
}

#[test]
fn epochs_partition_comments() {
    let times = [0, 100, 86_500, 200_000, 200_030, 300_000];
    let comments = times
        .iter()
        .enumerate()
        .map(|(i, &t)| CommentRecord {
            report_id: "R".into(),
            sequence_no: i as u64,
            post_time: Timestamp(t),
            post_location: String::new(),
            user_id: "u".into(),
            content: String::new(),
            is_reply: false,
        })
        .collect();
    let p = UserProfile::new(comments, None).unwrap();
    let epochs = features::split_epochs(&p);
    let sizes: Vec<usize> = epochs.iter().map(|e| e.comments.len()).collect();
    // 100 -> 86_500 is exactly one day: same epoch
    assert_eq!(sizes, vec![3, 2, 1]);
    // epoch means 43_250 and 30, the singleton has no gap
    assert_eq!(
        features::avg_interval(&p, &FeatureConfig::default()),
        (43_250.0 + 30.0) / 2.0
    );
}
