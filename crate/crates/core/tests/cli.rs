use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn paidposter(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paidposter"))
        .args(args)
        .current_dir(dir)
        .env_remove("PAIDPOSTER_TZ")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = paidposter(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    paidposter(dir, args).status.code().unwrap()
}

#[test]
fn synth_features_train_predict_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "synth",
            "--n-normal",
            "80",
            "--n-paid",
            "40",
            "--seed",
            "1",
            "--out",
            "train.jsonl",
        ],
    );
    ok(
        d,
        &[
            "synth",
            "--n-normal",
            "40",
            "--n-paid",
            "20",
            "--seed",
            "2",
            "--out",
            "test.jsonl",
        ],
    );
    assert!(d.join("train.labels").is_file());

    ok(
        d,
        &[
            "features",
            "train.jsonl",
            "--labels",
            "train.labels",
            "--out",
            "train.features",
        ],
    );
    ok(d, &["features", "test.jsonl", "--out", "test.features"]);
    let dump = fs::read_to_string(d.join("train.features")).unwrap();
    assert_eq!(dump.lines().count(), 121);
    assert!(dump.starts_with(
        "user_id,reply_ratio,avg_interval_s,active_days,num_reports,similar_pairs,label\n"
    ));

    let summary = ok(
        d,
        &[
            "train",
            "--features",
            "train.features",
            "--features-set",
            "5",
            "--seed",
            "3",
            "--out",
            "model.json",
        ],
    );
    assert!(summary.contains("10-fold cross-validation"), "{summary}");
    assert!(summary.contains("support vectors"));

    ok(
        d,
        &[
            "predict",
            "--model",
            "model.json",
            "--features",
            "test.features",
            "--out",
            "pred.csv",
        ],
    );
    let first = fs::read(d.join("pred.csv")).unwrap();
    ok(
        d,
        &[
            "predict",
            "--model",
            "model.json",
            "--features",
            "test.features",
            "--out",
            "pred.csv",
        ],
    );
    assert_eq!(first, fs::read(d.join("pred.csv")).unwrap());
    let pred = String::from_utf8(first).unwrap();
    assert!(pred.starts_with("user_id,label,decision_value\n"));
    let users: Vec<&str> = pred
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(users.len(), 60);
    assert!(users.windows(2).all(|w| w[0] < w[1]));

    let report = ok(d, &["eval", "--pred", "pred.csv", "--truth", "test.labels"]);
    let machine = report.lines().last().unwrap();
    let fields: Vec<&str> = machine.split(',').collect();
    assert_eq!(fields.len(), 8, "{report}");
    assert!(fields[4..].iter().all(|f| f.ends_with('%')));
    let counts: u64 = fields[..4].iter().map(|f| f.parse::<u64>().unwrap()).sum();
    assert_eq!(counts, 60);

    // retraining with the same seed writes the same model
    let model = fs::read(d.join("model.json")).unwrap();
    ok(
        d,
        &[
            "train",
            "--features",
            "train.features",
            "--features-set",
            "5",
            "--seed",
            "3",
            "--out",
            "model.json",
        ],
    );
    assert_eq!(model, fs::read(d.join("model.json")).unwrap());
}

#[test]
fn pipeline_prints_confusion_matrix() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "synth",
            "--n-normal",
            "60",
            "--n-paid",
            "30",
            "--seed",
            "4",
            "--out",
            "a.jsonl",
        ],
    );
    ok(
        d,
        &[
            "synth",
            "--n-normal",
            "30",
            "--n-paid",
            "20",
            "--seed",
            "5",
            "--out",
            "b.jsonl",
        ],
    );
    let args = [
        "pipeline",
        "--train-corpus",
        "a.jsonl",
        "--test-corpus",
        "b.jsonl",
        "--features-set",
        "4",
        "--sequential",
    ];
    let report = ok(d, &args);
    assert!(report.contains("benchmark paid"));
    assert!(report.contains("accuracy"));
    assert_eq!(report, ok(d, &args));
}

#[test]
fn delimited_input_with_time_zone() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    // epoch seconds: 2010-09-10T23:30:00Z then +1h, +1.5h, +1h40m
    let csv = "# timezone=+08:00\n\
        report_id,sequence_no,post_time,post_location,user_id,content,is_reply\n\
        R1,1,1284161400,Beijing,ann,\"first, with comma\",false\n\
        R1,2,1284165000,Beijing,ann,second,true\n\
        R2,1,1284166800,Beijing,ann,third,true\n\
        R2,2,2010-09-11T01:10:00Z,,ann,fourth,false\n";
    fs::write(d.join("c.csv"), csv).unwrap();
    // all four fall on 2010-09-11 in +08:00; gaps 3600, 1800, 600
    let dump = ok(d, &["features", "c.csv"]);
    assert_eq!(dump.lines().nth(1).unwrap(), "ann,0.5,2000,1,2,0,");
    // counted in UTC the first comment is on the previous day
    let utc = ok(d, &["features", "c.csv", "--tz", "UTC"]);
    assert_eq!(utc.lines().nth(1).unwrap(), "ann,0.5,2000,2,2,0,");
    let jsonl = ok(d, &["ingest", "c.csv"]);
    assert!(
        jsonl.contains("\"post_time\":\"2010-09-10T23:30:00Z\""),
        "{jsonl}"
    );
    assert!(jsonl.contains("\"content\":\"first, with comma\""));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(code(d, &["frobnicate"]), 1);
    assert_eq!(code(d, &["ingest"]), 1);
    assert_eq!(
        code(d, &["eval", "--pred", "nope.csv", "--truth", "nope.tsv"]),
        1
    );
    assert_eq!(code(d, &["features", "x.csv", "--tz", "Mars/Olympus"]), 1);
    fs::write(d.join("bad.toml"), "[train]\ncost = 1\n").unwrap();
    fs::write(d.join("x.csv"), "").unwrap();
    assert_eq!(code(d, &["ingest", "x.csv", "--config", "bad.toml"]), 1);
    assert_eq!(code(d, &["--help"]), 0);

    fs::write(
        d.join("pred.csv"),
        "user_id,label,decision_value\na,paid,1\n",
    )
    .unwrap();
    fs::write(d.join("truth.tsv"), "b\tnormal\n").unwrap();
    assert_eq!(
        code(d, &["eval", "--pred", "pred.csv", "--truth", "truth.tsv"]),
        2
    );
    fs::write(d.join("truth.tsv"), "a\tmaybe\n").unwrap();
    assert_eq!(
        code(d, &["eval", "--pred", "pred.csv", "--truth", "truth.tsv"]),
        2
    );
    fs::write(d.join("garbage.jsonl"), "{\n{\n").unwrap();
    assert_eq!(code(d, &["ingest", "garbage.jsonl"]), 2);
    assert_eq!(
        code(
            d,
            &["predict", "--model", "pred.csv", "--features", "pred.csv"]
        ),
        2
    );
}

#[test]
fn config_file_sets_cleaning_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let rows: String = (0..3)
        .map(|i| format!("{{\"report_id\":\"R\",\"sequence_no\":{i},\"post_time\":{},\"post_location\":\"\",\"user_id\":\"u\",\"content\":\"c{i}\",\"is_reply\":false}}\n", 1000 + i))
        .collect();
    fs::write(d.join("c.jsonl"), rows).unwrap();
    assert_eq!(ok(d, &["clean", "c.jsonl"]), "");
    fs::write(d.join("cfg.toml"), "[cleaning]\nmin_comments = 3\n").unwrap();
    assert_eq!(
        ok(d, &["clean", "c.jsonl", "--config", "cfg.toml"])
            .lines()
            .count(),
        3
    );
}
