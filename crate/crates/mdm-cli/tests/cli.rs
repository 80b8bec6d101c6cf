//! End-to-end checks of the `mdm` binary: every command runs as a real
//! process against real files in a temp directory.

use std::path::Path;
use std::process::{Command, Output};

fn mdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdm"))
        .args(args)
        .output()
        .expect("spawning the mdm binary")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed with {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

fn synth_small(dir: &Path) {
    let out = mdm(&[
        "synth",
        "--users",
        "200",
        "--spam",
        "0.1",
        "--seed",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_ok(&out, "synth");
}

#[test]
fn synth_is_deterministic_and_echoes_config() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = mdm(&[
            "synth",
            "--users",
            "50",
            "--seed",
            "11",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_ok(&out, "synth");
    }
    assert_eq!(read(&a.join("events.csv")), read(&b.join("events.csv")));
    assert_eq!(read(&a.join("labels.csv")), read(&b.join("labels.csv")));
    let echoed = String::from_utf8(read(&a.join("effective-config.toml"))).unwrap();
    assert!(echoed.contains("users = 50"));
    assert!(echoed.contains("seed = 11"));

    let c = tmp.path().join("c");
    let out = mdm(&[
        "synth",
        "--users",
        "50",
        "--seed",
        "12",
        "--out",
        c.to_str().unwrap(),
    ]);
    assert_ok(&out, "synth");
    assert_ne!(read(&a.join("events.csv")), read(&c.join("events.csv")));
}

#[test]
fn missing_output_path_is_a_usage_error() {
    let out = mdm(&["synth", "--users", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_drives_a_run_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "users = 30\nseed = 5\n").unwrap();
    let dir = tmp.path().join("out");
    let out = mdm(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--users",
        "25",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_ok(&out, "synth with config");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("25 users"), "flag should beat the file: {stdout}");
    let echoed = String::from_utf8(read(&dir.join("effective-config.toml"))).unwrap();
    assert!(echoed.contains("users = 25"));
    assert!(echoed.contains("seed = 5"));
}

fn train_small(corpus: &Path, dir: &Path) {
    let out = mdm(&[
        "train",
        "--events",
        corpus.join("events.csv").to_str().unwrap(),
        "--labels",
        corpus.join("labels.csv").to_str().unwrap(),
        "--d",
        "4",
        "--n",
        "2",
        "--k",
        "2",
        "--L",
        "2",
        "--epochs",
        "3",
        "--pretrain-epochs",
        "3",
        "--seed",
        "21",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_ok(&out, "train");
}

#[test]
fn train_writes_a_repeatable_checkpoint_and_loss_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth_small(&corpus);

    let run1 = tmp.path().join("run1");
    let run2 = tmp.path().join("run2");
    train_small(&corpus, &run1);
    train_small(&corpus, &run2);

    let bytes = read(&run1.join("checkpoint.mdm"));
    assert_eq!(bytes, read(&run2.join("checkpoint.mdm")), "same seed, same checkpoint");
    assert!(!bytes.is_empty());

    let trace = String::from_utf8(read(&run1.join("loss-trace.csv"))).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("phase,epoch,loss,penalty"));
    let pretrain = trace.lines().filter(|l| l.starts_with("pretrain,")).count();
    let ranking = trace.lines().filter(|l| l.starts_with("ranking,")).count();
    assert_eq!(pretrain, 3);
    assert_eq!(ranking, 3);
}

#[test]
fn single_class_labels_are_a_domain_error() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth_small(&corpus);
    // rewrite every label as normal
    let labels = String::from_utf8(read(&corpus.join("labels.csv"))).unwrap();
    let all_normal: String = labels
        .lines()
        .map(|l| {
            if l.starts_with("user_id") {
                l.to_string()
            } else {
                format!("{},0", l.split(',').next().unwrap())
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(corpus.join("labels.csv"), all_normal).unwrap();

    let out = mdm(&[
        "train",
        "--events",
        corpus.join("events.csv").to_str().unwrap(),
        "--labels",
        corpus.join("labels.csv").to_str().unwrap(),
        "--epochs",
        "1",
        "--pretrain-epochs",
        "1",
        "--out",
        tmp.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn header_columns(path: &Path) -> usize {
    let text = String::from_utf8(read(path)).unwrap();
    let header = text.lines().next().expect("header line");
    header.split(',').count() - 1 // first column is user_id
}

#[test]
fn feature_families_have_the_documented_widths() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth_small(&corpus);
    let model = tmp.path().join("model");
    train_small(&corpus, &model);

    let events = corpus.join("events.csv");
    let labels = corpus.join("labels.csv");
    let base = [
        "--events",
        events.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
    ];

    let kdir = tmp.path().join("kgram");
    let out = mdm(&[&["features"], &base[..], &["--which", "kgram", "--out", kdir.to_str().unwrap()]].concat());
    assert_ok(&out, "features kgram");
    assert_eq!(header_columns(&kdir.join("features-kgram.csv")), 49);

    let gdir = tmp.path().join("graph");
    let out = mdm(&[&["features"], &base[..], &["--which", "graph", "--out", gdir.to_str().unwrap()]].concat());
    assert_ok(&out, "features graph");
    assert_eq!(header_columns(&gdir.join("features-graph.csv")), 56);

    // trained at d=4; full-stage summed features are v, g_L, and the
    // score-contribution block
    let checkpoint = model.join("checkpoint.mdm");
    let mdir = tmp.path().join("mdm");
    let out = mdm(&[
        &["features"],
        &base[..],
        &[
            "--which",
            "mdm",
            "--checkpoint",
            checkpoint.to_str().unwrap(),
            "--n",
            "2",
            "--out",
            mdir.to_str().unwrap(),
        ],
    ]
    .concat());
    assert_ok(&out, "features mdm");
    assert_eq!(header_columns(&mdir.join("features-mdm.csv")), 12);

    let adir = tmp.path().join("all");
    let out = mdm(&[
        &["features"],
        &base[..],
        &[
            "--which",
            "all",
            "--checkpoint",
            checkpoint.to_str().unwrap(),
            "--n",
            "2",
            "--out",
            adir.to_str().unwrap(),
        ],
    ]
    .concat());
    assert_ok(&out, "features all");
    assert_eq!(header_columns(&adir.join("features-all.csv")), 49 + 56 + 12);

    // model features without a checkpoint is an invocation mistake
    let out = mdm(&[
        &["features"],
        &base[..],
        &["--which", "mdm", "--out", tmp.path().join("x").to_str().unwrap()],
    ]
    .concat());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_reports_perfect_f_when_a_feature_leaks_the_label() {
    let tmp = tempfile::tempdir().unwrap();
    let labels = tmp.path().join("labels.csv");
    let features = tmp.path().join("features.csv");
    let mut label_text = String::from("user_id,label\n");
    let mut feat_text = String::from("user_id,leak\n");
    for user in 0..20 {
        let label = usize::from(user % 4 == 0); // five spammers
        label_text.push_str(&format!("{user},{label}\n"));
        feat_text.push_str(&format!("{user},{label}\n"));
    }
    std::fs::write(&labels, label_text).unwrap();
    std::fs::write(&features, feat_text).unwrap();

    let dir = tmp.path().join("eval");
    let out = mdm(&[
        "eval",
        "--features",
        features.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--seeds",
        "4",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_ok(&out, "eval");

    let report = String::from_utf8(read(&dir.join("report.csv"))).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "features,seed,precision,recall,f_measure");
    assert_eq!(lines.len(), 1 + 4 + 2, "seed rows plus mean and std");
    for line in &lines[1..=4] {
        assert!(line.ends_with(",1,1,1"), "expected perfect metrics: {line}");
    }
    assert!(lines[5].starts_with("features,mean,1,1,1"));
    assert!(lines[6].starts_with("features,std,0,0,0"));
    // the same table lands on stdout
    assert_eq!(String::from_utf8(out.stdout).unwrap(), report);
}
