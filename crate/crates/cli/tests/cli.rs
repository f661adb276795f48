use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONSONANTS: &str = "bcdfghjklmnpqrstvwxz";

fn frugal(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frugal"))
        .args(args)
        .current_dir(dir)
        .env_remove("FRUGAL_SEED")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// 100 reports over two disjoint word families; family A is mostly "3".
fn write_toy_csv(path: &Path) {
    let a: Vec<String> = CONSONANTS.chars().map(|c| format!("qa{c}x")).collect();
    let b: Vec<String> = CONSONANTS.chars().map(|c| format!("qo{c}x")).collect();
    let mut out = String::from("id,text,severity\n");
    for i in 0..100usize {
        let from_a = i % 5 < 3;
        let words = if from_a { &a } else { &b };
        let text: Vec<&str> = (0..20).map(|j| words[(i * 7 + j * 3) % 20].as_str()).collect();
        let severe = from_a != (i % 10 == 0);
        out.push_str(&format!("b{i},{},{}\n", text.join(" "), if severe { 3 } else { 4 }));
    }
    fs::write(path, out).unwrap();
}

fn prepared(dir: &Path) -> PathBuf {
    write_toy_csv(&dir.join("toy.csv"));
    let o = frugal(&["prep", "--dataset", "toy.csv", "--out", "toy.json"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join("toy.json")
}

#[test]
fn prep_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    prepared(dir.path());
    let o = frugal(&["prep", "--dataset", "toy.csv", "--out", "again.json"], dir.path());
    assert_eq!(stdout(&o).trim(), "toy: 100 documents, 40 terms, 50% severe");
    assert_eq!(
        fs::read(dir.path().join("toy.json")).unwrap(),
        fs::read(dir.path().join("again.json")).unwrap()
    );
}

#[test]
fn prep_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cases = [
        ("empty.csv", "id,text,severity\n", "no documents"),
        ("dup.csv", "id,text,severity\na,x y,1\na,z w,2\n", "duplicate document id 'a'"),
        ("cols.csv", "id,text,severity,owner\na,x,1,bob\n", "unknown column 'owner'"),
        ("short.csv", "id,text,severity\na,hello world,1\nb,oops\n", "short.csv:3"),
    ];
    for (name, body, expected) in cases {
        fs::write(d.join(name), body).unwrap();
        let o = frugal(&["prep", "--dataset", name, "--out", "c.json"], d);
        assert!(!o.status.success(), "{name} should fail");
        assert!(stderr(&o).contains(expected), "{name}: {}", stderr(&o));
    }
    assert!(!d.join("c.json").exists());
}

fn results_without_runtime(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect()
}

#[test]
fn experiment_counts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepared(d);
    let run = |out: &str| {
        let o = frugal(
            &[
                "experiment", "--dataset", "toy.json", "--methods", "fft_k10", "--goal", "precision", "--repeats", "5",
                "--bins", "5", "--seed", "7", "--out", out,
            ],
            d,
        );
        assert!(o.status.success(), "{}", stderr(&o));
    };
    run("a");
    run("b");
    let a = results_without_runtime(&d.join("a/results.csv"));
    assert_eq!(a.len(), 1 + 50);
    assert_eq!(a, results_without_runtime(&d.join("b/results.csv")));
    assert_eq!(fs::read(d.join("a/rankings.csv")).unwrap(), fs::read(d.join("b/rankings.csv")).unwrap());

    let report = fs::read_to_string(d.join("a/report.md")).unwrap();
    assert!(report.contains("## toy: precision"));
    assert!(report.contains("| toy | <1 |"));
    let leftovers = fs::read_dir(d.join("a")).unwrap().count();
    assert_eq!(leftovers, 3);
}

#[test]
fn env_seed_matches_flag_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepared(d);
    let flag = frugal(&["rules", "--dataset", "toy.json", "--seed", "11"], d);
    let env = Command::new(env!("CARGO_BIN_EXE_frugal"))
        .args(["rules", "--dataset", "toy.json"])
        .current_dir(d)
        .env("FRUGAL_SEED", "11")
        .output()
        .unwrap();
    assert!(flag.status.success() && env.status.success());
    assert_eq!(flag.stdout, env.stdout);
}

#[test]
fn failed_dataset_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepared(d);
    fs::write(d.join("bad.csv"), "id,text,severity\na,qabx,1\nb,qacx,1\nc,qadx,2\n").unwrap();
    let o = frugal(
        &[
            "experiment", "--dataset", "toy.json", "--dataset", "bad.csv", "--methods", "tfidf_svm", "--goal", "recall",
            "--repeats", "1", "--out", "out",
        ],
        d,
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains("bad"), "{}", stderr(&o));
    let results = fs::read_to_string(d.join("out/results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 10);
    assert!(results.lines().skip(1).all(|l| l.starts_with("toy,")));
}

#[test]
fn rules_layout() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepared(d);
    let o = frugal(&["rules", "--dataset", "toy.json", "--methods", "fft_k10", "--out", "rules.txt"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(d.join("rules.txt")).unwrap();
    let rule_lines: Vec<&str> = text.lines().take_while(|l| !l.is_empty()).collect();
    assert_eq!(rule_lines.len(), 5);
    assert!(rule_lines[0].starts_with("if topic "));
    assert!(rule_lines[4].starts_with("else "));
    let topics: Vec<&str> = text.lines().filter(|l| l.starts_with("Topic ")).collect();
    assert!(!topics.is_empty() && topics.len() <= 4);
    for t in topics {
        assert_eq!(t.split_once(": ").unwrap().1.split(' ').count(), 8, "{t}");
    }
}

#[test]
fn rules_single_topic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepared(d);
    let o = frugal(&["rules", "--dataset", "toy.json", "--methods", "fft_k1"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().take_while(|l| !l.is_empty()).count(), 5);
    assert!(text.contains("topic 1"));
}

#[test]
fn stats_and_report_rebuild_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepared(d);
    let o = frugal(
        &[
            "experiment", "--dataset", "toy.json", "--methods", "tfidf_svm,fft_k10", "--repeats", "2", "--seed", "3",
            "--out", "run",
        ],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = frugal(&["stats", "--results", "run/results.csv", "--seed", "3", "--out", "ranks.csv"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(d.join("ranks.csv")).unwrap(), fs::read(d.join("run/rankings.csv")).unwrap());
    let o = frugal(
        &["report", "--rankings", "run/rankings.csv", "--results", "run/results.csv", "--out", "report.md"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(d.join("report.md")).unwrap(), fs::read(d.join("run/report.md")).unwrap());
}

#[test]
fn train_and_features_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepared(d);
    let o = frugal(&["train", "--dataset", "toy.json", "--methods", "tfidf_svm", "--out", "model.json"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["method"], "tfidf_svm");
    assert!(model["model"]["tfidf_svm"]["svm"]["weights"].is_array());

    let o = frugal(&["features", "--dataset", "toy.json", "--kind", "lda", "--k", "5", "--out", "feats"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(d.join("feats/lda_k5.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "doc_id,f0,f1,f2,f3,f4");
    assert_eq!(csv.lines().count(), 101);
    assert!(d.join("feats/lda_k5.json").exists());
}

#[test]
fn config_file_and_unknown_method() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepared(d);
    fs::write(d.join("run.cfg"), "dataset = toy.json\nmethods = tfidf_svm\nrepeats = 1\ngoal = precision\nout = cfgout\n").unwrap();
    let o = frugal(&["experiment", "--config", "run.cfg"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(d.join("cfgout/results.csv")).unwrap().lines().count(), 1 + 10);

    let o = frugal(&["experiment", "--config", "run.cfg", "--methods", "svm"], d);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown method"));
}
