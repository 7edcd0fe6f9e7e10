use std::path::Path;
use std::process::{Command, Output};

fn dcmh(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcmh"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dcmh(dir, args);
    assert!(
        out.status.success(),
        "dcmh {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const TRAIN_SMALL: &[&str] = &[
    "train", "--data", "d.txt", "--out", "m.json", "--code-length", "8", "--outer-iters", "3", "--hidden-image",
    "16", "--hidden-text", "16", "--query-count", "20", "--train-count", "60", "--seed", "2",
];

fn trained(dir: &Path) {
    ok(dir, &["synth", "--out", "d.txt", "--per-class", "50", "--seed", "3"]);
    ok(dir, TRAIN_SMALL);
}

#[test]
fn synth_is_deterministic_and_reports_size() {
    let dir = tempfile::tempdir().unwrap();
    let summary = ok(dir.path(), &["synth", "--classes", "2", "--per-class", "100", "--seed", "7", "--out", "a.txt"]);
    assert!(summary.contains("n=200"), "{summary}");
    ok(dir.path(), &["synth", "--classes", "2", "--per-class", "100", "--seed", "7", "--out", "b.txt"]);
    let a = std::fs::read(dir.path().join("a.txt")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.txt")).unwrap());
    let ds = dcmh::data::load_dataset::<f64>(dir.path().join("a.txt")).unwrap();
    assert_eq!(ds.len(), 200);
}

#[test]
fn missing_required_flag_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcmh(dir.path(), &["synth", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--out"), "{}", stderr(&out));
}

#[test]
fn train_writes_one_log_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    trained(dir.path());
    let log = std::fs::read_to_string(dir.path().join("m.json.log.csv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines[0], dcmh::model::LOG_HEADER);
    assert_eq!(lines.len(), 1 + 3);
    let ckpt = dcmh::model::load_checkpoint::<f64>(dir.path().join("m.json")).unwrap();
    assert_eq!(ckpt.hyper.gamma, 1.0);
    assert_eq!(ckpt.split.unwrap().train.len(), 60);
}

#[test]
fn help_lists_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let help = ok(dir.path(), &["train", "--help"]);
    for needle in ["--gamma", "[default: 1]", "[default: 128]", "[default: 500]", "[default: 16]", "16, 32 and 64"] {
        assert!(help.contains(needle), "missing {needle:?} in\n{help}");
    }
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--out", "d.txt", "--per-class", "30", "--seed", "1"]);
    std::fs::write(
        dir.path().join("run.cfg"),
        "# small run\ncode_length = 4\nouter-iters = 2\nhidden-image = none\nhidden-text = 8\nquery-count = 10\ntrain-count = 30\nlr = 0.5\n",
    )
    .unwrap();
    ok(dir.path(), &["train", "--data", "d.txt", "--out", "m.json", "--config", "run.cfg", "--lr", "0.02"]);
    let ckpt = dcmh::model::load_checkpoint::<f64>(dir.path().join("m.json")).unwrap();
    assert_eq!(ckpt.hyper.code_length, 4);
    assert_eq!(ckpt.hyper.outer_iters, 2);
    assert_eq!(ckpt.hyper.lr, 0.02);
    assert_eq!(ckpt.net_x.layers().len(), 1);
}

#[test]
fn bad_config_key_or_value_is_named() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--out", "d.txt", "--per-class", "30"]);
    std::fs::write(dir.path().join("bad.cfg"), "learning_rate = 0.1\n").unwrap();
    let out = dcmh(dir.path(), &["train", "--data", "d.txt", "--out", "m.json", "--config", "bad.cfg"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("learning-rate"), "{}", stderr(&out));

    let out = dcmh(dir.path(), &["train", "--data", "d.txt", "--out", "m.json", "--gamma", "-1"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("`gamma`"), "{}", stderr(&out));
    let out = dcmh(dir.path(), &["train", "--data", "d.txt", "--out", "m.json"]);
    assert!(stderr(&out).contains("`query-count`"), "{}", stderr(&out));
    assert!(!dir.path().join("m.json").exists());
}

#[test]
fn divergence_exits_nonzero_and_keeps_the_log() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--out", "d.txt", "--per-class", "30"]);
    let out = dcmh(
        dir.path(),
        &[
            "train", "--data", "d.txt", "--out", "m.json", "--lr", "1e30", "--grad-scale", "sum", "--outer-iters",
            "50", "--hidden-image", "none", "--hidden-text", "none", "--query-count", "0", "--train-count", "60",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("iteration"), "{}", stderr(&out));
    let log = std::fs::read_to_string(dir.path().join("m.json.log.csv")).unwrap();
    assert!(log.lines().count() >= 2);
    assert!(!dir.path().join("m.json").exists());
}

#[test]
fn encode_reports_agreement_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    trained(dir.path());
    let args = |out: &'static str| {
        ["encode", "--checkpoint", "m.json", "--data", "d.txt", "--modality", "text", "--subset", "train", "--out", out]
    };
    let summary = ok(dir.path(), &args("a.codes"));
    assert!(summary.contains("agreement with image codes"), "{summary}");
    ok(dir.path(), &args("b.codes"));
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.codes"), read("b.codes"));
    assert_eq!(read("a.codes.ids"), read("b.codes.ids"));
    let db = dcmh::retrieval::load_codes(dir.path().join("a.codes")).unwrap();
    assert_eq!((db.len(), db.bits()), (60, 8));
}

#[test]
fn empty_subset_gives_a_valid_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--out", "d.txt", "--per-class", "20"]);
    ok(
        dir.path(),
        &[
            "train", "--data", "d.txt", "--out", "m.json", "--code-length", "8", "--outer-iters", "1",
            "--hidden-image", "8", "--hidden-text", "8", "--query-count", "0", "--train-count", "40",
        ],
    );
    ok(
        dir.path(),
        &["encode", "--checkpoint", "m.json", "--data", "d.txt", "--modality", "image", "--subset", "query", "--out", "q.codes"],
    );
    let db = dcmh::retrieval::load_codes(dir.path().join("q.codes")).unwrap();
    assert_eq!((db.len(), db.bits()), (0, 8));
}

#[test]
fn encode_rejects_mismatched_features() {
    let dir = tempfile::tempdir().unwrap();
    trained(dir.path());
    ok(dir.path(), &["synth", "--out", "other.txt", "--image-dim", "5", "--per-class", "10"]);
    let out = dcmh(
        dir.path(),
        &["encode", "--checkpoint", "m.json", "--data", "other.txt", "--modality", "image", "--out", "x.codes"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("expects 32"), "{}", stderr(&out));
}

#[test]
fn eval_writes_labelled_csvs_and_checks_code_lengths() {
    let dir = tempfile::tempdir().unwrap();
    trained(dir.path());
    for (subset, modality) in [("query", "image"), ("database", "text")] {
        let out = format!("{subset}.codes");
        ok(
            dir.path(),
            &["encode", "--checkpoint", "m.json", "--data", "d.txt", "--modality", modality, "--subset", subset, "--out", &out],
        );
    }
    let summary = ok(
        dir.path(),
        &["eval", "--query", "query.codes", "--database", "database.codes", "--data", "d.txt", "--out", "pr.csv", "--top-k", "10"],
    );
    assert!(summary.starts_with("Image → Text: MAP"), "{summary}");
    let pr = std::fs::read_to_string(dir.path().join("pr.csv")).unwrap();
    assert_eq!(pr.lines().next().unwrap(), dcmh::retrieval::PR_HEADER);
    assert_eq!(pr.lines().count(), 1 + 9);
    assert!(pr.lines().skip(1).all(|l| l.starts_with("Image → Text,8,")));
    let map = std::fs::read_to_string(dir.path().join("pr.map.csv")).unwrap();
    assert!(map.lines().nth(1).unwrap().ends_with(",10"), "{map}");

    ok(dir.path(), &["synth", "--out", "d.txt", "--per-class", "50", "--seed", "3"]);
    let mut wide = TRAIN_SMALL.to_vec();
    wide[4] = "wide.json";
    wide[6] = "16";
    ok(dir.path(), &wide);
    ok(
        dir.path(),
        &["encode", "--checkpoint", "wide.json", "--data", "d.txt", "--modality", "text", "--subset", "database", "--out", "wide.codes"],
    );
    let out = dcmh(
        dir.path(),
        &["eval", "--query", "query.codes", "--database", "wide.codes", "--data", "d.txt", "--task", "text-to-image", "--out", "x.csv"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("code length mismatch"), "{}", stderr(&out));
}

#[test]
fn perfect_codes_evaluate_to_one() {
    use dcmh::retrieval::{save_codes, CodeDatabase};
    use dcmh::CodeMatrix;
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--out", "d.txt", "--per-class", "15"]);
    let ds = dcmh::data::load_dataset::<f64>(dir.path().join("d.txt")).unwrap();
    let code = |i: usize| vec![if ds.labels()[i][0] == 0 { 1i8 } else { -1 }; 4];
    let save = |name: &str, ids: Vec<usize>| {
        let cols: Vec<Vec<i8>> = ids.iter().map(|&i| code(i)).collect();
        let db = CodeDatabase::new(CodeMatrix::from_columns(4, &cols).unwrap(), ids.iter().map(|&i| i as u64).collect()).unwrap();
        save_codes(&db, dir.path().join(name)).unwrap();
    };
    save("q.codes", (0..6).collect());
    save("db.codes", (6..30).collect());
    let summary = ok(
        dir.path(),
        &["eval", "--query", "q.codes", "--database", "db.codes", "--data", "d.txt", "--task", "text-to-image", "--out", "pr.csv", "--map-out", "map.csv"],
    );
    assert!(summary.contains("Text → Image: MAP 1.0000"), "{summary}");
    let map = std::fs::read_to_string(dir.path().join("map.csv")).unwrap();
    assert_eq!(map.lines().nth(1).unwrap(), "Text → Image,4,1,6,0,0");
}
