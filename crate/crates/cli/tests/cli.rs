use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lintext(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lintext"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TRAIN: &str = "\
sport\tthe team won the game with a late score
sport\tcoach praised the league team
tech\tnew chip makes the server faster
tech\tcloud data code runs on the server
food\tbread and soup from the oven
food\tspice gives the soup taste
sport\tgame day for the league
tech\tcode review of the chip driver
food\toven bread taste test
";

const VALID: &str = "\
sport\tteam score in the game
tech\tserver code
food\tsoup spice
";

const TEST: &str = "\
sport\tleague game score
tech\tchip server cloud
food\tbread oven soup
";

fn corpus(dir: &Path) {
    fs::write(dir.join("train.tsv"), TRAIN).unwrap();
    fs::write(dir.join("valid.tsv"), VALID).unwrap();
    fs::write(dir.join("test.tsv"), TEST).unwrap();
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn train(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        "train".to_string(),
        "--train".into(),
        p(dir, "train.tsv"),
        "--valid".into(),
        p(dir, "valid.tsv"),
        "--output".into(),
        p(dir, out),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    lintext(&refs)
}

#[test]
fn train_predict_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir);
    let o = train(dir, "model", &["--strategy", "thresholding", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["model.txt", "vocabulary.txt", "train_report.tsv", "timing.tsv"] {
        assert!(dir.join("model").join(f).exists(), "{f} missing");
    }

    let o = lintext(&["predict", "--model", &p(dir, "model"), "--input", &p(dir, "test.tsv")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("1\t"));

    let o = lintext(&["eval", "--model", &p(dir, "model"), "--test", &p(dir, "test.tsv")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("micro_f1\t") && out.contains("macro_f1\t"), "{out}");

    let o = lintext(&["eval", "--model", &p(dir, "model"), "--test", &p(dir, "test.tsv"), "--json"]);
    assert!(o.status.success());
    assert!(stdout(&o).trim_start().starts_with('{'));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir);
    for out in ["a", "b"] {
        let o = train(dir, out, &["--strategy", "cost-sensitive", "--n-folds", "2", "--seed", "5"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let o = train(dir, "c", &["--strategy", "cost-sensitive", "--n-folds", "2", "--seed", "5", "--threads", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["model.txt", "vocabulary.txt", "train_report.tsv"] {
        let a = fs::read(dir.join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(dir.join("b").join(f)).unwrap(), "{f}");
        assert_eq!(a, fs::read(dir.join("c").join(f)).unwrap(), "{f} with one thread");
    }
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir);
    let cfg = format!(
        "# run settings\ntrain = {}\noutput = {}\nstrategy = thresholding\nc = 0.5\n",
        p(dir, "train.tsv"),
        p(dir, "from_file")
    );
    fs::write(dir.join("run.cfg"), cfg).unwrap();
    let o = lintext(&["train", "--config", &p(dir, "run.cfg"), "--strategy", "one-vs-rest"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(dir.join("from_file/train_report.tsv")).unwrap();
    assert!(report.contains("strategy\tone-vs-rest"), "{report}");
    assert!(report.contains("c\t5e-1"), "{report}");
}

#[test]
fn empty_input_gives_empty_output() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir);
    assert!(train(dir, "model", &[]).status.success());
    fs::write(dir.join("empty.tsv"), "").unwrap();
    let o = lintext(&[
        "predict",
        "--model",
        &p(dir, "model"),
        "--input",
        &p(dir, "empty.tsv"),
        "--output",
        &p(dir, "pred.tsv"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(dir.join("pred.tsv")).unwrap(), "");
}

#[test]
fn exit_codes_distinguish_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir);

    // configuration: bad value, unknown key
    let o = train(dir, "m", &["--c=-1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("config failed"), "{}", stderr(&o));
    let o = train(dir, "m", &["--set", "no_such_key=1"]);
    assert_eq!(o.status.code(), Some(2));

    // data: malformed line, unknown test label, missing file
    fs::write(dir.join("bad.svm"), "a 1:x\n").unwrap();
    let o = lintext(&["train", "--train", &p(dir, "bad.svm"), "--format", "svmlight", "--output", &p(dir, "m")]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("load failed"), "{}", stderr(&o));
    assert!(stderr(&o).contains(":1"), "line number expected: {}", stderr(&o));

    assert!(train(dir, "model", &[]).status.success());
    fs::write(dir.join("odd.tsv"), "unseen\tsome text\n").unwrap();
    let o = lintext(&["eval", "--model", &p(dir, "model"), "--test", &p(dir, "odd.tsv")]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = lintext(&["predict", "--model", &p(dir, "nowhere"), "--input", &p(dir, "test.tsv")]);
    assert_eq!(o.status.code(), Some(3));

    // numeric: non-finite feature value
    fs::write(dir.join("inf.svm"), "a 1:inf\nb 2:1\n").unwrap();
    let o = lintext(&["train", "--train", &p(dir, "inf.svm"), "--format", "svmlight", "--output", &p(dir, "m")]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn stats_reports_lengths() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir);
    let o = lintext(&["stats", "--data", &p(dir, ""), "--budget", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("n_train\t9") && out.contains("n_test\t3"), "{out}");
    assert!(out.contains("budget\t5"));

    fs::write(dir.join("empty.tsv"), "").unwrap();
    let o = lintext(&["stats", "--data", &p(dir, "empty.tsv"), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("\"mean_words\":0"), "{}", stdout(&o));
    assert!(stderr(&o).contains("no documents"), "{}", stderr(&o));
}
