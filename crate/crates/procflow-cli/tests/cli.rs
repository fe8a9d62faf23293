//! End-to-end checks of the binary: exit codes, stdout contracts, config
//! files, and rerun determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_procflow"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails_with(args: &[&str], code: i32) -> String {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "command {:?}: expected exit {}, stderr:\n{}",
        args,
        code,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stderr).unwrap()
}

fn value<'a>(stdout: &'a str, key: &str) -> &'a str {
    stdout
        .lines()
        .find_map(|line| line.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key}= line in:\n{stdout}"))
}

fn s(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

fn gen_item(dir: &Path, n: &str, seed: &str) -> PathBuf {
    let out = dir.join(format!("p{seed}.csv"));
    ok(&[
        "gen", "--generator", "item", "--n", n, "--c1", "2", "--c2", "2", "--p-continue", "0.4",
        "--seed", seed, "--out", &s(&out),
    ]);
    out
}

#[test]
fn dist_then_mds_matches_one_shot_mds() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_item(dir.path(), "40", "11");
    let d = dir.path().join("d.csv");
    ok(&["dist", "--in", &s(&p), "--out", &s(&d)]);

    let piped = dir.path().join("piped.csv");
    let oneshot = dir.path().join("oneshot.csv");
    ok(&["mds", "--dist-in", &s(&d), "--k", "3", "--seed", "5", "--out", &s(&piped)]);
    ok(&["mds", "--in", &s(&p), "--k", "3", "--seed", "5", "--out", &s(&oneshot)]);
    assert_eq!(read(&piped), read(&oneshot));
}

#[test]
fn same_seed_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_item(dir.path(), "30", "3");

    let f1 = dir.path().join("f1.csv");
    let f2 = dir.path().join("f2.csv");
    let m1 = dir.path().join("m1.model");
    let m2 = dir.path().join("m2.model");
    let fit = |feat: &Path, model: &Path| {
        ok(&[
            "ae", "--in", &s(&p), "--k", "2", "--epochs", "3", "--seed", "21", "--out", &s(feat),
            "--model-out", &s(model),
        ])
    };
    let out1 = fit(&f1, &m1);
    let out2 = fit(&f2, &m2);
    let numbers = |text: &str| -> Vec<String> {
        // path-carrying lines differ by construction; the numeric ones must not
        text.lines()
            .filter(|l| !l.starts_with("out=") && !l.starts_with("model="))
            .map(String::from)
            .collect()
    };
    assert_eq!(numbers(&out1), numbers(&out2));
    assert!(!numbers(&out1).is_empty());
    assert_eq!(read(&f1), read(&f2));
    assert_eq!(read(&m1), read(&m2));

    let f3 = dir.path().join("f3.csv");
    ok(&[
        "ae", "--in", &s(&p), "--k", "2", "--epochs", "3", "--seed", "22", "--out", &s(&f3),
    ]);
    assert_ne!(read(&f1), read(&f3));
}

#[test]
fn exit_codes_distinguish_usage_data_numeric() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_item(dir.path(), "20", "7");
    let out = dir.path().join("x.csv");

    // usage: missing required flag
    let err = fails_with(&["mds", "--in", &s(&p), "--seed", "1", "--out", &s(&out)], 2);
    assert!(err.contains("--k"), "stderr: {err}");
    // usage: unknown flag (clap)
    fails_with(&["dist", "--in", &s(&p), "--out", &s(&out), "--bogus"], 2);
    // usage: seed required for stochastic commands
    let err = fails_with(&["mds", "--in", &s(&p), "--k", "2", "--out", &s(&out)], 2);
    assert!(err.contains("--seed"), "stderr: {err}");
    // data: missing input file
    fails_with(
        &["summarize", "--in", &s(&dir.path().join("absent.csv"))],
        3,
    );
    // numeric: the logistic Newton system overflows and loses positive
    // definiteness
    let feats = dir.path().join("f.csv");
    let labels = dir.path().join("y.csv");
    let mut f = String::from("id,V1\n");
    let mut y = String::from("id,y\n");
    for i in 0..10 {
        f.push_str(&format!("r{i},{}1e200\n", if i % 2 == 0 { "" } else { "-" }));
        y.push_str(&format!("r{i},{}\n", i % 2));
    }
    std::fs::write(&feats, f).unwrap();
    std::fs::write(&labels, y).unwrap();
    fails_with(
        &["logit", "--features", &s(&feats), "--labels", &s(&labels), "--seed", "1"],
        4,
    );
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_item(dir.path(), "25", "9");
    let d = dir.path().join("d.csv");
    ok(&["dist", "--in", &s(&p), "--out", &s(&d)]);

    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "k=2\nseed=14\n# comment\n\npca=true\n").unwrap();

    let from_cfg = dir.path().join("a.csv");
    let from_flags = dir.path().join("b.csv");
    ok(&["mds", "--config", &s(&cfg), "--dist-in", &s(&d), "--out", &s(&from_cfg)]);
    ok(&["mds", "--dist-in", &s(&d), "--k", "2", "--seed", "14", "--out", &s(&from_flags)]);
    assert_eq!(read(&from_cfg), read(&from_flags));

    // the --k flag overrides the file's k=2
    let overridden = dir.path().join("c.csv");
    let direct = dir.path().join("e.csv");
    ok(&[
        "mds", "--config", &s(&cfg), "--dist-in", &s(&d), "--k", "4", "--out", &s(&overridden),
    ]);
    ok(&["mds", "--dist-in", &s(&d), "--k", "4", "--seed", "14", "--out", &s(&direct)]);
    assert_eq!(read(&overridden), read(&direct));

    // unknown keys are rejected before any work happens
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "k=2\nseed=1\nblatch=9\n").unwrap();
    let target = dir.path().join("never.csv");
    let err = fails_with(
        &["mds", "--config", &s(&bad), "--dist-in", &s(&d), "--out", &s(&target)],
        2,
    );
    assert!(err.contains("blatch"), "stderr: {err}");
    assert!(!target.exists(), "output must not be written");
}

#[test]
fn summarize_reports_counts_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_item(dir.path(), "35", "2");
    let trans = dir.path().join("trans.csv");
    let actions = dir.path().join("actions.csv");
    let stdout = ok(&[
        "summarize", "--in", &s(&p), "--trans-out", &s(&trans), "--actions-out", &s(&actions),
    ]);
    assert_eq!(value(&stdout, "n_seq"), "35");
    let n_action: usize = value(&stdout, "n_action").parse().unwrap();
    assert!(n_action >= 4);
    let min: f64 = value(&stdout, "length_min").parse().unwrap();
    let max: f64 = value(&stdout, "length_max").parse().unwrap();
    assert!(min >= 2.0 && max >= min);

    let trans_text = std::fs::read_to_string(&trans).unwrap();
    assert!(trans_text.starts_with("id,"));
    assert_eq!(trans_text.lines().count(), n_action + 1);
    let actions_text = std::fs::read_to_string(&actions).unwrap();
    assert!(actions_text.starts_with("action,count,seq_count"));
    assert_eq!(actions_text.lines().count(), n_action + 1);
}

#[test]
fn clean_applies_script_operations_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("raw.csv");
    std::fs::write(
        &input,
        "ID,Action,Time\n1,\"start,start,run,stop\",\"0,1,2,3\"\n2,\"start,run,run\",\"0,2,4\"\n",
    )
    .unwrap();
    let script = dir.path().join("ops.txt");
    std::fs::write(&script, "# dedupe then rename\nremove_repeat\nreplace run go\n").unwrap();

    let out = dir.path().join("clean.csv");
    let stdout = ok(&["clean", "--in", &s(&input), "--out", &s(&out), "--script", &s(&script)]);
    assert_eq!(value(&stdout, "n_seq"), "2");
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"start,go,stop\""), "cleaned: {text}");
    assert!(text.contains("\"start,go\""), "cleaned: {text}");
    assert!(!text.contains("run"));

    // inline --ops equals the script route
    let out2 = dir.path().join("clean2.csv");
    ok(&[
        "clean", "--in", &s(&input), "--out", &s(&out2), "--ops", "remove_repeat; replace run go",
    ]);
    assert_eq!(read(&out), read(&out2));

    // both sources at once is a usage error
    fails_with(
        &[
            "clean", "--in", &s(&input), "--out", &s(&out), "--ops", "remove_repeat", "--script",
            &s(&script),
        ],
        2,
    );
}

#[test]
fn seqm_fit_then_predict_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_item(dir.path(), "30", "13");

    let labels = dir.path().join("y.csv");
    let mut text = String::from("id,y\n");
    for i in 1..=30 {
        text.push_str(&format!("{i},{}\n", i % 2));
    }
    std::fs::write(&labels, text).unwrap();

    let model = dir.path().join("m.model");
    let stdout = ok(&[
        "seqm-fit", "--in", &s(&p), "--response", &s(&labels), "--model-out", &s(&model),
        "--k-emb", "2", "--k-rnn", "2", "--epochs", "3", "--seed", "17",
    ]);
    let best: usize = value(&stdout, "best_epoch").parse().unwrap();
    assert!((1..=3).contains(&best));
    assert!(model.exists());

    let pred1 = dir.path().join("pred1.csv");
    let pred2 = dir.path().join("pred2.csv");
    let stdout = ok(&["seqm-predict", "--model", &s(&model), "--in", &s(&p), "--out", &s(&pred1)]);
    assert_eq!(value(&stdout, "n"), "30");
    assert_eq!(value(&stdout, "response_type"), "binary");
    ok(&["seqm-predict", "--model", &s(&model), "--in", &s(&p), "--out", &s(&pred2)]);
    assert_eq!(read(&pred1), read(&pred2));

    let text = std::fs::read_to_string(&pred1).unwrap();
    assert_eq!(text.lines().count(), 31);
    for line in text.lines().skip(1) {
        let prob: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&prob));
    }

    // an ae archive is refused by seqm-predict
    let feats = dir.path().join("f.csv");
    let ae_model = dir.path().join("ae.model");
    ok(&[
        "ae", "--in", &s(&p), "--k", "2", "--epochs", "1", "--seed", "1", "--out", &s(&feats),
        "--model-out", &s(&ae_model),
    ]);
    fails_with(
        &["seqm-predict", "--model", &s(&ae_model), "--in", &s(&p), "--out", &s(&pred1)],
        3,
    );
}

#[test]
fn gen_markov_respects_spec_and_seeding() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("chain.csv");
    std::fs::write(
        &spec,
        "id,a,b,end\na,0.5,0.3,0.2\nb,0.2,0.5,0.3\nend,0,0,1\n",
    )
    .unwrap();

    let o1 = dir.path().join("g1.csv");
    let o2 = dir.path().join("g2.csv");
    let args = |out: &Path| {
        vec![
            "gen".to_string(), "--generator".into(), "markov".into(), "--spec".into(), s(&spec),
            "--start".into(), "a".into(), "--terminal".into(), "end".into(), "--n".into(),
            "12".into(), "--seed".into(), "31".into(), "--out".into(), s(out),
        ]
    };
    let run_gen = |out: &Path| {
        let out_args = args(out);
        let refs: Vec<&str> = out_args.iter().map(String::as_str).collect();
        ok(&refs)
    };
    run_gen(&o1);
    run_gen(&o2);
    assert_eq!(read(&o1), read(&o2));
    let text = std::fs::read_to_string(&o1).unwrap();
    assert_eq!(text.lines().count(), 13);
    for line in text.lines().skip(1) {
        assert!(line.contains("end"));
    }

    // unknown start label is a usage error
    fails_with(
        &[
            "gen", "--generator", "markov", "--spec", &s(&spec), "--start", "zz", "--terminal",
            "end", "--n", "3", "--seed", "1", "--out", &s(&dir.path().join("x.csv")),
        ],
        2,
    );
}

#[test]
fn logit_separates_a_planted_direction() {
    let dir = tempfile::tempdir().unwrap();
    let feats = dir.path().join("f.csv");
    let labels = dir.path().join("y.csv");
    let mut f = String::from("id,V1,V2\n");
    let mut y = String::from("id,y\n");
    for i in 0..60 {
        let x = if i % 2 == 0 { 1.5 } else { -1.5 };
        let noise = (i as f64 * 0.37).sin();
        f.push_str(&format!("r{i},{x},{noise}\n"));
        y.push_str(&format!("r{i},{}\n", i % 2 ^ 1));
    }
    std::fs::write(&feats, f).unwrap();
    std::fs::write(&labels, y).unwrap();

    let coef = dir.path().join("coef.csv");
    let stdout = ok(&[
        "logit", "--features", &s(&feats), "--labels", &s(&labels), "--train-frac", "0.8",
        "--seed", "4", "--coef-out", &s(&coef),
    ]);
    let acc: f64 = value(&stdout, "accuracy").parse().unwrap();
    assert_eq!(acc, 1.0);
    assert_eq!(value(&stdout, "n_train"), "48");
    assert_eq!(value(&stdout, "n_test"), "12");
    let coef_text = std::fs::read_to_string(&coef).unwrap();
    assert!(coef_text.starts_with("name,coefficient"));
    assert_eq!(coef_text.lines().count(), 4);

    // a label file with an unmatched id is a data error
    let broken = dir.path().join("broken.csv");
    std::fs::write(&broken, "id,y\nr0,1\nr999,0\n").unwrap();
    fails_with(
        &["logit", "--features", &s(&feats), "--labels", &s(&broken), "--seed", "4"],
        3,
    );
}

#[test]
fn choosek_commands_report_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_item(dir.path(), "30", "19");
    let stdout = ok(&[
        "choosek-mds", "--in", &s(&p), "--k-cand", "1,2,3", "--folds", "5", "--seed", "23",
    ]);
    assert_eq!(value(&stdout, "k_cand"), "1,2,3");
    let chosen: usize = value(&stdout, "k").parse().unwrap();
    assert!((1..=3).contains(&chosen));
    assert_eq!(value(&stdout, "cv_loss").split(',').count(), 3);

    let stdout = ok(&[
        "choosek-ae", "--in", &s(&p), "--k-cand", "1,2", "--folds", "2", "--epochs", "2",
        "--seed", "29",
    ]);
    let chosen: usize = value(&stdout, "k").parse().unwrap();
    assert!((1..=2).contains(&chosen));
    assert_eq!(value(&stdout, "cv_loss").split(',').count(), 2);
}
