//! Runs the `focalmcc` binary against the bundled subsample.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_focalmcc"));
    c.env_remove(focalmcc::OUTPUT_DIR_ENV);
    c
}

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini_sites.csv")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const TOY_CONFIG: &str = r#"
split_seed = 0
manifest = "../../data/mini_sites.toml"

[model]
window = 5
lstm_sizes = [6]
mlp_size = 0

[train]
epochs = 2
lr = 0.01
weight_decay = 0.01
batch_size = 64
seed = 0
loss = { kind = "diff_mcc", w = 2.0, gamma = 2.0 }
"#;

fn write_config(dir: &Path) -> PathBuf {
    // The manifest path is relative to the config's directory.
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini_sites.toml");
    let text = TOY_CONFIG.replace(
        "../../data/mini_sites.toml",
        &manifest.display().to_string(),
    );
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn missing_dataset_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = run(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--data",
        "/nonexistent/sites.csv",
        "--out",
        dir.path().join("m.fmcc").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/nonexistent/sites.csv"), "{err}");
    assert!(err.starts_with("focalmcc: error kind=read exit=2"), "{err}");
}

#[test]
fn unknown_flag_prints_usage_and_exits_2() {
    let out = run(&["predict", "AAASAAA", "--model", "m", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn train_predict_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let model = dir.path().join("m.fmcc");
    let data = bundled();
    let train_out = ok(&run(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ]));
    assert!(train_out.contains("manifest"));
    for f in ["m.fmcc", "m.epochs.csv", "m.test_pr.csv", "m.test_pr.svg"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let epochs = std::fs::read_to_string(dir.path().join("m.epochs.csv")).unwrap();
    assert_eq!(
        epochs.lines().next().unwrap(),
        "epoch,lr,train_loss,val_f1,val_mcc"
    );
    assert_eq!(epochs.lines().count(), 3);

    // eval on the saved model reproduces the training-time test curve.
    let eval_dir = dir.path().join("eval");
    ok(&run(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ]));
    assert_eq!(
        std::fs::read(dir.path().join("m.test_pr.csv")).unwrap(),
        std::fs::read(eval_dir.join("eval_pr.csv")).unwrap()
    );

    // Threshold 0 labels every site positive.
    let input = dir.path().join("in.csv");
    let rows: Vec<String> = std::fs::read_to_string(&data)
        .unwrap()
        .lines()
        .skip(1)
        .take(3)
        .map(|l| l.split(',').next().unwrap()[15..26].to_string())
        .collect();
    std::fs::write(&input, format!("sequence\n{}\nMKLV\n", rows.join("\n"))).unwrap();
    let pred = dir.path().join("out.csv");
    ok(&run(&[
        "predict",
        input.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "-t",
        "0",
        "-bs",
        "2",
        "--out",
        pred.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&pred).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "sequence,position,window,probability,label,error");
    for l in &lines[1..4] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[4], "1", "{l}");
        assert_eq!(f[1], "6");
    }
    assert!(lines[4].ends_with("no S/T site in sequence"));

    // Single-sequence mode agrees with CSV mode for a pre-cut window.
    let single = ok(&run(&[
        "predict",
        &rows[0],
        "--model",
        model.to_str().unwrap(),
        "-t",
        "0",
    ]));
    let p_single = single
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .to_string();
    let p_csv = lines[1].split(',').nth(3).unwrap();
    assert_eq!(p_single, p_csv);
}

#[test]
fn single_sequence_mode_lists_every_site() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let model = dir.path().join("m.fmcc");
    ok(&run(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--data",
        bundled().to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ]));
    let out = ok(&run(&[
        "predict",
        "MSKTAAAS",
        "--model",
        model.to_str().unwrap(),
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "position,window,probability,label");
    let positions: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(positions, ["2", "4", "8"]);
    assert!(lines[1].contains(",----MSKTAAA,"));

    let none = run(&["predict", "MKLV", "--model", model.to_str().unwrap()]);
    assert_eq!(none.status.code(), Some(2));
}

#[test]
fn nested_emits_five_curves_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("nested");
    let stdout = ok(&run(&[
        "nested",
        "--config",
        cfg.to_str().unwrap(),
        "--data",
        bundled().to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--jobs",
        "2",
    ]));
    for k in 0..5 {
        assert!(out_dir.join(format!("outer_{k}_pr.csv")).exists());
    }
    let summary = std::fs::read_to_string(out_dir.join("nested_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 8);
    assert!(stdout.contains("±"));
}

#[test]
fn sweep_ranks_and_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.toml");
    std::fs::write(
        &grid,
        r#"
max_hidden = 4
[grid]
windows = [5]
lstm_sizes = [[3], [4], [16]]
mlp_sizes = [0]
lrs = [0.01]
weight_decays = [0.0]
batch_sizes = [128]
epochs = 1
losses = [{ kind = "weighted_ce", w_pos = 10.0 }]
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("sweep");
    ok(&run(&[
        "sweep",
        "--grid",
        grid.to_str().unwrap(),
        "--data",
        bundled().to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let ranking = std::fs::read_to_string(out_dir.join("ranking.csv")).unwrap();
    assert_eq!(ranking.lines().count(), 3, "{ranking}");
    let folds = std::fs::read_to_string(out_dir.join("cv_folds.csv")).unwrap();
    assert_eq!(folds.lines().count(), 11);
    assert!(out_dir.join("test_pr.csv").exists());
    assert!(out_dir.join("best.fmcc").exists());
}

#[test]
fn output_dir_override_relocates_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env(focalmcc::OUTPUT_DIR_ENV, dir.path())
        .args([
            "synth",
            "--out",
            "s.csv",
            "--records",
            "40",
            "--positives",
            "4",
            "--window",
            "5",
        ])
        .output()
        .unwrap();
    ok(&out);
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(text.lines().count(), 41);
}

#[test]
fn baseline_table_matches_base_rate() {
    let out = ok(&run(&[
        "eval",
        "--baseline",
        "--data",
        bundled().to_str().unwrap(),
    ]));
    assert!(out.contains("100.00%"));
    assert!(out.contains("2.44%"));
    assert!(out.contains("4.76%"));
    assert!(out.contains("0.00%"));
}
