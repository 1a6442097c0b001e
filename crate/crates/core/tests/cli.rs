use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_class2simi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn verify_defaults_pass() {
    let o = run(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["two_class_cell"]["asserted"], false);
}

#[test]
fn verify_quiet_prints_one_line() {
    let o = run(&["--quiet", "verify", "--trials", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    assert!(text.contains("monte-carlo pass (0 cases"));
}

#[test]
fn transform_identity() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "id.txt", "3\n1 0 0\n0 1 0\n0 0 1\n");
    let o = run(&["transform-matrix", "--matrix", &m]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["ts"], serde_json::json!([[1.0, 0.0], [0.0, 1.0]]));
    assert_eq!(v["similarity_noise_rate"], 0.0);
}

#[test]
fn unknown_flag_prints_usage_and_exits_1() {
    let o = run(&["verify", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
    let o = run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_dataset_path_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"dataset": {"kind": "csv", "path": "/nonexistent/train.csv", "label_column": 0}, "noise": {"kind": "none"}}"#,
    );
    let o = run(&["train", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("dataset.path"), "{}", stderr(&o));
}

#[test]
fn malformed_matrix_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "bad.txt", "2\n0.5 0.6\n0 1\n");
    let o = run(&["transform-matrix", "--matrix", &m]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gen_corrupt_estimate_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data.csv");
    let o = run(&[
        "gen-data", "--classes", "3", "--per-class", "200", "--dim", "2", "--separation", "5",
        "--spread", "1", "--seed", "4", "-o", data.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&data).unwrap();
    assert!(text.starts_with("x0,x1,label\n"));
    assert!(!text.contains('\r'));

    let m = write(d, "flip.txt", "3\n0.7 0.3 0\n0 0.7 0.3\n0.3 0 0.7\n");
    let noisy = d.join("noisy.csv");
    let o = run(&[
        "corrupt", "--input", data.to_str().unwrap(), "--matrix", &m, "--seed", "1",
        "-o", noisy.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&noisy).unwrap();
    assert!(text.starts_with("x0,x1,label,noisy_label\n"));
    assert_eq!(text.lines().count(), 601);

    let cfg = write(
        d,
        "cfg.json",
        &format!(
            r#"{{"dataset": {{"kind": "csv", "path": {:?}, "label_column": 2, "noisy_label_column": 3, "num_classes": 3}},
                "noise": {{"kind": "provided"}}, "hidden_layers": [8], "train": {{"epochs": 10}}}}"#,
            noisy.to_str().unwrap()
        ),
    );
    let out = d.join("run");
    let o = run(&["train", "--config", &cfg, "--output-dir", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("train: method=f_class2simi"));
    for f in ["report.json", "stage1_model.json", "final_model.json", "tc_estimated.txt", "ts_used.json"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let o = run(&[
        "estimate-tc", "--checkpoint", out.join("stage1_model.json").to_str().unwrap(),
        "--input", noisy.to_str().unwrap(), "--label-column", "2", "--noisy-label-column", "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("3\n"));
}

#[test]
fn train_reports_are_byte_identical_except_timing() {
    let args = ["train", "--epochs", "3", "--seed", "9", "--method", "r_class2simi"];
    let strip = |o: &Output| {
        let mut v: serde_json::Value = serde_json::from_str(&stdout(o)).unwrap();
        v["wall_clock_seconds"] = serde_json::json!(0);
        serde_json::to_string(&v).unwrap()
    };
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn robustness_emits_two_rows_per_level() {
    let o = run(&["robustness", "--epochs", "2", "--levels", "0,0.3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "level,method,accuracy");
    let o = run(&["robustness", "--levels", "0.25"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_override_is_rejected() {
    let o = run(&["train", "--method", "guess"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["train", "--tc-source", "perturbed:-1"]);
    assert_eq!(o.status.code(), Some(1));
}
