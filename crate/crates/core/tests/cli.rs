use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn optikit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optikit"))
        .args(args)
        .env("OPTIKIT_OUT", out)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
        .display()
        .to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SHORT: [&str; 4] = ["--set", "steps=500", "--set", "schedule.total_steps=500"];

#[test]
fn train_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("fig1_s3.json");
    let mut args = vec!["train", "--config", &cfg];
    args.extend(SHORT);
    let o = optikit(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for ext in ["jsonl", "summary.json", "csv"] {
        let p: PathBuf = dir.path().join(format!("fig1_s3.{ext}"));
        assert!(p.exists(), "{}", p.display());
    }
    let lines = fs::read_to_string(dir.path().join("fig1_s3.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 500);
}

#[test]
fn bad_power_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("fig1_s3.json");
    let o = optikit(
        &["train", "--config", &cfg, "--set", "optimizer.p=0.5"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("p within [1, +∞)"), "{}", stderr(&o));
}

#[test]
fn unknown_override_and_missing_field_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("fig1_s3.json");
    let o = optikit(
        &["train", "--config", &cfg, "--set", "optimizer.gamma=1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("unknown override key"),
        "{}",
        stderr(&o)
    );

    let broken = dir.path().join("broken.json");
    fs::write(
        &broken,
        r#"{"problem":{"name":"fig1"},"optimizer":{"kind":"s3"},"seed":1,"steps":5}"#,
    )
    .unwrap();
    let o = optikit(&["train", "--config", broken.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schedule"), "{}", stderr(&o));
}

#[test]
fn divergence_keeps_the_partial_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("fig1_adam_10x.json");
    // far past any stable step size, the iterate leaves x2 > 0
    let o = optikit(
        &["train", "--config", &cfg, "--set", "schedule.peak_lr=10"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("fig1_adam_10x.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["status"]["status"], "diverged");
    let executed = summary["steps_executed"].as_u64().unwrap();
    assert!(executed < 10_000);
}

#[test]
fn verify_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = optikit(&["verify", "t4"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify_t4.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["max_violation"].as_f64().unwrap() <= 0.0);

    let o = optikit(&["verify", "t4", "--set", "expected_first=5.0"], dir.path());
    assert_eq!(o.status.code(), Some(4));

    let o = optikit(&["verify", "t9"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("t1, t2, t3, t4"), "{}", stderr(&o));
}

#[test]
fn verify_t1_records_precondition_cells() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    fs::write(
        &grid,
        r#"{"betas": [[0.9, 0.999], [0.95, 0.9]], "adversarial_steps": 200, "random_steps": 50}"#,
    )
    .unwrap();
    let o = optikit(
        &["verify", "t1", "--config", grid.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify_t1.json")).unwrap())
            .unwrap();
    let errors = report["cells"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c.get("error").is_some())
        .count();
    assert!(errors > 0);
}

#[test]
fn fig1_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = optikit(&["fig1", "--steps", "400", "--seed", "5"], d.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for name in [
        "fig1_sgd.csv",
        "fig1_signsgd.csv",
        "fig1_adam.csv",
        "fig1_s3.csv",
        "fig1_config.json",
    ] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
    let col = |name: &str| -> Vec<f64> {
        fs::read_to_string(a.path().join(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect()
    };
    assert!(col("fig1_signsgd.csv").iter().all(|&u| u == 1.0));
    assert!(col("fig1_s3.csv").iter().all(|&u| u <= 1.0));
}

#[test]
fn sweep_bound_and_schedule_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("mlp_compare.json");
    let o = optikit(
        &[
            "sweep",
            "--config",
            &cfg,
            "--jobs",
            "2",
            "--seed",
            "3",
            "--set",
            "base.steps=50",
            "--set",
            "base.schedule.total_steps=50",
            "--set",
            "base.schedule.warmup_steps=5",
        ],
        dir.path(),
    );
    // variant schedules keep their own length, so 50 steps fit inside them
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("mlp_compare.report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);

    let o = optikit(
        &[
            "bound", "s3", "--beta1", "0.9", "--beta2", "0.9", "--p", "3",
        ],
        dir.path(),
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["bound"], 1.0);

    let budget = config("unit_budget.json");
    let o = optikit(&["bound", "convergence", "--config", &budget], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["bound"], 4.8828125);

    let sched = config("warmup_cosine.json");
    let o = optikit(&["schedule-dump", "--config", &sched], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("warmup_cosine.schedule.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1002);
    assert_eq!(csv.lines().nth(101).unwrap(), "100,0.001");
}
