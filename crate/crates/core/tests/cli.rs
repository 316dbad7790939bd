use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crowdnav"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.toml"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every file under `dir` except the manifest, with contents.
fn outputs(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.txt" {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn simulate_writes_trajectories_metrics_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&[
        "simulate",
        "--config",
        s(&config("crowd_crossing")),
        "--seed",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("trajectories_with.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time,agent_id,kind,x,y"));
    let first: Vec<&str> = lines.take_while(|l| l.starts_with("0.000,")).collect();
    assert_eq!(first.len(), 19);
    let metrics = fs::read_to_string(out.join("metrics_with.txt")).unwrap();
    assert!(metrics.contains("seed: 1\n"));
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    for key in ["command: simulate", "seeds: 1", "version: ", "timestamp_unix: "] {
        assert!(manifest.contains(key), "{manifest}");
    }
}

#[test]
fn both_modes_share_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--config",
        s(&config("counterflow")),
        "--mode",
        "both",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    for f in [
        "trajectories_with.csv",
        "trajectories_without.csv",
        "metrics_with.txt",
        "metrics_without.txt",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let cmp = fs::read_to_string(dir.path().join("comparison.txt")).unwrap();
    assert!(cmp.starts_with("seed: 0\n"));
    assert!(cmp.contains("collision_count.with: ") && cmp.contains("collision_count.without: "));
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&[
            "simulate",
            "--config",
            s(&config("counterflow")),
            "--mode",
            "both",
            "--out",
            s(out),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(outputs(&a), outputs(&b));
}

#[test]
fn sweep_writes_tables_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&[
            "sweep",
            "--config",
            s(&config("counterflow")),
            "--seeds",
            "0..3",
            "--out",
            s(out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(outputs(&a), outputs(&b));
    let runs = fs::read_to_string(a.join("sweep_runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 6);
    let agg = fs::read_to_string(a.join("sweep_aggregate.csv")).unwrap();
    let rows: Vec<&str> = agg.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("with,3,") && rows[2].starts_with("without,3,"));
}

#[test]
fn single_seed_sweep_aggregates_equal_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "sweep",
        "--config",
        s(&config("counterflow")),
        "--seeds",
        "4..=4",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let runs = fs::read_to_string(dir.path().join("sweep_runs.csv")).unwrap();
    let agg = fs::read_to_string(dir.path().join("sweep_aggregate.csv")).unwrap();
    for (run_row, agg_row) in runs.lines().skip(1).zip(agg.lines().skip(1)) {
        let r: Vec<&str> = run_row.split(',').collect();
        let a: Vec<&str> = agg_row.split(',').collect();
        assert_eq!(r[1], a[0]);
        assert_eq!(r[5].parse::<f64>().unwrap(), a[2].parse::<f64>().unwrap());
        assert_eq!(r[7].parse::<f64>().unwrap(), a[4].parse::<f64>().unwrap());
        assert_eq!(r[4].parse::<f64>().unwrap(), a[5].parse::<f64>().unwrap());
    }
}

#[test]
fn config_problems_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["simulate", "--config", "/no/such/config.toml", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "dt = -1.0\nbogus = 3\n[robot]\nspeed = 2\n").unwrap();
    let o = run(&["simulate", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bogus") && err.contains("robot.speed"), "{err}");
    assert!(!out.join("trajectories_with.csv").exists());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("counterflow");
    for args in [
        vec!["sweep", "--config", s(&cfg), "--seeds", "5..5", "--out", s(dir.path())],
        vec![
            "simulate",
            "--config",
            s(&cfg),
            "--mode",
            "sideways",
            "--out",
            s(dir.path()),
        ],
        vec!["evaluate", "--predictor", "sgan", "x.txt"],
        vec!["fly"],
        vec![],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = run(&["evaluate", "--predictor", "sgan", "x.txt"]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sgan") && err.contains("linear"), "{err}");
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

fn write_constant_velocity(path: &Path) {
    let mut text = String::new();
    for ped in 1..=3 {
        for f in 0..20 {
            let t = f as f64;
            text += &format!(
                "{} {} {} {}\n",
                f * 10,
                ped,
                0.4 * t + ped as f64,
                -0.2 * t * ped as f64
            );
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn evaluate_prints_zero_error_for_constant_velocity() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("cv.txt");
    write_constant_velocity(&data);
    let out = dir.path().join("eval");
    let o = run(&["evaluate", s(&data), "--predictor", "linear", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("ade: 0.00"), "{stdout}");
    assert!(stdout.contains("windows: 15"));
    let csv = fs::read_to_string(out.join("cv_windows.csv")).unwrap();
    assert_eq!(csv.lines().count(), 16);
    assert!(out.join("manifest.txt").exists());

    let o = run(&[
        "evaluate",
        s(&data),
        "--predictor",
        "flow",
        "--t-obs",
        "6",
        "--t-pred",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("t_obs: 6"));
}

#[test]
fn evaluate_reports_bad_rows_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("broken.txt");
    fs::write(&data, "0 1 0.0 0.0\n10 1 0.5\n").unwrap();
    let o = run(&["evaluate", s(&data)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("broken.txt") && err.contains("line 2"), "{err}");

    let o = run(&["evaluate", "/no/such/data.txt"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn evaluate_without_windows_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("short.txt");
    fs::write(&data, "0 1 0.0 0.0\n10 1 0.5 0.0\n").unwrap();
    assert_eq!(run(&["evaluate", s(&data)]).status.code(), Some(1));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(&["export-primitives", "--out", s(&blocker.join("sub"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn export_primitives_lists_every_sample() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "export-primitives",
        "--config",
        s(&config("counterflow")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("primitives.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("id,curvature,x,y,heading"));
    // 21 arcs of 2.5 m sampled every 0.1 m.
    assert_eq!(csv.lines().count(), 1 + 21 * 25);
}
