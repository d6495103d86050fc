use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robustfolio"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn sim_config(dir: &Path) -> PathBuf {
    let json = r#"{
  "data": {"simulation": {
    "mean": [0.0010, 0.0004, 0.0015],
    "covariance": [[4e-4, 1e-4, 5e-5], [1e-4, 2.5e-4, 2e-5], [5e-5, 2e-5, 6e-4]],
    "samples": 150
  }},
  "beta": 200,
  "frontier_lambdas": [0.1, 1, 10, 100],
  "seed": 3
}"#;
    write(dir, "config.json", json)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_three_days_gives_two_returns() {
    let dir = TempDir::new().unwrap();
    let prices = write(
        dir.path(),
        "p.csv",
        "date,AAA\n2020-01-01,100\n2020-01-02,110\n2020-01-03,99\n",
    );
    let out = run(&["ingest", "--csv", s(&prices)]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "date,AAA");
    assert!(lines[1].starts_with("2020-01-02,"));
    let r: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(r, (110.0_f64 / 100.0).ln());
}

#[test]
fn ingest_passthrough_is_idempotent() {
    let dir = TempDir::new().unwrap();
    let prices = write(
        dir.path(),
        "p.csv",
        "date,AAA,BBB\n2020-01-01,100,20\n2020-01-02,101.5,19.7\n2020-01-03,99.2,20.3\n2020-01-06,100.1,20.05\n",
    );
    let first = dir.path().join("r1.csv");
    let second = dir.path().join("r2.csv");
    assert_eq!(code(&run(&["ingest", "--csv", s(&prices), "--out", s(&first)])), 0);
    assert_eq!(
        code(&run(&["ingest", "--csv", s(&first), "--returns", "--out", s(&second)])),
        0
    );
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn bad_cell_names_row_and_column() {
    let dir = TempDir::new().unwrap();
    let prices = write(
        dir.path(),
        "p.csv",
        "date,AAA,BBB\n2020-01-01,100,20\n2020-01-02,abc,21\n2020-01-03,1,2\n",
    );
    let out = run(&["ingest", "--csv", s(&prices)]);
    assert_ne!(code(&out), 0);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("row 3"), "{err}");
    assert!(err.contains("AAA"), "{err}");

    let zero = write(
        dir.path(),
        "z.csv",
        "date,AAA\n2020-01-01,100\n2020-01-02,0\n2020-01-03,1\n",
    );
    let out = run(&["ingest", "--csv", s(&zero)]);
    assert_eq!(code(&out), 1);
}

#[test]
fn compare_is_reproducible_and_consistent() {
    let dir = TempDir::new().unwrap();
    let cfg = sim_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run(&["compare", "--config", s(&cfg), "--out", s(&a)])), 0);
    assert_eq!(code(&run(&["compare", "--config", s(&cfg), "--out", s(&b)])), 0);
    for name in [
        "report.csv",
        "report.json",
        "calibration.json",
        "frontier_mark.csv",
        "frontier_box.csv",
        "frontier_ellip.csv",
        "frontier_sep.csv",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }

    let csv = fs::read_to_string(a.join("report.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    let (lambda_rows, avg) = rows.split_at(5);
    assert_eq!(avg[0][0], "Avg");
    for j in 1..5 {
        let mean: f64 = lambda_rows.iter().map(|r| r[j].parse::<f64>().unwrap()).sum::<f64>() / 5.0;
        let shown: f64 = avg[0][j].parse().unwrap();
        assert!((mean - shown).abs() <= 1e-3, "column {j}");
    }

    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["report"]["seed"], 3);
    assert_eq!(meta["report"]["beta"], 200);
    assert_eq!(meta["report"]["alpha"], 0.05);
    assert!(meta["run"]["bootstrap_seed"].is_u64());
    assert!(meta["report"]["sigma_mu_convention"].is_string());
}

#[test]
fn saved_config_reproduces_run() {
    let dir = TempDir::new().unwrap();
    let cfg = sim_config(dir.path());
    let a = dir.path().join("a");
    assert_eq!(code(&run(&["compare", "--config", s(&cfg), "--out", s(&a)])), 0);
    let b = dir.path().join("b");
    assert_eq!(
        code(&run(&[
            "compare",
            "--config",
            s(&a.join("config.json")),
            "--out",
            s(&b)
        ])),
        0
    );
    assert_eq!(
        fs::read(a.join("report.json")).unwrap(),
        fs::read(b.join("report.json")).unwrap()
    );
}

#[test]
fn flags_override_config() {
    let dir = TempDir::new().unwrap();
    let cfg = sim_config(dir.path());
    let out = dir.path().join("o");
    let status = run(&[
        "compare",
        "--config",
        s(&cfg),
        "--seed",
        "9",
        "--alpha",
        "0.1",
        "--lambda-grid",
        "1,2",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&status), 0);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["report"]["seed"], 9);
    assert_eq!(meta["report"]["alpha"], 0.1);
    assert_eq!(meta["report"]["beta"], 200);
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn simulation_ignores_beta() {
    let dir = TempDir::new().unwrap();
    let cfg = sim_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run(&["simulate", "--config", s(&cfg), "--out", s(&a)])), 0);
    assert_eq!(
        code(&run(&[
            "simulate",
            "--config",
            s(&cfg),
            "--beta",
            "500",
            "--out",
            s(&b)
        ])),
        0
    );
    let ra = fs::read_to_string(a.join("returns.csv")).unwrap();
    assert_eq!(ra, fs::read_to_string(b.join("returns.csv")).unwrap());
    assert_eq!(ra.lines().count(), 151);
}

#[test]
fn frontier_files() {
    let dir = TempDir::new().unwrap();
    let cfg = sim_config(dir.path());
    let out = dir.path().join("f");
    assert_eq!(
        code(&run(&[
            "frontier",
            "--config",
            s(&cfg),
            "--model",
            "mark",
            "--out",
            s(&out)
        ])),
        0
    );
    let csv = fs::read_to_string(out.join("frontier_mark.csv")).unwrap();
    let risks: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(risks.len(), 4);
    assert!(risks.windows(2).all(|w| w[1] <= w[0]));

    let single = write(
        dir.path(),
        "one.csv",
        "date,AAA\n2020-01-01,100\n2020-01-02,101\n2020-01-03,100.5\n2020-01-06,102\n",
    );
    let out1 = dir.path().join("one");
    let status = run(&[
        "frontier",
        "--csv",
        s(&single),
        "--model",
        "ellip",
        "--beta",
        "100",
        "--out",
        s(&out1),
    ]);
    assert_eq!(code(&status), 0, "{}", String::from_utf8_lossy(&status.stderr));
    let csv = fs::read_to_string(out1.join("frontier_ellip.csv")).unwrap();
    let points: Vec<(String, String)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[2].to_string(), f[3].to_string())
        })
        .collect();
    assert_eq!(points.len(), 60);
    assert!(points.iter().all(|p| *p == points[0]));
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let cfg = sim_config(dir.path());
    assert_eq!(code(&run(&["frontier", "--config", s(&cfg), "--model", "cvar"])), 2);
    assert_eq!(code(&run(&["compare"])), 2);
    assert_eq!(code(&run(&["compare", "--config", s(&cfg), "--alpha", "1.5"])), 2);
    assert_eq!(code(&run(&["bogus"])), 2);
    let broken = write(dir.path(), "broken.json", "{\"nope\": 1}");
    assert_eq!(code(&run(&["compare", "--config", s(&broken)])), 2);
}

#[test]
fn missing_input_is_a_computation_error() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "compare",
        "--csv",
        s(&dir.path().join("absent.csv")),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn summary_over_two_arms() {
    let dir = TempDir::new().unwrap();
    let cfg = sim_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(
        code(&run(&[
            "compare",
            "--config",
            s(&cfg),
            "--label",
            "n=150",
            "--out",
            s(&a)
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "compare",
            "--config",
            s(&cfg),
            "--samples",
            "400",
            "--label",
            "n=400",
            "--out",
            s(&b)
        ])),
        0
    );
    let sum_dir = dir.path().join("s");
    let out = run(&[
        "summary",
        s(&a.join("report.json")),
        &format!("renamed={}", s(&b.join("report.json"))),
        "--out",
        s(&sum_dir),
    ]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(sum_dir.join("summary.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scenario,max_avg_sharpe,model");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("n=150,"));
    assert!(lines[2].starts_with("renamed,"));
}
