use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tcsa(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcsa"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("tcsa runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn records(path: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn design_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "design",
        "--model",
        "ishigami",
        "--n",
        "8",
        "--seed",
        "4",
        "--evaluate",
    ];
    let a = ok(&tcsa(&args, dir.path()));
    let b = ok(&tcsa(&args, dir.path()));
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "X1,X2,X3,Y");
    assert_eq!(lines.len(), 9);
    let c = ok(&tcsa(
        &["design", "--model", "ishigami", "--n", "8", "--seed", "5"],
        dir.path(),
    ));
    assert_ne!(a.lines().nth(1), c.lines().nth(1));
}

#[test]
fn bench_writes_results_and_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&tcsa(
        &[
            "bench",
            "--model",
            "sobol-g",
            "--measures",
            "pf",
            "--order",
            "first,total",
            "--n",
            "100",
            "--reps",
            "5",
            "--seed",
            "9",
            "--out",
            "run",
        ],
        dir.path(),
    ));
    assert!(out.contains("ordering"));
    let run = dir.path().join("run");
    let recs = records(&run.join("results.jsonl"));
    assert_eq!(recs.len(), 2 * 5 * 4);
    assert!(recs
        .iter()
        .all(|r| r["measure"] == "pf" && r["n"] == 100 && r["value"].is_number()));
    for f in ["summary.csv", "long.csv", "summary.txt", "config.toml"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let long = fs::read_to_string(run.join("long.csv")).unwrap();
    assert!(long.starts_with("measure,mode,order,group,n,repetition,value"));

    // the saved experiment file reproduces the run
    let again = ok(&tcsa(
        &["bench", "--config", "run/config.toml", "--out", "again"],
        dir.path(),
    ));
    assert_eq!(again, out);
    assert_eq!(
        fs::read_to_string(run.join("results.jsonl")).unwrap(),
        fs::read_to_string(dir.path().join("again/results.jsonl")).unwrap()
    );
}

#[test]
fn bench_target_mode_uses_weight() {
    let dir = tempfile::tempdir().unwrap();
    ok(&tcsa(
        &[
            "bench",
            "--model",
            "min-normal-uniform",
            "--measures",
            "qdm-g,pf",
            "--mode",
            "target,conditional",
            "--weight",
            "smooth",
            "--quantile",
            "0.8",
            "--n",
            "120",
            "--reps",
            "2",
            "--out",
            "run",
        ],
        dir.path(),
    ));
    let recs = records(&dir.path().join("run/results.jsonl"));
    // pf has no conditional version
    assert_eq!(recs.len(), 3 * 2 * 2);
    assert!(recs.iter().all(|r| r["value"].is_number()));
}

#[test]
fn measure_reads_sample_with_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("a,b,kind,y\n");
    for i in 0..80 {
        let a = i as f64 / 80.0;
        let b = ((i * 37) % 80) as f64 / 80.0;
        let kind = if i % 3 == 0 { "red" } else { "blue" };
        csv.push_str(&format!("{a},{b},{kind},{}\n", (6.0 * a).sin() + 0.1 * b));
    }
    fs::write(dir.path().join("s.csv"), csv).unwrap();
    fs::write(
        dir.path().join("s.toml"),
        "factors = [\"a\", \"b\", \"kind\"]\ncategorical = [\"kind\"]\nresponse = [\"y\"]\n",
    )
    .unwrap();
    let out = ok(&tcsa(
        &[
            "measure",
            "--data",
            "s.csv",
            "--schema",
            "s.toml",
            "--measures",
            "qdm-g,mi-g",
            "--groups",
            "a;b;a,kind",
            "--out",
            "m",
        ],
        dir.path(),
    ));
    assert!(out.contains("qdm-g"));
    let recs = records(&dir.path().join("m/results.jsonl"));
    assert_eq!(recs.len(), 6);
    let value = |m: &str, g: &str| {
        recs.iter()
            .find(|r| r["measure"] == m && r["group"] == g)
            .unwrap()["value"]
            .as_f64()
            .unwrap()
    };
    assert!(value("qdm-g", "a") > value("qdm-g", "b"));
    assert!(value("mi-g", "a") > value("mi-g", "b"));
    assert!(recs.iter().any(|r| r["group"] == "a,kind"));

    let bad = tcsa(
        &[
            "measure",
            "--data",
            "s.csv",
            "--schema",
            "s.toml",
            "--measures",
            "qdm-g",
            "--groups",
            "zz",
            "--out",
            "m2",
        ],
        dir.path(),
    );
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown factor"));
}

#[test]
fn summarize_reads_result_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(&tcsa(
        &[
            "bench",
            "--model",
            "ishigami",
            "--measures",
            "pf",
            "--n",
            "100",
            "--reps",
            "4",
            "--out",
            "run",
        ],
        dir.path(),
    ));
    let out = ok(&tcsa(
        &[
            "summarize",
            "--input",
            "run/results.jsonl",
            "--ranking",
            "X1;X2;X3",
            "--out",
            "sum",
        ],
        dir.path(),
    ));
    assert!(out.contains("median"));
    assert!(out.contains("ordering"));
    assert!(dir.path().join("sum/summary.csv").exists());
}

#[test]
fn rejects_unknown_measure() {
    let dir = tempfile::tempdir().unwrap();
    let out = tcsa(
        &[
            "bench",
            "--model",
            "ishigami",
            "--measures",
            "nope",
            "--out",
            "x",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown measure"));
}
