//! End-to-end exercises of the binary: exit-code contract, flag/config
//! precedence, and output formats.

use std::io::Write;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reinforce-walk"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(out)).expect("valid JSON report")
}

#[test]
fn simulate_degenerate_p_one() {
    let out = run(&[
        "simulate", "--dist", "rademacher", "--p", "1.0", "--horizon", "5", "--seed", "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let data = text.lines().nth(1).unwrap();
    let s: f64 = data.split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(s.abs(), 5.0);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let f1 = dir.path().join("a.csv");
    let f2 = dir.path().join("b.csv");
    let args = |p: &std::path::Path| {
        vec![
            "simulate".to_string(),
            "--p".into(),
            "0.7".into(),
            "--horizon".into(),
            "512".into(),
            "--checkpoints".into(),
            "64,512".into(),
            "--seed".into(),
            "99".into(),
            "--out".into(),
            p.display().to_string(),
        ]
    };
    assert!(bin().args(args(&f1)).status().unwrap().success());
    assert!(bin().args(args(&f2)).status().unwrap().success());
    assert_eq!(std::fs::read(&f1).unwrap(), std::fs::read(&f2).unwrap());
}

#[test]
fn exit_code_contract() {
    // config errors -> 2
    assert_eq!(run(&["simulate", "--p", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["fluct", "--p", "0.4"]).status.code(), Some(2));
    assert_eq!(
        run(&["bridge", "--grid", "0.5,0.25"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["bridge"]).status.code(), Some(2));
    assert_eq!(
        run(&["enumerate", "--dist", "rademacher", "--p", "0.5", "--n", "11"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["enumerate", "--dist", "gaussian:0,1", "--p", "0.5", "--n", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["equivalence", "--p", "0.6", "--n", "5"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    // oracle mismatch -> 1
    assert_eq!(
        run(&["equivalence", "--p", "0.6", "--q", "0.7", "--n", "3"])
            .status
            .code(),
        Some(1)
    );
    // clean runs -> 0
    assert_eq!(
        run(&["equivalence", "--p", "0.6", "--n", "3"]).status.code(),
        Some(0)
    );
    assert_eq!(
        run(&["equivalence", "--p", "0.6", "--d", "2", "--n", "3"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn exact_tables() {
    let out = run(&["exact", "--p", "0.75", "--n", "1,2,3", "--variance-limit"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    let rows = rep["detail"]["rows"].as_array().unwrap();
    let a: Vec<f64> = rows.iter().map(|r| r["a_n"].as_f64().unwrap()).collect();
    assert_eq!(a, vec![1.0, 1.75, 2.40625]);
    assert!((rows[1]["m_tilde_n"].as_f64().unwrap() - 1.1428571).abs() < 1e-6);
    assert_eq!(rep["detail"]["limit_variance"], 2.0);
    let iv = &rep["detail"]["w_variance_interval"];
    assert!(iv["lower"].as_f64().unwrap() <= iv["upper"].as_f64().unwrap());

    let out = run(&["exact", "--p", "0.6"]);
    let lv = json(&out)["detail"]["limit_variance"].as_f64().unwrap();
    assert!((lv - 5.0).abs() < 1e-12);

    assert_eq!(run(&["exact", "--p", "0.75", "--n", "0,2"]).status.code(), Some(2));
    assert_eq!(
        run(&["exact", "--p", "0.75", "--n", "8", "--horizon", "4"]).status.code(),
        Some(2)
    );
}

#[test]
fn enumerate_small_pmf() {
    let out = run(&["enumerate", "--dist", "rademacher", "--p", "0.6", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',');
            (
                it.next().unwrap().parse().unwrap(),
                it.next().unwrap().parse().unwrap(),
            )
        })
        .collect();
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    assert_eq!(rows.len(), 3);
    assert!((rows[0].0 + 2.0).abs() < 1e-12 && (rows[0].1 - 0.4).abs() < 1e-12);
    assert!((rows[1].0).abs() < 1e-12 && (rows[1].1 - 0.2).abs() < 1e-12);
    assert!((rows[2].0 - 2.0).abs() < 1e-12 && (rows[2].1 - 0.4).abs() < 1e-12);

    // n = 1 reproduces the step law itself
    let dir = tempfile::tempdir().unwrap();
    let law = dir.path().join("law.csv");
    std::fs::write(&law, "value,probability\n-1.0,0.5\n0.0,0.2\n2.0,0.3\n").unwrap();
    let desc = format!("discrete:{}", law.display());
    let out = run(&["enumerate", "--dist", &desc, "--p", "0.9", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let probs: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(probs.len(), 3);
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    // unknown descriptor is a config error
    let out = run(&["enumerate", "--dist", "discrete-inline", "--p", "0.9", "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let mut f = std::fs::File::create(&cfg).unwrap();
    writeln!(f, "# experiment record").unwrap();
    writeln!(f, "dist = rademacher").unwrap();
    writeln!(f, "p = 0.6").unwrap();
    writeln!(f, "n = 2").unwrap();
    drop(f);
    let cfg_s = cfg.display().to_string();
    let out = run(&["enumerate", "--config", &cfg_s]);
    assert_eq!(out.status.code(), Some(0));
    let p2: f64 = stdout(&out)
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((p2 - 0.4).abs() < 1e-12, "P(2) from config p=0.6");

    // flag overrides the file: p = 0.75 gives P(2) = 0.4375
    let out = run(&["enumerate", "--config", &cfg_s, "--p", "0.75"]);
    let p2: f64 = stdout(&out)
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((p2 - 0.4375).abs() < 1e-12, "flag override");

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "p 0.6\n").unwrap();
    assert_eq!(
        run(&["enumerate", "--config", &bad.display().to_string()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn fluct_small_run_and_report_shape() {
    let out = run(&[
        "fluct", "--p", "0.75", "--checkpoints", "16", "--horizon", "1024", "--paths", "1000",
        "--seed", "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    assert_eq!(rep["schema"], 1);
    assert_eq!(rep["command"], "fluct");
    assert_eq!(rep["master_seed"], 5);
    assert_eq!(rep["config"]["p"], 0.75);
    assert!(rep["elapsed_seconds"].as_f64().unwrap() > 0.0);
    assert!(rep["pass"].as_bool().unwrap());
    let tests = rep["tests"].as_array().unwrap();
    assert!(!tests.is_empty());
    for t in tests {
        assert!(t["pass"].as_bool().unwrap());
        assert_eq!(t["seed"], 5);
    }
}

#[test]
fn bridge_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("bridge.csv");
    let out = run(&[
        "bridge", "--grid", "0.25,0.5", "--p", "0.75", "--checkpoints", "16", "--horizon",
        "1024", "--paths", "200", "--seed", "8", "--format", "csv", "--out",
        &out_path.display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "path_id,x,G_n_value,bridge_proxy_value,fluct_value"
    );
    assert_eq!(text.lines().count(), 1 + 200 * 2);
}
