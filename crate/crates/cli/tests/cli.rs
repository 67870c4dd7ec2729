use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mpmue(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpmue")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_sample(path: &Path, values: impl Iterator<Item = String>) {
    let mut s = String::from("x\n");
    for v in values {
        s.push_str(&v);
        s.push('\n');
    }
    fs::write(path, s).unwrap();
}

#[test]
fn eval_maxuexp_row() {
    let o = mpmue(&["eval", "maxuexp", "--a", "1", "--lambda", "1", "--x", "0.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cols[0], 0.5);
    assert!((cols[1] - 0.696_734_670_144).abs() < 1e-12);
    assert!((cols[2] - 0.196_734_670_144).abs() < 1e-12);
}

#[test]
fn eval_output_round_trips_to_twelve_digits() {
    let o = mpmue(&["eval", "emue", "--a", "2", "--lambda", "0.5", "--t", "0.1,1,7.5"]);
    assert!(o.status.success());
    let p = mpmue::Params::new(2.0, 0.5).unwrap();
    for row in stdout(&o).lines().skip(1) {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        let pdf = mpmue::waiting_times::emue_pdf(&p, cols[0]);
        let cdf = mpmue::waiting_times::emue_cdf(&p, cols[0]);
        assert!(((cols[1] - pdf) / pdf).abs() < 1e-11, "{row}");
        assert!(((cols[2] - cdf) / cdf).abs() < 1e-11, "{row}");
    }
}

#[test]
fn eval_pmf_and_erlang_domain() {
    let o = mpmue(&["eval", "pmf", "--a", "1", "--lambda", "1", "--mu", "1", "--n", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().nth(1).unwrap(), "0,0.415954379638");

    let o = mpmue(&["eval", "erlang", "--n", "0", "--t", "1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("order"));

    let o = mpmue(&["eval", "maxuexp", "--a", "-1", "--x", "1"]);
    assert!(!o.status.success());
}

#[test]
fn simulate_is_deterministic() {
    let a = mpmue(&["simulate", "xi", "--n", "5", "--seed", "7"]);
    let b = mpmue(&["simulate", "xi", "--n", "5", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 5);
    let c = mpmue(&["simulate", "xi", "--n", "5", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_path_times_ascend_within_horizon() {
    for seed in ["0", "1", "2", "3"] {
        let o = mpmue(&["simulate", "path", "--horizon", "2", "--mu", "power:1", "--seed", seed]);
        assert!(o.status.success());
        let text = stdout(&o);
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# xi="));
        assert_eq!(lines.next().unwrap(), "event_index,time");
        let times: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(times.iter().all(|&t| t > 0.0 && t <= 2.0));
    }
}

#[test]
fn simulate_path_with_table_clock() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.csv");
    fs::write(&good, "t,mu\n0,0\n1,2\n3,4\n").unwrap();
    let spec = format!("table:{}", good.display());
    let o = mpmue(&["simulate", "path", "--horizon", "3", "--mu", &spec, "--seed", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "0,0\n1,2\n2,1\n").unwrap();
    let spec = format!("table:{}", bad.display());
    let o = mpmue(&["simulate", "path", "--horizon", "1", "--mu", &spec]);
    assert!(!o.status.success());
}

#[test]
fn fit_branches() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = mpmue::RandomStream::new(11);
    let p = mpmue::Params::new(1.0, 1.0).unwrap();
    let path = dir.path().join("unit.csv");
    write_sample(&path, (0..5000).map(|_| p.sample(&mut s).to_string()));
    let o = mpmue(&["fit", path.to_str().unwrap(), "--method", "mom"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["branch"], "unique");
    for key in ["a", "lambda", "x_product", "r_hat", "objective", "warnings"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }

    let p = mpmue::Params::new(1.0, 8.0).unwrap();
    let path = dir.path().join("steep.csv");
    write_sample(&path, (0..5000).map(|_| p.sample(&mut s).to_string()));
    let o = mpmue(&["fit", path.to_str().unwrap(), "--method", "auto"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["branch"], "lsq_refined");
}

#[test]
fn fit_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert!(!mpmue(&["fit", empty.to_str().unwrap()]).status.success());

    let text = dir.path().join("text.csv");
    fs::write(&text, "x\n1.0\nabc\n2.0\n").unwrap();
    let o = mpmue(&["fit", text.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));

    let neg = dir.path().join("neg.csv");
    fs::write(&neg, "1.0\n-2.0\n").unwrap();
    let o = mpmue(&["fit", neg.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2"));
}

#[test]
fn momcurve_comment_and_tail() {
    let o = mpmue(&["momcurve", "--lo", "0.1", "--hi", "10", "--steps", "1000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "# argmin=4.0232 min=1.2452");
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(2)
        .map(|l| {
            let mut c = l.split(',').map(|v| v.parse::<f64>().unwrap());
            (c.next().unwrap(), c.next().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 1001);
    let before: Vec<_> = rows.iter().filter(|r| r.0 < 4.02).collect();
    assert!(before.windows(2).all(|w| w[1].1 < w[0].1));

    let o = mpmue(&["momcurve", "--lo", "1", "--hi", "1000", "--steps", "10"]);
    let last = stdout(&o).lines().last().unwrap().to_string();
    let g: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((g - 4.0 / 3.0).abs() < 1e-3);
}

#[test]
fn verify_writes_ledger_and_gates_on_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ledger.json");
    let o = mpmue(&["verify", "--ledger", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let records: Vec<serde_json::Value> = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert!(records.len() >= 5);
    for r in &records {
        assert!(r["verdict"].is_string());
    }

    let zero = dir.path().join("zero.json");
    let o = Command::new(env!("CARGO_BIN_EXE_mpmue"))
        .args(["verify", "--ledger", zero.to_str().unwrap()])
        .env("MPMUE_TOL", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(zero.exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(mpmue(&["eval", "nonsense"]).status.code(), Some(2));
    assert_eq!(mpmue(&["momcurve", "--lo", "5", "--hi", "1"]).status.code(), Some(2));
}
