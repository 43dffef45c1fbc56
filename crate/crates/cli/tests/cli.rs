use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FIG1: &str = "# A..E\n0 1\n1 2\n2 3\n0 2\n3 4\n";

fn tgdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tgdp"))
        .args(args)
        .env_remove("TGDP_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn rook4(dir: &Path) -> PathBuf {
    let mut edges = String::new();
    for a in 0..16 {
        for b in a + 1..16 {
            if a / 4 == b / 4 || a % 4 == b % 4 {
                edges += &format!("{a} {b}\n");
            }
        }
    }
    write(dir, "rook4.txt", &edges)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_reports_size_and_writes_json() {
    let dir = TempDir::new().unwrap();
    let edges = write(dir.path(), "fig1.txt", FIG1);
    let json = dir.path().join("fig1.json");
    let o = tgdp(&["ingest", "--edges", s(&edges), "--out", s(&json)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "n=5 edges=5 maxdeg=3");
    let o = tgdp(&["lp", "--graph", s(&json)]);
    assert!(stdout(&o).starts_with("OPT=2.00 ratio=0.400"));
}

#[test]
fn ingest_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(tgdp(&["ingest", "--edges", "/nonexistent/edges.txt"]).status.code(), Some(2));
    let junk = write(dir.path(), "junk.txt", "hello world\n1 2 3 x\n");
    assert_eq!(tgdp(&["ingest", "--edges", s(&junk), "--format", "snap"]).status.code(), Some(2));
    assert_eq!(tgdp(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn lp_summaries() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "fig1.txt", FIG1);
    let o = tgdp(&["lp", "--graph", s(&g), "--alpha", "1.0"]);
    assert!(stdout(&o).starts_with("OPT=5.00 ratio=1.000"), "{}", stdout(&o));
    let o = tgdp(&["lp", "--graph", s(&rook4(dir.path()))]);
    assert!(stdout(&o).contains("exact=16/7"), "{}", stdout(&o));
    assert_eq!(tgdp(&["lp"]).status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "fig1.txt", FIG1);
    let run = |out: &Path, jobs: &str| {
        tgdp(&[
            "--jobs", jobs, "simulate", "--protocol", "domset", "--graph", s(&g), "--eps", "1", "--delta", "1",
            "--trials", "500", "--seed", "7", "--out", s(out),
        ])
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let o = run(&a, "1");
    assert!(o.status.success());
    assert!(stdout(&o).contains("bound=4.0000"), "{}", stdout(&o));
    assert!(run(&b, "2").status.success());
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    assert!(String::from_utf8(ta).unwrap().starts_with("trial,estimate,truth,sq_error\n"));
}

#[test]
fn simulate_usage_errors() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "fig1.txt", FIG1);
    let base = ["simulate", "--protocol", "lp", "--graph", s(&g)];
    let with = |extra: &[&str]| tgdp(&[&base[..], extra].concat());
    assert_eq!(with(&["--trials", "0", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(with(&["--trials", "10"]).status.code(), Some(2));
    assert_eq!(tgdp(&["simulate", "--protocol", "robust", "--graph", s(&g), "--seed", "1"]).status.code(), Some(2));
    let o = tgdp(&["simulate", "--protocol", "robust", "--graph", s(&g), "--alpha", "0.5", "--seed", "1", "--trials", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "fig1.txt", FIG1);
    let cfg = write(dir.path(), "run.toml", &format!("graph = {:?}\nseed = 3\ntrials = 50\neps = 2.0\n", s(&g)));
    let o = tgdp(&["--config", s(&cfg), "simulate", "--protocol", "lp", "--out", s(&dir.path().join("x.csv"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("trials=50") && stdout(&o).contains("bound=1.0000"));
    // flags win over the file
    let o = tgdp(&["--config", s(&cfg), "simulate", "--protocol", "lp", "--eps", "1", "--trials", "20", "--out", s(&dir.path().join("y.csv"))]);
    assert!(stdout(&o).contains("trials=20") && stdout(&o).contains("bound=4.0000"));
    let bad = write(dir.path(), "bad.toml", "epsilon = 1\n");
    assert_eq!(tgdp(&["--config", s(&bad), "lp", "--graph", s(&g)]).status.code(), Some(2));
}

#[test]
fn bounds_reports() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "fig1.txt", FIG1);
    let v: serde_json::Value = serde_json::from_slice(&tgdp(&["bounds", "--graph", s(&g), "--exact"]).stdout).unwrap();
    assert!((v["OPT_LP"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!((v["rho"].as_u64(), v["gamma"].as_u64()), (Some(2), Some(2)));
    let v: serde_json::Value = serde_json::from_slice(&tgdp(&["bounds", "--graph", s(&rook4(dir.path())), "--exact"]).stdout).unwrap();
    assert!((v["OPT_LP"].as_f64().unwrap() - 16.0 / 7.0).abs() < 1e-6);
    assert_eq!((v["rho"].as_u64(), v["gamma"].as_u64()), (Some(1), Some(4)));
    let o = tgdp(&["bounds", "--graph", s(&g), "--round", "--alpha", "0.5", "--reps", "200", "--seed", "1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rounding"]["all_valid"], serde_json::Value::Bool(true));
    assert_eq!(tgdp(&["bounds", "--graph", s(&g), "--round", "--alpha", "0.5"]).status.code(), Some(2));
    let o = tgdp(&["bounds", "--graph", s(&rook4(dir.path())), "--exact", "--packing-cap", "8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));
}

#[test]
fn audit_exit_codes() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "fig1.txt", FIG1);
    let o = tgdp(&["audit", "--graph", s(&g), "--eps", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let good = write(dir.path(), "good.json", r#"{"y":[0,0,1,0,1],"objective":2,"robust_t":null,"tol":1e-9}"#);
    assert_eq!(tgdp(&["audit", "--graph", s(&g), "--cover", s(&good)]).status.code(), Some(0));
    let zeroed = write(dir.path(), "zeroed.json", r#"{"y":[0,0,0,0,1],"objective":1,"robust_t":null,"tol":1e-9}"#);
    let o = tgdp(&["audit", "--graph", s(&g), "--cover", s(&zeroed), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("vertex,excluded,mass,ratio,eps,pass\n"));
    let o = tgdp(&["audit", "--graph", s(&g), "--cover", s(&good), "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = tgdp(&["audit", "--mc", "--graph", s(&g), "--eps", "1", "--trials", "20000", "--vertex", "0", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["method"], "monte-carlo-view");
    assert!(v["caveat"].is_string());
    let o = tgdp(&["audit", "--mc", "--graph", s(&g), "--trials", "10", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_tables() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "fig1.txt", FIG1);
    let empty = write(dir.path(), "empty.json", "[]");
    let o = tgdp(&["report", "--table", "tgdp", "--datasets", s(&empty)]);
    assert_eq!(stdout(&o), "dataset,n,opt_lp,ratio,packing\n");
    let reg = write(
        dir.path(),
        "reg.json",
        r#"[{"name":"fig1","path":"fig1.txt","expected_n":5},{"name":"gone","path":"missing.txt"}]"#,
    );
    let o = tgdp(&["report", "--table", "tgdp", "--datasets", s(&reg)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "dataset,n,opt_lp,ratio,packing\nfig1,5,2.0000,0.4000,2\ngone,,,,\n");
    let o = tgdp(&["report", "--table", "gaps", "--datasets", s(&reg), "--exact"]);
    assert!(stdout(&o).contains("fig1,5,2.0000,2,true,1.0000"), "{}", stdout(&o));
    let o = tgdp(&["report", "--table", "rtgdp", "--graph", s(&dir.path().join("fig1.txt")), "--alphas", "0,0.5,1"]);
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines[0], "alpha,opt_lp,ratio,mse_bound");
    assert!(lines[1].starts_with("0,2.0000,0.4000"));
    assert!(lines[3].starts_with("1,5.0000,1.0000"));
}

#[test]
fn data_dir_overrides_registry_root() {
    let dir = TempDir::new().unwrap();
    let data = TempDir::new().unwrap();
    write(data.path(), "g.txt", FIG1);
    let reg = write(dir.path(), "reg.json", r#"{"datasets":[{"name":"g","path":"g.txt"}]}"#);
    let o = Command::new(env!("CARGO_BIN_EXE_tgdp"))
        .args(["report", "--table", "tgdp", "--datasets", s(&reg)])
        .env("TGDP_DATA_DIR", data.path())
        .output()
        .unwrap();
    assert!(stdout(&o).contains("g,5,2.0000"), "{}", stdout(&o));
}
