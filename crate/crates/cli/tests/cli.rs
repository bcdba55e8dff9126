use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn sstac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sstac"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("an error line on stderr");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr line {line:?} is not JSON: {e}"))
}

fn run_dirs(root: &Path) -> Vec<PathBuf> {
    let mut dirs: Vec<_> = fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    dirs
}

const CHAIN2: &str = r#"{"mdp": "chain2", "algorithm": "linear_exact", "K": 12, "beta": 1.0, "seeds": [3]}"#;

#[test]
fn run_writes_trace_manifest_and_k_plus_one_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), CHAIN2);
    let out = tmp.path().join("runs");
    let res = sstac(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let dir = out.join("linear_exact-chain2-K12-seed3");
    let trace = fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 13);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["run_id"], "linear_exact-chain2-K12-seed3");
    assert_eq!(manifest["summary"]["rows"], 13);
}

#[test]
fn seed_override_runs_only_that_seed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"mdp": "chain2", "algorithm": "linear_exact", "K": 4, "beta": 1.0, "seeds": [0, 1, 2]}"#,
    );
    let out = tmp.path().join("runs");
    let res = sstac(&["run", "--config", cfg.to_str().unwrap(), "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let dirs = run_dirs(&out);
    assert_eq!(dirs.len(), 1);
    assert!(dirs[0].ends_with("linear_exact-chain2-K4-seed7"));
}

#[test]
fn malformed_json_exits_2_with_byte_offset() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "{\"mdp\": \"chain2\",\n \"K\": 12,, }");
    let res = sstac(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err = stderr_json(&res);
    assert_eq!(err["error"], "config");
    assert_eq!(err["exit_code"], 2);
    assert!(err["message"].as_str().unwrap().contains("byte"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"mdp": "chain2", "algorithm": "linear_exact", "K": 4, "beta": 1.0, "betta": 2.0}"#,
    );
    let res = sstac(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr_json(&res)["message"].as_str().unwrap().contains("betta"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let res = sstac(&["run", "--config", "/nonexistent/sstac/config.json"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn singular_sampled_gram_exits_3_with_conditioning_class() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"mdp": "chain2", "algorithm": "linear_sampled", "K": 4, "N": 1, "beta": 1.0}"#,
    );
    let out = tmp.path().join("runs");
    let res = sstac(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    let err = stderr_json(&res);
    assert_eq!(err["error"], "conditioning");
    assert_eq!(err["exit_code"], 3);
}

fn sweep(cfg: &Path, out: &Path) -> Output {
    sstac(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--param",
        "K",
        "--values",
        "4,8,16",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn sweep_writes_one_dir_per_job_and_a_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"mdp": "chain2", "algorithm": "linear_exact", "K": 1, "beta": 1.0, "seeds": [0, 1]}"#,
    );
    let out = tmp.path().join("a");
    let res = sweep(&cfg, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(run_dirs(&out).len(), 6);

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), "param_value,seed,final_gap,cum_regret,regret_over_sqrtK");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let k = r[0];
        assert!((r[4] - r[3] / k.sqrt()).abs() <= 1e-12 * r[3].abs().max(1.0), "{r:?}");
        let trace = fs::read_to_string(out.join(format!("linear_exact-chain2-K{k}-seed{}", r[1])).join("trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), 1 + k as usize + 1);
    }

    let again = tmp.path().join("b");
    assert!(sweep(&cfg, &again).status.success());
    assert_eq!(summary, fs::read_to_string(again.join("summary.csv")).unwrap());
    for (x, y) in run_dirs(&out).iter().zip(run_dirs(&again)) {
        assert_eq!(
            fs::read(x.join("trace.csv")).unwrap(),
            fs::read(y.join("trace.csv")).unwrap(),
            "{}",
            x.display()
        );
    }
}

#[test]
fn sweep_over_beta_suffixes_run_ids() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), CHAIN2);
    let out = tmp.path().join("s");
    let res = sstac(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--param",
        "beta",
        "--values",
        "0.5,2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let names: Vec<String> = run_dirs(&out)
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 2);
    assert!(names.iter().all(|n| n.contains("-beta")), "{names:?}");
}

#[test]
fn sweep_rejects_unknown_parameter() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), CHAIN2);
    let res = sstac(&["sweep", "--config", cfg.to_str().unwrap(), "--param", "gamma", "--values", "1"]);
    assert_eq!(res.status.code(), Some(2));
}

fn fresh_run(tmp: &TempDir) -> PathBuf {
    let cfg = write_config(tmp.path(), CHAIN2);
    let out = tmp.path().join("runs");
    assert!(sstac(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status
        .success());
    out.join("linear_exact-chain2-K12-seed3")
}

#[test]
fn diag_passes_on_a_fresh_trace_and_writes_four_series() {
    let tmp = TempDir::new().unwrap();
    let dir = fresh_run(&tmp);
    let res = sstac(&["diag", "--trace", dir.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(res.status.success(), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    assert!(stdout.contains("PASS exact_critic"));

    let csv = fs::read_to_string(dir.join("diag.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "series,iter,value");
    let mut series: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(series.len(), 4 * 13);
    series.dedup();
    assert_eq!(series, ["gap", "e_norm", "eps_c", "theta_kl"]);
}

#[test]
fn diag_names_the_row_with_a_corrupted_cum_regret() {
    let tmp = TempDir::new().unwrap();
    let dir = fresh_run(&tmp);
    let path = dir.join("trace.csv");
    let text = fs::read_to_string(&path).unwrap();
    let corrupted: Vec<String> = text
        .lines()
        .map(|l| {
            if l.starts_with("5,") {
                let mut f: Vec<String> = l.split(',').map(String::from).collect();
                let v: f64 = f[2].parse().unwrap();
                f[2] = (v + 0.01).to_string();
                f.join(",")
            } else {
                l.to_string()
            }
        })
        .collect();
    fs::write(&path, corrupted.join("\n") + "\n").unwrap();

    let res = sstac(&["diag", "--trace", dir.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&res.stdout);
    let line = stdout.lines().find(|l| l.starts_with("FAIL regret_consistency")).expect("regret check fails");
    assert!(line.contains("k=5"), "{line}");
}

#[test]
fn diag_on_missing_trace_exits_2() {
    let tmp = TempDir::new().unwrap();
    let res = sstac(&["diag", "--trace", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(stderr_json(&res)["error"], "trace");
}

#[test]
fn diag_on_truncated_trace_exits_2() {
    let tmp = TempDir::new().unwrap();
    let dir = fresh_run(&tmp);
    let path = dir.join("trace.csv");
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, &text[..text.len() / 2]).unwrap();
    let res = sstac(&["diag", "--trace", dir.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn manifest_config_reruns_to_the_same_trace() {
    let tmp = TempDir::new().unwrap();
    let dir = fresh_run(&tmp);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let cfg = tmp.path().join("from_manifest.json");
    fs::write(&cfg, serde_json::to_string(&manifest["config"]).unwrap()).unwrap();
    let out = tmp.path().join("rerun");
    assert!(sstac(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status
        .success());
    assert_eq!(
        fs::read(dir.join("trace.csv")).unwrap(),
        fs::read(out.join("linear_exact-chain2-K12-seed3").join("trace.csv")).unwrap()
    );
}

#[test]
fn golden_chain2_trace_is_reproduced_byte_for_byte() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let tmp = TempDir::new().unwrap();
    let res = sstac(&[
        "run",
        "--config",
        golden.join("chain2_linear_exact.json").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let fresh = fs::read(tmp.path().join("linear_exact-chain2-K32-seed0/trace.csv")).unwrap();
    assert!(fresh == fs::read(golden.join("chain2_linear_exact.trace.csv")).unwrap());
}
