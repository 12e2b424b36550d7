use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn difftomo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_difftomo"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn experiment_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let out = difftomo(&["experiment", "--trials", "2", "--seed", "5", "--outputs", sub], tmp.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["summary.json", "trial_0000_scatter.csv", "trial_0001_scatter.csv"] {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let csv = fs::read_to_string(tmp.path().join("a/trial_0000_scatter.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["seed"], 5);
    assert!(json["mean_error_rate"].is_number());
}

#[test]
fn config_file_and_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.toml"),
        "trials = 1\nseed = 3\n[graph]\nn_agents = 40\n[policy]\nname = \"metropolis\"\n",
    )
    .unwrap();
    let out = difftomo(&["experiment", "--config", "c.toml", "--xi", "0.5", "--outputs", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("o/summary.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["xi"], 0.5);
    assert_eq!(json["config"]["graph"]["n_agents"], 40);
    assert_eq!(json["config"]["policy"]["name"], "metropolis");
    assert_eq!(json["trials"][0]["k"], 20);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(difftomo(&["experiment", "--mu", "1.5"], tmp.path()).status.code(), Some(1));
    fs::write(tmp.path().join("bad.toml"), "nonsense = true").unwrap();
    assert_eq!(difftomo(&["experiment", "--config", "bad.toml"], tmp.path()).status.code(), Some(1));
    let numerical = difftomo(
        &["experiment", "--trials", "1", "--mode", "empirical", "--samples", "3", "--burn-in", "0"],
        tmp.path(),
    );
    assert_eq!(numerical.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&numerical.stderr).contains("stage `estimate`"));
}

#[test]
fn generate_simulate_tomography_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = |args: &[&str]| {
        let out = difftomo(args, tmp.path());
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    ok(&["generate", "--n-agents", "30", "--out", "g/edges.csv"]);
    let edges = fs::read_to_string(tmp.path().join("g/edges.csv")).unwrap();
    assert_eq!(edges.lines().nth(1), Some("i,j"));

    ok(&["simulate", "--n-agents", "10", "--n-samples", "4", "--out", "trace.csv"]);
    let trace = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2 + 40);

    ok(&["tomography", "--out-dir", "t"]);
    for f in ["scatter.csv", "a_hat_obs.csv", "trial.json"] {
        assert!(tmp.path().join("t").join(f).exists(), "{f}");
    }

    let table = ok(&["sweep", "--axis", "mu", "--values", "0.1,0.5", "--trials", "2", "--outputs", "s"]);
    assert_eq!(
        table.lines().next(),
        Some("axis_value,mean_error_rate,mean_scaled_error,f0_at_eps,f1bar_at_tau,ratio_prop1")
    );
    assert_eq!(table.lines().count(), 3);
    assert!(tmp.path().join("s/sweep.csv").exists());
}

#[test]
fn verify_quick_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = difftomo(&["verify", "--quick", "--out", "v.json"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("v.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 6);
    for c in checks {
        for key in ["name", "configuration", "observed", "bound", "pass"] {
            assert!(c.get(key).is_some(), "{key}");
        }
    }
}
