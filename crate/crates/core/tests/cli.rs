use std::path::Path;
use std::process::{Command, Output};

fn beamtrack(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamtrack"))
        .args(args)
        .env("BEAMTRACK_OUT", out)
        .output()
        .expect("binary runs")
}

#[test]
fn run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = beamtrack(&["run", "--preset", "fig5b", "--trials", "40", "--seed", "7"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("fig5b.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("preset,policy,slot,mean_reward,acc_reward,ci95,n_trials"));
    assert_eq!(lines.count(), 40);
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig5b.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["configs"][0]["seed"], 7);
    assert_eq!(manifest["configs"][0]["trials"], 40);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = beamtrack(&["run", "--preset", "fig5a", "--trials", "30", "--seed", "3"], dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read(a.path().join("fig5a.csv")).unwrap(),
        std::fs::read(b.path().join("fig5a.csv")).unwrap()
    );
}

#[test]
fn compare_emits_one_block_per_policy() {
    let dir = tempfile::tempdir().unwrap();
    let out = beamtrack(
        &["compare", "--preset", "fig6", "--policies", "greedy-full,greedy-reduced,heuristic", "--trials", "5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 30);
}

#[test]
fn trace_has_one_row_per_slot() {
    let dir = tempfile::tempdir().unwrap();
    let out = beamtrack(&["trace", "--preset", "fig6", "--policies", "heuristic", "--seed", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("fig6_heuristic_trace.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 30);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[2].split(';').count(), 6);
        assert_eq!(fields[3].len(), 6);
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "preset = \"fig6\"\nname = \"slow\"\ntrials = 4\nslots = 5\npolicies = \"greedy-reduced\"\n[transition]\ndecay = 0.2\n").unwrap();
    let out = beamtrack(&["run", "--config", cfg.to_str().unwrap(), "--trials", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("slow.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.lines().nth(1).unwrap().ends_with(",3"));
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let out = beamtrack(&["run", "--config", missing.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.toml"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "m_p = 12\n").unwrap();
    let out = beamtrack(&["run", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("m_p"));

    std::fs::write(&bad, "model.antennas = 4\n").unwrap();
    let out = beamtrack(&["run", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.antennas"));

    for args in [
        vec!["compare", "--preset", "fig6", "--policies", ""],
        vec!["compare", "--preset", "fig9"],
        vec!["run", "--preset", "fig5a", "--policies", "oracle"],
        vec!["run"],
        vec!["launch"],
    ] {
        assert_eq!(beamtrack(&args, dir.path()).status.code(), Some(2), "{args:?}");
    }

    // output path that cannot be created is a runtime failure
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = beamtrack(&["run", "--preset", "fig5a", "--trials", "2", "--out", blocker.join("sub").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
}
