//! End-to-end checks against the compiled binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn expcli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expcli"))
        .args(args)
        .output()
        .expect("spawn expcli")
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        "policy = [\"default_coap\", \"cocoa_plus\"]\n\
         topology = \"chain\"\n\
         loads_kbps = [1.0, 5.0]\n\
         seeds = [1, 2]\n\
         measurement_s = 120.0\n",
    )
    .expect("write config");
    path
}

#[test]
fn run_writes_sweep_and_figures() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(dir.path());
    let out_dir = dir.path().join("results");
    let out = expcli(&["run", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let sweep = fs::read_to_string(out_dir.join("sweep.csv")).expect("sweep.csv");
    let mut lines = sweep.lines();
    assert_eq!(
        lines.next().unwrap(),
        "policy,topology,ldr,offered_kbps,seed,pdr,carried_kbps,mean_delay_s,p95_delay_s,mac_overflows,retransmissions,failed_exchanges"
    );
    // 2 policies x 2 loads x 2 seeds, plus a mean row per group.
    assert_eq!(sweep.lines().count(), 1 + 8 + 4);
    assert_eq!(sweep.matches(",mean,").count(), 4);

    // Chain at full link quality belongs to exactly one figure.
    let fig = fs::read_to_string(out_dir.join("fig11_chain_ldr100.csv")).expect("figure");
    assert!(fig.starts_with("offered_kbps,default_coap_carried_kbps,cocoa_carried_kbps,cocoa_plus_carried_kbps"));
    // The cocoa series was not swept: its column stays empty.
    assert!(fig.lines().nth(1).unwrap().split(',').nth(2).unwrap().is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cocoa"));
}

#[test]
fn rerun_is_byte_identical_across_processes() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out_dir, parallel) in [(&out_a, "0"), (&out_b, "2")] {
        let out = expcli(&[
            "run",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--parallel",
            parallel,
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(out_a.join("sweep.csv")).expect("a");
    let b = fs::read(out_b.join("sweep.csv")).expect("b");
    assert_eq!(a, b);
}

#[test]
fn figure_subcommand_renders_one_file() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out_dir = dir.path().join("fig");
    let config = dir.path().join("fast.toml");
    fs::write(&config, "seeds = [1]\nloads_kbps = [1.0, 2.0]\nmeasurement_s = 60.0\n").unwrap();
    let out = expcli(&[
        "figure",
        "fig11",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let fig = fs::read_to_string(out_dir.join("fig11_chain_ldr100.csv")).expect("figure");
    assert_eq!(fig.lines().count(), 3);
    for line in fig.lines().skip(1) {
        assert_eq!(line.split(',').filter(|c| !c.is_empty()).count(), 4);
    }
}

#[test]
fn validate_reports_cell_count() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(dir.path());
    let out = expcli(&["validate", config.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("8 cells"), "stdout: {stdout}");
}

#[test]
fn bad_config_is_rejected_with_context() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("bad.toml");
    fs::write(&path, "loads_kbps = [50.0]\n").unwrap();
    let out = expcli(&["validate", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("loads_kbps"), "stderr: {stderr}");

    let unknown = dir.path().join("unknown.toml");
    fs::write(&unknown, "polcy = [\"cocoa\"]\n").unwrap();
    let out = expcli(&["validate", unknown.to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn oracle_subcommand_reports_agreement() {
    let out = expcli(&["oracle", "--traces", "50"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max deviation"), "stdout: {stdout}");
}
