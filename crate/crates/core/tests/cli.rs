//! End-to-end tests of the command-line front end, driving the built binary.

use std::path::Path;
use std::process::Command;

fn slres() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slres"))
}

fn tiny_conf(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("tiny.conf");
    std::fs::write(
        &path,
        "n_real = 2\nn_virtual = 4\ntau = 68\nbuffer_len = 4\ntrain_len = 24\ntest_len = 12\n\
         lambda = 0.02\nphi = 0.8\nlambda_min = 0.0\nlambda_max = 0.04\nlambda_count = 2\n\
         phi_min = 0\nphi_max = 3.0\nphi_count = 2\nseed = 5\nprobe = false\n",
    )
    .unwrap();
    path
}

#[test]
fn missing_config_file_exits_2() {
    let out = slres()
        .args(["simulate", "--config", "/nonexistent/run.conf"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = slres()
        .args(["scan", "--set", "task=nosuchtask"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("nosuchtask"), "stderr: {msg}");
}

#[test]
fn unknown_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "n_reall = 2\n").unwrap();
    let out = slres()
        .args(["simulate", "--config", conf.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_reall"));
}

#[test]
fn santa_fe_without_data_exits_3_with_hint() {
    let dir = tempfile::tempdir().unwrap();
    let conf = tiny_conf(dir.path());
    let out = slres()
        .args([
            "scan",
            "--config",
            conf.to_str().unwrap(),
            "--task",
            "santafe",
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .env_remove("SLRES_SANTA_FE")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("SLRES_SANTA_FE"), "stderr: {msg}");
}

#[test]
fn simulate_writes_trajectory_states_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let conf = tiny_conf(dir.path());
    let out_dir = dir.path().join("sim");
    let out = slres()
        .args([
            "simulate",
            "--config",
            conf.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--set",
            "stride=400",
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let trajectory = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let mut lines = trajectory.lines();
    assert_eq!(lines.next().unwrap(), "t,re_z0,im_z0,re_z1,im_z1");
    assert!(lines.count() > 10);

    let states = std::fs::read_to_string(out_dir.join("states.csv")).unwrap();
    let header = states.lines().next().unwrap();
    assert!(header.starts_with("window,node0_slot0"));
    assert!(header.ends_with(",bias"));
    assert_eq!(states.lines().count() - 1, 40); // one row per window

    // Sidecar echoes resolved values, including defaults we never set.
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("metadata.json")).unwrap())
            .unwrap();
    assert_eq!(meta["resolved"]["n_real"], "2");
    assert_eq!(meta["resolved"]["kappa"], "0.04");
    assert_eq!(meta["resolved"]["dt"], "0.01");
    assert_eq!(meta["command"], "simulate");
    assert!(meta["version"].as_str().unwrap().contains('.'));

    // run.conf is itself a valid config that reproduces the run.
    let rerun_dir = dir.path().join("sim2");
    let out = slres()
        .args([
            "simulate",
            "--config",
            out_dir.join("run.conf").to_str().unwrap(),
            "--out",
            rerun_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let rerun_states = std::fs::read_to_string(rerun_dir.join("states.csv")).unwrap();
    assert_eq!(states, rerun_states);
}

#[test]
fn scan_csv_has_spec_columns_and_feeds_aggregate_and_covariance() {
    let dir = tempfile::tempdir().unwrap();
    let conf = tiny_conf(dir.path());
    let scan_dir = dir.path().join("scan");
    let out = slres()
        .args([
            "scan",
            "--config",
            conf.to_str().unwrap(),
            "--out",
            scan_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(scan_dir.join("scan.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "lambda,phi,nrmse_test,nrmse_train,sync_label,extrema_levels,mask_seed,task_seed,status"
    );
    assert_eq!(csv.lines().count() - 1, 4);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",ok")));

    let agg_dir = dir.path().join("agg");
    let out = slres()
        .args([
            "aggregate",
            scan_dir.join("scan.csv").to_str().unwrap(),
            "--cutoff",
            "2.0",
            "--out",
            agg_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let agg = std::fs::read_to_string(agg_dir.join("aggregate.csv")).unwrap();
    assert!(agg.starts_with("file,best,mean,std,n_used,n_total"));

    let cov_dir = dir.path().join("cov");
    let out = slres()
        .args([
            "covariance",
            scan_dir.join("scan.csv").to_str().unwrap(),
            scan_dir.join("scan.csv").to_str().unwrap(),
            "--cutoff",
            "2.0",
            "--out",
            cov_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("filtered"), "stdout: {stdout}");
    // Self-correlation is exactly 1.
    let cov = std::fs::read_to_string(cov_dir.join("covariance.csv")).unwrap();
    let row = cov.lines().nth(1).unwrap();
    assert!(row.starts_with('1'), "row: {row}");
}

#[test]
fn dynamics_grid_emits_labels() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("dyn");
    // Deep below threshold on a fast configuration: everything is off.
    let out = slres()
        .args([
            "dynamics",
            "--set",
            "n_real=2",
            "--set",
            "n_virtual=2",
            "--set",
            "tau=34",
            "--set",
            "lambda_min=-0.3",
            "--set",
            "lambda_max=-0.25",
            "--set",
            "lambda_count=2",
            "--set",
            "phi_count=2",
            "--set",
            "phi_max=3.0",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(out_dir.join("dynamics.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "lambda,phi,sync_label,extrema_levels,status"
    );
    for line in csv.lines().skip(1) {
        assert!(line.contains(",off,0,ok"), "line: {line}");
    }
}

#[test]
fn esn_subcommand_reports_nrmse() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("esn");
    let out = slres()
        .args([
            "esn",
            "--set",
            "esn_nodes=64",
            "--set",
            "buffer_len=50",
            "--set",
            "train_len=500",
            "--set",
            "test_len=200",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("test NRMSE"), "stdout: {stdout}");
    let csv = std::fs::read_to_string(out_dir.join("esn.csv")).unwrap();
    assert!(csv.starts_with("n_nodes,spectral_radius"));
}

#[test]
fn preset_with_reduction_resolves() {
    // fig4 at 16x reduction: 2-oscillator scan at 2x2 with shortened lengths.
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("preset");
    let out = slres()
        .args([
            "scan",
            "--preset",
            "fig4",
            "--reduced",
            "16",
            "--no-probe",
            "--set",
            "n_virtual=4", // keep the desk-scale grid cheap
            "--set",
            "tau=68",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("metadata.json")).unwrap())
            .unwrap();
    assert_eq!(meta["resolved"]["n_real"], "2");
    assert_eq!(meta["resolved"]["lambda_count"], "2");
    assert_eq!(meta["resolved"]["train_len"], "93"); // 1500 / 16
    let csv = std::fs::read_to_string(out_dir.join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count() - 1, 4);

    let out = slres()
        .args(["scan", "--preset", "fig99"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
