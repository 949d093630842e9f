//! Command-line front end: `simulate`, `scan`, `dynamics`, `esn`,
//! `aggregate`, `covariance`.
//!
//! Configuration layering, lowest to highest precedence: built-in defaults,
//! `--preset`, `--config` file, `--set key=value` flags. Every run writes its
//! fully-resolved configuration (`run.conf`, reusable as `--config`) and a
//! JSON metadata sidecar next to the data files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{self, ConfigMap, RunManifest};
use crate::dde_engine::integrate;
use crate::error::{Error, Result};
use crate::esn_baseline::{esn_build, esn_run};
use crate::experiment_harness::{
    aggregate, scan2d, scan_dynamics, task_covariance, ScanResult, TaskKind,
};
use crate::input_pipeline::{generate_mask, InputSchedule, ScheduledDrive};
use crate::readout::{self, Harvester};
use crate::tasks::{generate_narma_task, load_santa_fe_with_split};

#[derive(Parser, Debug)]
#[command(
    name = "slres",
    version,
    about = "Reservoir computing with delay-coupled Stuart-Landau oscillator networks"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonOpts {
    /// Key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Paper parameter-set shortcut: fig4..fig8.
    #[arg(long)]
    preset: Option<String>,

    /// Divide grid resolution and run lengths by N for desk-scale runs.
    #[arg(long, value_name = "N")]
    reduced: Option<usize>,

    /// Override a single configuration field (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Worker threads (0 = logical cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,

    /// Output directory.
    #[arg(long, default_value = "slres-out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one configuration and dump the trajectory and harvested states.
    Simulate(CommonOpts),
    /// Run a 2-D (lambda, phi) scan and write the grid CSV plus metadata.
    Scan {
        #[command(flatten)]
        common: CommonOpts,
        /// Set n_real (n_virtual auto-adjusts to 256/n_real).
        #[arg(long)]
        nr: Option<usize>,
        /// Topology: ring, jumps, bidirectional.
        #[arg(long)]
        topology: Option<String>,
        /// Task: narma10, santafe.
        #[arg(long)]
        task: Option<String>,
        /// Hold the input sequence fixed across cells.
        #[arg(long)]
        fixed_task: bool,
        /// Skip the per-cell dynamics probe.
        #[arg(long)]
        no_probe: bool,
        /// Exit 0 even when individual cells failed.
        #[arg(long)]
        allow_failures: bool,
    },
    /// Classify the input-free dynamics over a (lambda, phi) grid.
    Dynamics(CommonOpts),
    /// Train and test the echo state network baseline on NARMA10.
    Esn(CommonOpts),
    /// Best/mean/std summary of one or more scan CSVs.
    Aggregate {
        /// Scan CSV files.
        files: Vec<PathBuf>,
        /// Exclusion cutoff for mean/std.
        #[arg(long, default_value_t = 0.95)]
        cutoff: f64,
        #[arg(long, default_value = "slres-out")]
        out: PathBuf,
    },
    /// Cross-task correlation between two scans on the same grid.
    Covariance {
        grid_a: PathBuf,
        grid_b: PathBuf,
        /// Keep only cells with NRMSE <= cutoff in both scans.
        #[arg(long, default_value_t = 0.9)]
        cutoff: f64,
        #[arg(long, default_value = "slres-out")]
        out: PathBuf,
    },
}

/// Paper parameter-set shortcuts. fig4 is the two-oscillator scan; fig5/fig6
/// the unidirectional-ring NARMA/Santa Fe scans; fig7 the ring with jumps;
/// fig8 the bidirectional ring with self-feedback.
fn preset_pairs(name: &str) -> Result<Vec<(&'static str, String)>> {
    let two_pi = std::f64::consts::TAU.to_string();
    let scan_axes = |count: usize| {
        vec![
            ("lambda_min", "-0.02".to_string()),
            ("lambda_max", "0.05".to_string()),
            ("lambda_count", count.to_string()),
            ("phi_min", "0".to_string()),
            ("phi_max", two_pi.clone()),
            ("phi_count", count.to_string()),
            ("kappa", "0.04".to_string()),
        ]
    };
    let network_lengths = vec![
        ("buffer_len", "1000".to_string()),
        ("train_len", "5000".to_string()),
        ("test_len", "5000".to_string()),
    ];
    let mut pairs: Vec<(&'static str, String)> = match name {
        "fig4" => {
            let mut p = scan_axes(32);
            p.extend([
                ("topology", "ring".to_string()),
                ("n_real", "2".to_string()),
                ("task", "narma10".to_string()),
                ("buffer_len", "150".to_string()),
                ("train_len", "1500".to_string()),
                ("test_len", "500".to_string()),
            ]);
            p
        }
        "fig5" => {
            let mut p = scan_axes(32);
            p.extend([
                ("topology", "ring".to_string()),
                ("n_real", "8".to_string()),
                ("task", "narma10".to_string()),
            ]);
            p.extend(network_lengths);
            p
        }
        "fig6" => {
            let mut p = scan_axes(32);
            p.extend([
                ("topology", "ring".to_string()),
                ("n_real", "8".to_string()),
                ("task", "santafe".to_string()),
                ("buffer_len", "100".to_string()),
                ("train_len", "2900".to_string()),
                ("test_len", "2900".to_string()),
            ]);
            p
        }
        "fig7" => {
            let mut p = scan_axes(32);
            p.extend([
                ("topology", "jumps".to_string()),
                ("n_real", "8".to_string()),
                ("task", "narma10".to_string()),
            ]);
            p.extend(network_lengths);
            p
        }
        "fig8" => {
            let mut p = scan_axes(32);
            p.extend([
                ("topology", "bidirectional".to_string()),
                ("n_real", "8".to_string()),
                ("task", "narma10".to_string()),
            ]);
            p.extend(network_lengths);
            p
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}' (expected fig4..fig8)"
            )))
        }
    };
    pairs.sort_by_key(|(k, _)| *k);
    Ok(pairs)
}

/// Assemble the configuration layers for a command.
fn build_config(opts: &CommonOpts, extra_overrides: &[(&str, String)]) -> Result<ConfigMap> {
    let mut cfg = match &opts.config {
        Some(path) => ConfigMap::from_file(path)?,
        None => ConfigMap::empty(),
    };
    if let Some(preset) = &opts.preset {
        // Preset supplies values the file did not set.
        let file_cfg = cfg.clone();
        let mut base = ConfigMap::empty();
        for (k, v) in preset_pairs(preset)? {
            base.set_override(k, &v);
        }
        cfg = merge(base, file_cfg);
    }
    for kv in &opts.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| {
            Error::Config(format!("--set expects KEY=VALUE, got '{kv}'"))
        })?;
        cfg.set_override(k, v);
    }
    for (k, v) in extra_overrides {
        cfg.set_override(k, v);
    }
    if let Some(n) = opts.reduced {
        apply_reduction(&mut cfg, n)?;
    }
    Ok(cfg)
}

fn merge(mut base: ConfigMap, upper: ConfigMap) -> ConfigMap {
    for (k, v) in upper.raw_pairs() {
        base.set_override(&k, &v);
    }
    base
}

/// Divide grid resolution and run lengths by `n` (floors at 1, keeping at
/// least 2 points per axis so scans stay two-dimensional).
fn apply_reduction(cfg: &mut ConfigMap, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("--reduced must be >= 1".into()));
    }
    let mut probe_cfg = cfg.clone();
    let spec = config::resolve_scan(&mut probe_cfg)?;
    let shrink_axis = |c: usize| (c / n).max(2).min(c.max(1));
    let shrink_len = |c: usize| (c / n).max(1).min(c.max(1));
    cfg.set_override("lambda_count", &shrink_axis(spec.lambda_axis.count).to_string());
    cfg.set_override("phi_count", &shrink_axis(spec.phi_axis.count).to_string());
    cfg.set_override("buffer_len", &shrink_len(spec.base.split.buffer).to_string());
    cfg.set_override("train_len", &shrink_len(spec.base.split.train).to_string());
    cfg.set_override("test_len", &shrink_len(spec.base.split.test).to_string());
    Ok(())
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn write_manifest(
    dir: &Path,
    manifest: &RunManifest,
    extra: serde_json::Value,
) -> Result<()> {
    write_file(dir, "run.conf", &manifest.conf_string())?;
    write_file(dir, "metadata.json", &manifest.metadata_json(extra))?;
    Ok(())
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if jobs == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
            .install(f)
    }
}

fn load_task_for_point(
    spec_task: TaskKind,
    point: &crate::experiment_harness::PointConfig,
    santa_fe_path: Option<&Path>,
) -> Result<crate::tasks::TaskData> {
    match spec_task {
        TaskKind::Narma10 => generate_narma_task(point.split, point.task_seed),
        TaskKind::SantaFe => {
            let path = santa_fe_path.ok_or_else(|| {
                Error::MissingData(format!(
                    "Santa Fe task requested but no data path configured; set santa_fe_path \
                     or ${}",
                    config::SANTA_FE_ENV
                ))
            })?;
            load_santa_fe_with_split(path, point.split)
        }
    }
}

fn cmd_simulate(opts: &CommonOpts) -> Result<i32> {
    let started = Instant::now();
    let mut cfg = build_config(opts, &[])?;
    let spec = config::resolve_scan(&mut cfg)?;
    let stride = cfg.get_usize("stride", 100)?.max(1);
    let jobs = cfg.get_usize("jobs", opts.jobs)?;
    let _ = jobs; // single integration; recorded for the echo only
    cfg.finish()?;

    let point = spec.base.clone();
    let task = load_task_for_point(spec.task, &point, spec.santa_fe_path.as_deref())?;
    let timing = point.timing()?;
    let iconfig = point.integrator();
    let params = point.params();
    let adjacency = point.topology.build(point.n_real)?;
    let mask = generate_mask(point.n_real, point.n_virtual, point.mask_seed)?;
    let schedule = InputSchedule::new(task.inputs.clone(), point.eta, point.lambda)?;
    let mut drive = ScheduledDrive::new(schedule, mask.clone(), &timing, &iconfig)?;

    let mut harvester = Harvester::new(&timing, &iconfig, task.split.total(), point.observable)?;
    let t_end = harvester.t_end(&iconfig);

    let mut trajectory = String::from("t");
    for k in 0..point.n_real {
        trajectory.push_str(&format!(",re_z{k},im_z{k}"));
    }
    trajectory.push('\n');
    integrate(&iconfig, &params, &adjacency, &mut drive, t_end, |step, t, z| {
        harvester.observe(step, t, z);
        if step % stride as u64 == 0 {
            trajectory.push_str(&t.to_string());
            for zk in z {
                trajectory.push_str(&format!(",{},{}", zk.re, zk.im));
            }
            trajectory.push('\n');
        }
    })?;
    let states = harvester.finish()?;

    let mut states_csv = String::from("window");
    for k in 0..point.n_real {
        for s in 0..point.n_virtual {
            match point.observable {
                crate::readout::ReadoutObservable::Amplitude => {
                    states_csv.push_str(&format!(",node{k}_slot{s}"))
                }
                crate::readout::ReadoutObservable::ReIm => {
                    states_csv.push_str(&format!(",node{k}_slot{s}_re,node{k}_slot{s}_im"))
                }
            }
        }
    }
    states_csv.push_str(",bias\n");
    for r in 0..states.rows() {
        states_csv.push_str(&r.to_string());
        for v in states.row(r) {
            states_csv.push_str(&format!(",{v}"));
        }
        states_csv.push('\n');
    }

    write_file(&opts.out, "trajectory.csv", &trajectory)?;
    write_file(&opts.out, "states.csv", &states_csv)?;
    write_file(&opts.out, "mask.csv", &mask.to_csv())?;
    let manifest = RunManifest::new("simulate", &cfg);
    write_manifest(
        &opts.out,
        &manifest,
        serde_json::json!({
            "wall_time_s": started.elapsed().as_secs_f64(),
            "t_end": t_end,
            "windows": task.split.total(),
        }),
    )?;
    println!(
        "simulate: {} windows, t_end = {t_end}, wrote {}",
        task.split.total(),
        opts.out.display()
    );
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan(
    common: &CommonOpts,
    nr: Option<usize>,
    topology: Option<&str>,
    task: Option<&str>,
    fixed_task: bool,
    no_probe: bool,
    allow_failures: bool,
) -> Result<i32> {
    let started = Instant::now();
    let mut extra: Vec<(&str, String)> = Vec::new();
    if let Some(n) = nr {
        extra.push(("n_real", n.to_string()));
        if 256 % n.max(1) == 0 {
            extra.push(("n_virtual", (256 / n).to_string()));
            extra.push(("tau", (17 * (256 / n)).to_string()));
        }
    }
    if let Some(t) = topology {
        extra.push(("topology", t.to_string()));
    }
    if let Some(t) = task {
        extra.push(("task", t.to_string()));
    }
    if fixed_task {
        extra.push(("fixed_task", "true".to_string()));
    }
    if no_probe {
        extra.push(("probe", "false".to_string()));
    }
    let mut cfg = build_config(common, &extra)?;
    let spec = config::resolve_scan(&mut cfg)?;
    let jobs = cfg.get_usize("jobs", common.jobs)?;
    cfg.finish()?;

    let result = with_pool(jobs, || scan2d(&spec))?;
    let csv = result.to_csv();
    write_file(&common.out, "scan.csv", &csv)?;
    let n_failed = result.n_failed();
    let manifest = RunManifest::new("scan", &cfg);
    write_manifest(
        &common.out,
        &manifest,
        serde_json::json!({
            "wall_time_s": started.elapsed().as_secs_f64(),
            "cells": result.cells.len(),
            "failed_cells": n_failed,
            "task": spec.task.as_str(),
        }),
    )?;
    let agg = aggregate(&result, 0.95).ok();
    match &agg {
        Some(a) => println!(
            "scan: {} cells ({} failed), best {:.4}, mean {:.4} ± {:.4} over {} cells -> {}",
            result.cells.len(),
            n_failed,
            a.best,
            a.mean,
            a.std,
            a.n_used,
            common.out.display()
        ),
        None => println!(
            "scan: {} cells ({} failed) -> {}",
            result.cells.len(),
            n_failed,
            common.out.display()
        ),
    }
    if n_failed > 0 && !allow_failures {
        eprintln!("{n_failed} cell(s) failed; rerun with --allow-failures to tolerate");
        return Ok(4);
    }
    Ok(0)
}

fn cmd_dynamics(opts: &CommonOpts) -> Result<i32> {
    let started = Instant::now();
    let mut cfg = build_config(opts, &[])?;
    let mut spec = config::resolve_scan(&mut cfg)?;
    let _settings = config::resolve_probe(&mut cfg)?;
    let jobs = cfg.get_usize("jobs", opts.jobs)?;
    cfg.finish()?;
    spec.probe = true;

    let result = with_pool(jobs, || scan_dynamics(&spec))?;
    let mut csv = String::from("lambda,phi,sync_label,extrema_levels,status\n");
    for c in &result.cells {
        let (sync, levels) = match &c.dynamics {
            Some(d) => (d.sync.as_str().to_string(), d.n_extrema_levels.to_string()),
            None => ("none".to_string(), String::new()),
        };
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            c.lambda, c.phi, sync, levels, c.status
        ));
    }
    write_file(&opts.out, "dynamics.csv", &csv)?;
    let manifest = RunManifest::new("dynamics", &cfg);
    write_manifest(
        &opts.out,
        &manifest,
        serde_json::json!({
            "wall_time_s": started.elapsed().as_secs_f64(),
            "cells": result.cells.len(),
        }),
    )?;
    println!(
        "dynamics: {} cells -> {}",
        result.cells.len(),
        opts.out.display()
    );
    Ok(0)
}

fn cmd_esn(opts: &CommonOpts) -> Result<i32> {
    let started = Instant::now();
    let mut cfg = build_config(opts, &[])?;
    let (esn_config, split, ridge) = config::resolve_esn(&mut cfg)?;
    let jobs = cfg.get_usize("jobs", opts.jobs)?;
    let _ = jobs;
    cfg.finish()?;

    let task = generate_narma_task(split, esn_config.seed)?;
    let matrices = esn_build(&esn_config)?;
    let states = esn_run(&matrices, &task.inputs)?;
    let b = split.buffer;
    let tr = split.train;
    let train_states = states.slice_rows(b..b + tr);
    let weights = readout::train(&train_states, &task.targets[b..b + tr], ridge)?;
    let nrmse_train = readout::nrmse(
        &task.targets[b..b + tr],
        &readout::predict(&train_states, &weights)?,
    )?;
    let test_states = states.slice_rows(b + tr..split.total());
    let nrmse_test = readout::nrmse(
        &task.targets[b + tr..split.total()],
        &readout::predict(&test_states, &weights)?,
    )?;

    let csv = format!(
        "n_nodes,spectral_radius,density,input_scale,seed,ridge,nrmse_train,nrmse_test\n{},{},{},{},{},{},{},{}\n",
        esn_config.n_nodes,
        esn_config.spectral_radius,
        esn_config.density,
        esn_config.input_scale,
        esn_config.seed,
        ridge,
        nrmse_train,
        nrmse_test
    );
    write_file(&opts.out, "esn.csv", &csv)?;
    let manifest = RunManifest::new("esn", &cfg);
    write_manifest(
        &opts.out,
        &manifest,
        serde_json::json!({
            "wall_time_s": started.elapsed().as_secs_f64(),
            "nrmse_train": nrmse_train,
            "nrmse_test": nrmse_test,
        }),
    )?;
    println!(
        "esn: {} nodes on NARMA10 -> train NRMSE {nrmse_train:.4}, test NRMSE {nrmse_test:.4}",
        esn_config.n_nodes
    );
    Ok(0)
}

fn read_scan_csv(path: &Path) -> Result<ScanResult> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScanResult::from_csv(&text, TaskKind::Narma10)
}

fn cmd_aggregate(files: &[PathBuf], cutoff: f64, out: &Path) -> Result<i32> {
    if files.is_empty() {
        return Err(Error::Config("aggregate needs at least one scan CSV".into()));
    }
    let mut csv = String::from("file,best,mean,std,n_used,n_total\n");
    for f in files {
        let result = read_scan_csv(f)?;
        let a = aggregate(&result, cutoff)?;
        println!(
            "{}: best {:.4}, mean {:.4} ± {:.4} ({} of {} cells below {cutoff})",
            f.display(),
            a.best,
            a.mean,
            a.std,
            a.n_used,
            a.n_total
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            f.display(),
            a.best,
            a.mean,
            a.std,
            a.n_used,
            a.n_total
        ));
    }
    write_file(out, "aggregate.csv", &csv)?;
    Ok(0)
}

fn cmd_covariance(grid_a: &Path, grid_b: &Path, cutoff: f64, out: &Path) -> Result<i32> {
    let a = read_scan_csv(grid_a)?;
    let b = read_scan_csv(grid_b)?;
    let report = task_covariance(&a, &b, cutoff)?;
    println!(
        "correlation: filtered (<= {cutoff}) {:.4} over {} cells, unfiltered {:.4} over {} cells",
        report.corr_filtered, report.n_filtered, report.corr_unfiltered, report.n_unfiltered
    );
    println!(
        "covariance: filtered {:.6e}, unfiltered {:.6e}",
        report.cov_filtered, report.cov_unfiltered
    );
    let csv = format!(
        "corr_filtered,corr_unfiltered,cov_filtered,cov_unfiltered,n_filtered,n_unfiltered,cutoff\n{},{},{},{},{},{},{}\n",
        report.corr_filtered,
        report.corr_unfiltered,
        report.cov_filtered,
        report.cov_unfiltered,
        report.n_filtered,
        report.n_unfiltered,
        cutoff
    );
    write_file(out, "covariance.csv", &csv)?;
    Ok(0)
}

/// Parse argv and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path with code 0.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(opts) => cmd_simulate(opts),
        Command::Scan {
            common,
            nr,
            topology,
            task,
            fixed_task,
            no_probe,
            allow_failures,
        } => cmd_scan(
            common,
            *nr,
            topology.as_deref(),
            task.as_deref(),
            *fixed_task,
            *no_probe,
            *allow_failures,
        ),
        Command::Dynamics(opts) => cmd_dynamics(opts),
        Command::Esn(opts) => cmd_esn(opts),
        Command::Aggregate { files, cutoff, out } => cmd_aggregate(files, *cutoff, out),
        Command::Covariance {
            grid_a,
            grid_b,
            cutoff,
            out,
        } => cmd_covariance(grid_a, grid_b, *cutoff, out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

