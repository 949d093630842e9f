//! Orchestration: single train/test runs, 2-D (λ, φ) scans, Fig-9-style
//! aggregation and cross-task correlation.
//!
//! Every scan cell derives its own mask/task seeds from the base seed and
//! its grid indices, so results are a pure function of the scan spec and
//! independent of worker count or scheduling.

use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dde_engine::{integrate, IntegratorConfig};
use crate::dynamics_probe::{probe_dynamics, DynamicsLabel, ProbeSettings, SyncLabel};
use crate::error::{Error, Result};
use crate::input_pipeline::{generate_mask, InputSchedule, ScheduledDrive, TimingConstants};
use crate::readout::{self, Harvester, ReadoutObservable};
use crate::sl_model::OscillatorParams;
use crate::tasks::{generate_narma_task, load_santa_fe_with_split, SplitLengths, TaskData};
use crate::topology::{self, AdjacencyMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Narma10,
    SantaFe,
}

impl TaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::Narma10 => "narma10",
            TaskKind::SantaFe => "santafe",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "narma10" => Ok(TaskKind::Narma10),
            "santafe" => Ok(TaskKind::SantaFe),
            other => Err(Error::Config(format!(
                "unknown task '{other}' (expected narma10 or santafe)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Ring,
    RingWithJumps,
    BidirectionalSelfFeedback,
}

impl TopologyKind {
    pub fn build(&self, n: usize) -> Result<AdjacencyMatrix> {
        match self {
            TopologyKind::Ring => topology::unidirectional_ring(n),
            TopologyKind::RingWithJumps => topology::ring_with_jumps(n),
            TopologyKind::BidirectionalSelfFeedback => {
                topology::bidirectional_ring_selffeedback(n)
            }
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TopologyKind::Ring => "ring",
            TopologyKind::RingWithJumps => "jumps",
            TopologyKind::BidirectionalSelfFeedback => "bidirectional",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(TopologyKind::Ring),
            "jumps" => Ok(TopologyKind::RingWithJumps),
            "bidirectional" => Ok(TopologyKind::BidirectionalSelfFeedback),
            other => Err(Error::Config(format!(
                "unknown topology '{other}' (expected ring, jumps or bidirectional)"
            ))),
        }
    }
}

/// Everything needed for one train/test run at a single parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfig {
    pub topology: TopologyKind,
    pub n_real: usize,
    pub n_virtual: usize,
    pub theta: f64,
    pub tau: f64,
    pub dt: f64,
    pub kappa: f64,
    pub omega: f64,
    pub gamma: Complex64,
    /// Base pump λ (first scan axis).
    pub lambda: f64,
    /// Coupling phase φ (second scan axis).
    pub phi: f64,
    pub eta: f64,
    pub ridge: f64,
    pub observable: ReadoutObservable,
    pub split: SplitLengths,
    pub mask_seed: u64,
    pub task_seed: u64,
}

impl PointConfig {
    pub fn params(&self) -> OscillatorParams {
        OscillatorParams {
            lambda_pump: self.lambda,
            omega: self.omega,
            gamma: self.gamma,
            kappa: self.kappa,
            phi: self.phi,
            tau: self.tau,
        }
    }

    pub fn timing(&self) -> Result<TimingConstants> {
        TimingConstants::new(self.theta, self.n_virtual, self.n_real)
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            ..Default::default()
        }
    }
}

/// Task data provider for `run_single`: NARMA is drawn per point from the
/// point's task seed; the Santa Fe series is loaded once and shared.
#[derive(Debug, Clone, Copy)]
pub enum TaskSource<'a> {
    Narma,
    SantaFe(&'a TaskData),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub nrmse_train: f64,
    pub nrmse_test: f64,
    /// Seed the task data was actually drawn from (NARMA redraws on divergence).
    pub task_seed_used: u64,
}

/// One full run: build mask and task data from the point's seeds, integrate
/// buffer+train+test windows continuously, train on the training rows only,
/// report train and test NRMSE separately.
pub fn run_single(point: &PointConfig, source: TaskSource<'_>) -> Result<RunOutcome> {
    let task: TaskData = match source {
        TaskSource::Narma => generate_narma_task(point.split, point.task_seed)?,
        TaskSource::SantaFe(data) => {
            if data.split != point.split {
                return Err(Error::Config(format!(
                    "Santa Fe data was loaded with split {:?}, point expects {:?}",
                    data.split, point.split
                )));
            }
            data.clone()
        }
    };
    run_single_with_task(point, &task)
}

/// [`run_single`] with the task data already in hand.
pub fn run_single_with_task(point: &PointConfig, task: &TaskData) -> Result<RunOutcome> {
    task.validate()?;
    let timing = point.timing()?;
    let config = point.integrator();
    let params = point.params();
    let adjacency = point.topology.build(point.n_real)?;
    let mask = generate_mask(point.n_real, point.n_virtual, point.mask_seed)?;
    let schedule = InputSchedule::new(task.inputs.clone(), point.eta, point.lambda)?;
    let mut drive = ScheduledDrive::new(schedule, mask, &timing, &config)?;

    let n_windows = task.split.total();
    let mut harvester = Harvester::new(&timing, &config, n_windows, point.observable)?;
    let t_end = harvester.t_end(&config);
    integrate(&config, &params, &adjacency, &mut drive, t_end, |step, t, z| {
        harvester.observe(step, t, z)
    })?;
    let states = harvester.finish()?;

    let b = task.split.buffer;
    let tr = task.split.train;
    let train_states = states.slice_rows(b..b + tr);
    let train_targets = &task.targets[b..b + tr];
    let weights = match readout::train(&train_states, train_targets, point.ridge) {
        Ok(w) => w,
        Err(Error::NumericalRank) => {
            // One retry with a stiffer ridge.
            let retry = if point.ridge > 0.0 {
                point.ridge * 100.0
            } else {
                1e-8
            };
            readout::train(&train_states, train_targets, retry)?
        }
        Err(e) => return Err(e),
    };

    let test_states = states.slice_rows(b + tr..n_windows);
    let test_targets = &task.targets[b + tr..n_windows];
    let nrmse_train = readout::nrmse(
        train_targets,
        &readout::predict(&train_states, &weights)?,
    )?;
    let nrmse_test = readout::nrmse(test_targets, &readout::predict(&test_states, &weights)?)?;
    Ok(RunOutcome {
        nrmse_train,
        nrmse_test,
        task_seed_used: task.seed.unwrap_or(point.task_seed),
    })
}

/// Inclusive linear axis: `count` points from `min` to `max`; a single point
/// collapses to `min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::Config("axis count must be >= 1".into()));
        }
        if self.count == 1 {
            return Ok(vec![self.min]);
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| self.min + i as f64 * step)
            .collect())
    }
}

/// Full 2-D scan specification.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    /// Template point; λ, φ and the seeds are overwritten per cell.
    pub base: PointConfig,
    pub lambda_axis: AxisSpec,
    pub phi_axis: AxisSpec,
    pub task: TaskKind,
    pub base_seed: u64,
    /// Hold the input sequence fixed across cells instead of redrawing it
    /// per parameter combination.
    pub fixed_task: bool,
    /// Classify the input-free dynamics of every cell.
    pub probe: bool,
    pub santa_fe_path: Option<PathBuf>,
}

const SEED_TAG_MASK: u64 = 0x6d61736b; // "mask"
const SEED_TAG_TASK: u64 = 0x7461736b; // "task"

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-cell seed: hash of (base seed, λ index, φ index, purpose tag).
pub fn derive_seed(base: u64, lambda_index: usize, phi_index: usize, tag: u64) -> u64 {
    let mut h = splitmix64(base);
    h = splitmix64(h ^ lambda_index as u64);
    h = splitmix64(h ^ phi_index as u64);
    splitmix64(h ^ tag)
}

/// Outcome of one scan cell. `status` is "ok" or a short error tag; failed
/// cells keep their coordinates and seeds so the grid stays fully populated.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub lambda_index: usize,
    pub phi_index: usize,
    pub lambda: f64,
    pub phi: f64,
    pub nrmse_train: Option<f64>,
    pub nrmse_test: Option<f64>,
    pub dynamics: Option<DynamicsLabel>,
    pub mask_seed: u64,
    pub task_seed: u64,
    pub status: String,
}

impl CellRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub task: TaskKind,
    pub lambda_values: Vec<f64>,
    pub phi_values: Vec<f64>,
    /// Row-major over (λ index, φ index): cells[iλ · nφ + iφ].
    pub cells: Vec<CellRecord>,
}

fn error_tag(e: &Error) -> String {
    let tag = match e {
        Error::Divergence { .. } => "divergence",
        Error::NarmaDivergence { .. } => "narma-divergence",
        Error::NumericalRank => "numerical-rank",
        Error::TaskGeneration(_) => "task-generation",
        Error::UndefinedMetric(_) => "undefined-metric",
        Error::Config(_) => "config",
        Error::DimensionMismatch(_) => "dimension-mismatch",
        Error::InsufficientData(_) => "insufficient-data",
        Error::DegenerateData(_) => "degenerate-data",
        Error::MissingData(_) => "missing-data",
        _ => "error",
    };
    tag.to_string()
}

/// Evaluate `run_single` on every (λ, φ) cell with per-cell derived seeds.
/// Cells execute concurrently on the ambient rayon pool; the result order is
/// deterministic regardless of scheduling. Individual cell failures are
/// recorded and the scan continues.
pub fn scan2d(spec: &ScanSpec) -> Result<ScanResult> {
    let lambda_values = spec.lambda_axis.values()?;
    let phi_values = spec.phi_axis.values()?;

    let santa_fe: Option<TaskData> = match spec.task {
        TaskKind::SantaFe => {
            let path = spec.santa_fe_path.as_ref().ok_or_else(|| {
                Error::MissingData(
                    "Santa Fe task requested but no data path configured; set \
                     santa_fe_path or the SLRES_SANTA_FE environment variable"
                        .into(),
                )
            })?;
            Some(load_santa_fe_with_split(path, spec.base.split)?)
        }
        TaskKind::Narma10 => None,
    };

    let fixed_task_seed = derive_seed(spec.base_seed, 0, 0, SEED_TAG_TASK);
    let indices: Vec<(usize, usize)> = (0..lambda_values.len())
        .flat_map(|il| (0..phi_values.len()).map(move |ip| (il, ip)))
        .collect();

    let cells: Vec<CellRecord> = indices
        .par_iter()
        .map(|&(il, ip)| {
            let lambda = lambda_values[il];
            let phi = phi_values[ip];
            let mask_seed = derive_seed(spec.base_seed, il, ip, SEED_TAG_MASK);
            let task_seed = if spec.fixed_task {
                fixed_task_seed
            } else {
                derive_seed(spec.base_seed, il, ip, SEED_TAG_TASK)
            };
            let point = PointConfig {
                lambda,
                phi,
                mask_seed,
                task_seed,
                ..spec.base.clone()
            };
            let source = match &santa_fe {
                Some(data) => TaskSource::SantaFe(data),
                None => TaskSource::Narma,
            };
            let mut record = CellRecord {
                lambda_index: il,
                phi_index: ip,
                lambda,
                phi,
                nrmse_train: None,
                nrmse_test: None,
                dynamics: None,
                mask_seed,
                task_seed,
                status: "ok".to_string(),
            };
            match run_single(&point, source) {
                Ok(outcome) => {
                    record.nrmse_train = Some(outcome.nrmse_train);
                    record.nrmse_test = Some(outcome.nrmse_test);
                    record.task_seed = outcome.task_seed_used;
                }
                Err(e) => record.status = error_tag(&e),
            }
            if spec.probe {
                match probe_dynamics(
                    &point.integrator(),
                    &point.params(),
                    &point.topology.build(point.n_real).expect("validated above"),
                    &ProbeSettings::default(),
                ) {
                    Ok(label) => record.dynamics = Some(label),
                    Err(e) => {
                        if record.status == "ok" {
                            record.status = format!("probe-{}", error_tag(&e));
                        }
                    }
                }
            }
            record
        })
        .collect();

    Ok(ScanResult {
        task: spec.task,
        lambda_values,
        phi_values,
        cells,
    })
}

impl ScanResult {
    pub fn n_failed(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_ok()).count()
    }

    /// Spec'd grid CSV: one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "lambda,phi,nrmse_test,nrmse_train,sync_label,extrema_levels,mask_seed,task_seed,status\n",
        );
        for c in &self.cells {
            let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let (sync, extrema) = match &c.dynamics {
                Some(d) => (d.sync.as_str().to_string(), d.n_extrema_levels.to_string()),
                None => ("none".to_string(), String::new()),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                c.lambda,
                c.phi,
                fmt_opt(c.nrmse_test),
                fmt_opt(c.nrmse_train),
                sync,
                extrema,
                c.mask_seed,
                c.task_seed,
                c.status
            ));
        }
        out
    }

    /// Parse a grid CSV written by [`to_csv`](Self::to_csv). The task kind is
    /// not stored in the CSV; pass what the metadata sidecar records.
    pub fn from_csv(text: &str, task: TaskKind) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        if !header.starts_with("lambda,phi,nrmse_test") {
            return Err(Error::Parse(format!("unexpected CSV header '{header}'")));
        }
        let mut cells = Vec::new();
        let mut lambda_values: Vec<f64> = Vec::new();
        let mut phi_values: Vec<f64> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::Parse(format!(
                    "line {}: expected 9 fields, got {}",
                    lineno + 2,
                    f.len()
                )));
            }
            let parse_f64 = |s: &str, what: &str| -> Result<f64> {
                s.parse().map_err(|_| {
                    Error::Parse(format!("line {}: bad {what} '{s}'", lineno + 2))
                })
            };
            let parse_opt = |s: &str, what: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    parse_f64(s, what).map(Some)
                }
            };
            let lambda = parse_f64(f[0], "lambda")?;
            let phi = parse_f64(f[1], "phi")?;
            let dynamics = if f[4] == "none" {
                None
            } else {
                Some(DynamicsLabel {
                    sync: SyncLabel::parse(f[4])?,
                    n_extrema_levels: f[5].parse().map_err(|_| {
                        Error::Parse(format!("line {}: bad extrema count '{}'", lineno + 2, f[5]))
                    })?,
                })
            };
            if !lambda_values.iter().any(|&v| v == lambda) {
                lambda_values.push(lambda);
            }
            if !phi_values.iter().any(|&v| v == phi) {
                phi_values.push(phi);
            }
            let lambda_index = lambda_values.iter().position(|&v| v == lambda).unwrap();
            let phi_index = phi_values.iter().position(|&v| v == phi).unwrap();
            cells.push(CellRecord {
                lambda_index,
                phi_index,
                lambda,
                phi,
                nrmse_test: parse_opt(f[2], "nrmse_test")?,
                nrmse_train: parse_opt(f[3], "nrmse_train")?,
                dynamics,
                mask_seed: f[6]
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad mask seed", lineno + 2)))?,
                task_seed: f[7]
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad task seed", lineno + 2)))?,
                status: f[8].to_string(),
            });
        }
        Ok(ScanResult {
            task,
            lambda_values,
            phi_values,
            cells,
        })
    }
}

/// Fig-9-style summary over one scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    /// Minimum test NRMSE over all successful cells.
    pub best: f64,
    /// Mean over cells below the exclusion cutoff.
    pub mean: f64,
    /// Population standard deviation over the same cells.
    pub std: f64,
    pub n_used: usize,
    pub n_total: usize,
}

/// Best/mean/std of the test NRMSE. The mean and standard deviation exclude
/// cells at or above `exclusion_cutoff` (the ≈1 plateau of no performance);
/// the best is taken over every successful cell.
pub fn aggregate(result: &ScanResult, exclusion_cutoff: f64) -> Result<Aggregate> {
    let ok: Vec<f64> = result
        .cells
        .iter()
        .filter(|c| c.is_ok())
        .filter_map(|c| c.nrmse_test)
        .collect();
    if ok.is_empty() {
        return Err(Error::EmptyAggregate("no successful cells".into()));
    }
    let best = ok.iter().cloned().fold(f64::INFINITY, f64::min);
    let kept: Vec<f64> = ok
        .iter()
        .cloned()
        .filter(|&v| v < exclusion_cutoff)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyAggregate(format!(
            "all {} cells at or above the exclusion cutoff {exclusion_cutoff}",
            ok.len()
        )));
    }
    let n = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / n;
    let var = kept.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(Aggregate {
        best,
        mean,
        std: var.sqrt(),
        n_used: kept.len(),
        n_total: result.cells.len(),
    })
}

/// Cross-task agreement over two scans sharing the same grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceReport {
    /// Pearson correlation over cells where both NRMSE values ≤ cutoff.
    pub corr_filtered: f64,
    /// Pearson correlation over all jointly successful cells.
    pub corr_unfiltered: f64,
    /// Population covariances for the same two cell sets.
    pub cov_filtered: f64,
    pub cov_unfiltered: f64,
    pub n_filtered: usize,
    pub n_unfiltered: usize,
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    cov /= n;
    vx /= n;
    vy /= n;
    if vx <= 0.0 || vy <= 0.0 {
        return Err(Error::UndefinedMetric(
            "zero variance in correlation input".into(),
        ));
    }
    Ok((cov / (vx * vy).sqrt(), cov))
}

/// Pearson correlation of test NRMSE between two scans, over cells where both
/// values ≤ `cutoff`, alongside the unfiltered coefficient and both raw
/// covariances.
pub fn task_covariance(
    grid_a: &ScanResult,
    grid_b: &ScanResult,
    cutoff: f64,
) -> Result<CovarianceReport> {
    if grid_a.lambda_values != grid_b.lambda_values || grid_a.phi_values != grid_b.phi_values {
        return Err(Error::Config(
            "scans do not share identical (lambda, phi) axes".into(),
        ));
    }
    if grid_a.cells.len() != grid_b.cells.len() {
        return Err(Error::DimensionMismatch(
            "scans have different cell counts".into(),
        ));
    }
    let mut all_a = Vec::new();
    let mut all_b = Vec::new();
    let mut kept_a = Vec::new();
    let mut kept_b = Vec::new();
    for (ca, cb) in grid_a.cells.iter().zip(&grid_b.cells) {
        if let (true, true, Some(a), Some(b)) = (ca.is_ok(), cb.is_ok(), ca.nrmse_test, cb.nrmse_test)
        {
            all_a.push(a);
            all_b.push(b);
            if a <= cutoff && b <= cutoff {
                kept_a.push(a);
                kept_b.push(b);
            }
        }
    }
    if kept_a.len() < 3 {
        return Err(Error::InsufficientOverlap(format!(
            "only {} cells survive the {cutoff} cutoff in both scans (need 3)",
            kept_a.len()
        )));
    }
    let (corr_unfiltered, cov_unfiltered) = pearson(&all_a, &all_b)?;
    let (corr_filtered, cov_filtered) = pearson(&kept_a, &kept_b)?;
    Ok(CovarianceReport {
        corr_filtered,
        corr_unfiltered,
        cov_filtered,
        cov_unfiltered,
        n_filtered: kept_a.len(),
        n_unfiltered: all_a.len(),
    })
}

/// Probe-only grid: classify the autonomous dynamics of every (λ, φ) cell
/// without running the reservoir-computing pipeline.
pub fn scan_dynamics(spec: &ScanSpec) -> Result<ScanResult> {
    let lambda_values = spec.lambda_axis.values()?;
    let phi_values = spec.phi_axis.values()?;
    let indices: Vec<(usize, usize)> = (0..lambda_values.len())
        .flat_map(|il| (0..phi_values.len()).map(move |ip| (il, ip)))
        .collect();
    let cells: Vec<CellRecord> = indices
        .par_iter()
        .map(|&(il, ip)| {
            let lambda = lambda_values[il];
            let phi = phi_values[ip];
            let point = PointConfig {
                lambda,
                phi,
                ..spec.base.clone()
            };
            let mut record = CellRecord {
                lambda_index: il,
                phi_index: ip,
                lambda,
                phi,
                nrmse_train: None,
                nrmse_test: None,
                dynamics: None,
                mask_seed: 0,
                task_seed: 0,
                status: "ok".to_string(),
            };
            let run = point.topology.build(point.n_real).and_then(|adj| {
                probe_dynamics(
                    &point.integrator(),
                    &point.params(),
                    &adj,
                    &ProbeSettings::default(),
                )
            });
            match run {
                Ok(label) => record.dynamics = Some(label),
                Err(e) => record.status = error_tag(&e),
            }
            record
        })
        .collect();
    Ok(ScanResult {
        task: spec.task,
        lambda_values,
        phi_values,
        cells,
    })
}
