//! Classification of the autonomous (input-free) network dynamics:
//! synchronization state and number of distinct amplitude maxima.
//!
//! The probe integrates the network at the constant base pump, discards a
//! transient of 50τ and analyzes the final 10τ (delay systems settle on
//! multiples of τ). Tolerances default to 10⁻³: relative for the
//! synchronization classes, absolute for amplitude-level clustering.

use num_complex::Complex64;

use crate::dde_engine::{integrate, ConstantDrive, IntegratorConfig};
use crate::error::{Error, Result};
use crate::sl_model::OscillatorParams;
use crate::topology::AdjacencyMatrix;

/// Synchronization state of the input-free network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncLabel {
    /// Trivial state Z_k = 0: no output, no computation.
    Off,
    /// All amplitudes equal: Z_i = Z_j ≠ 0 (all pairs for N_R > 2).
    Synchronized,
    /// Z_1 = −Z_2 ≠ 0; only defined for two oscillators.
    AntiSynchronized,
    Other,
}

impl SyncLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            SyncLabel::Off => "off",
            SyncLabel::Synchronized => "sync",
            SyncLabel::AntiSynchronized => "antisync",
            SyncLabel::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(SyncLabel::Off),
            "sync" => Ok(SyncLabel::Synchronized),
            "antisync" => Ok(SyncLabel::AntiSynchronized),
            "other" => Ok(SyncLabel::Other),
            other => Err(Error::Parse(format!("unknown sync label '{other}'"))),
        }
    }
}

/// Combined classification of one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DynamicsLabel {
    pub sync: SyncLabel,
    /// Distinct maxima of |Z(t)|; 0 means constant amplitude (harmonic
    /// oscillation) or the off-state.
    pub n_extrema_levels: usize,
}

/// Streaming maxima used by both the trajectory classifier and the probe.
#[derive(Debug, Clone)]
struct SyncAccumulator {
    n: usize,
    count: usize,
    max_amp_any: f64,
    max_amp_node0: f64,
    max_pair_diff: f64,
    max_pair_sum: f64,
}

impl SyncAccumulator {
    fn new(n: usize) -> Self {
        Self {
            n,
            count: 0,
            max_amp_any: 0.0,
            max_amp_node0: 0.0,
            max_pair_diff: 0.0,
            max_pair_sum: 0.0,
        }
    }

    #[inline]
    fn push(&mut self, z: &[Complex64]) {
        self.count += 1;
        self.max_amp_node0 = self.max_amp_node0.max(z[0].norm());
        for zi in z {
            self.max_amp_any = self.max_amp_any.max(zi.norm());
        }
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                self.max_pair_diff = self.max_pair_diff.max((z[i] - z[j]).norm());
            }
        }
        if self.n == 2 {
            self.max_pair_sum = self.max_pair_sum.max((z[0] + z[1]).norm());
        }
    }

    fn finish(&self, tol: f64) -> Result<SyncLabel> {
        if self.count == 0 {
            return Err(Error::InsufficientData("empty trajectory tail".into()));
        }
        if self.max_amp_any < tol {
            return Ok(SyncLabel::Off);
        }
        if self.n >= 2 && self.max_pair_diff < tol * self.max_amp_node0 {
            return Ok(SyncLabel::Synchronized);
        }
        if self.n == 2 && self.max_pair_sum < tol * self.max_amp_node0 {
            return Ok(SyncLabel::AntiSynchronized);
        }
        Ok(SyncLabel::Other)
    }
}

/// Classify a sampled trajectory tail (flattened states: `n_real` amplitudes
/// per sample). `tol` is absolute for the off-test and relative to
/// max|Z_1| for the synchronization classes.
pub fn classify_sync(samples: &[Complex64], n_real: usize, tol: f64) -> Result<SyncLabel> {
    if n_real == 0 || samples.len() % n_real != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} samples do not tile into states of {} nodes",
            samples.len(),
            n_real
        )));
    }
    let mut acc = SyncAccumulator::new(n_real);
    for state in samples.chunks_exact(n_real) {
        acc.push(state);
    }
    acc.finish(tol)
}

/// Count distinct maxima of an amplitude series: find strict local maxima,
/// cluster their values with absolute tolerance `bin_tol`, return the cluster
/// count. A series whose total range stays below `bin_tol` has constant
/// amplitude and returns 0.
pub fn count_extrema_levels(series: &[f64], bin_tol: f64) -> usize {
    if series.len() < 3 {
        return 0;
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in series {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi - lo < bin_tol {
        return 0;
    }
    let mut maxima: Vec<f64> = Vec::new();
    for i in 1..series.len() - 1 {
        if series[i] > series[i - 1] && series[i] > series[i + 1] {
            maxima.push(series[i]);
        }
    }
    if maxima.is_empty() {
        return 0;
    }
    maxima.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut levels = 1;
    let mut anchor = maxima[0];
    for &v in &maxima[1..] {
        if v > anchor + bin_tol {
            levels += 1;
            anchor = v;
        }
    }
    levels
}

/// Probe tolerances and analysis window, in units of the delay time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSettings {
    /// Integration length before analysis starts, in multiples of τ.
    pub transient_delays: f64,
    /// Analyzed tail length, in multiples of τ.
    pub analysis_delays: f64,
    pub sync_tol: f64,
    pub bin_tol: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            transient_delays: 40.0,
            analysis_delays: 10.0,
            sync_tol: 1e-3,
            bin_tol: 1e-3,
        }
    }
}

/// Integrate the network without input at the constant base pump and label
/// its long-time dynamics. Total integration time is
/// (transient + analysis)·τ, i.e. 50τ with the default settings.
pub fn probe_dynamics(
    config: &IntegratorConfig,
    params: &OscillatorParams,
    adjacency: &AdjacencyMatrix,
    settings: &ProbeSettings,
) -> Result<DynamicsLabel> {
    let n = adjacency.node_count();
    let delay_steps = config.steps_in(params.tau, "tau")?;
    let tail_start = (settings.transient_delays * delay_steps as f64).round() as u64;
    let total_steps = tail_start + (settings.analysis_delays * delay_steps as f64).round() as u64;
    let t_end = total_steps as f64 * config.dt;

    let mut acc = SyncAccumulator::new(n);
    let mut amp0: Vec<f64> = Vec::with_capacity((total_steps - tail_start + 1) as usize);
    integrate(
        config,
        params,
        adjacency,
        &mut ConstantDrive(params.lambda_pump),
        t_end,
        |step, _t, z| {
            if step >= tail_start {
                acc.push(z);
                amp0.push(z[0].norm());
            }
        },
    )?;
    let sync = acc.finish(settings.sync_tol)?;
    let n_extrema_levels = if sync == SyncLabel::Off {
        0
    } else {
        count_extrema_levels(&amp0, settings.bin_tol)
    };
    Ok(DynamicsLabel {
        sync,
        n_extrema_levels,
    })
}
