//! Masking / time-multiplexing of the input stream.
//!
//! A discrete input sequence u (one sample per window T = θ·N_V) becomes the
//! per-node, piecewise-constant pump
//!
//! ```text
//! λ_k(t) = base_lambda + η · mask[k][slot(t)] · u[window(t)]
//! ```
//!
//! Each real node gets its own T-periodic binary mask row; the mask gates the
//! injected term only, so the base operating point persists in off slots.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dde_engine::{DriveFn, IntegratorConfig};
use crate::error::{Error, Result};

/// Timing constants of the multiplexing scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingConstants {
    /// Virtual-node duration θ.
    pub theta: f64,
    /// Virtualization factor N_V.
    pub n_virtual: usize,
    /// Real node count N_R.
    pub n_real: usize,
}

impl TimingConstants {
    pub fn new(theta: f64, n_virtual: usize, n_real: usize) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Config(format!("theta must be > 0, got {theta}")));
        }
        if n_virtual == 0 || n_real == 0 {
            return Err(Error::Config("n_virtual and n_real must be >= 1".into()));
        }
        Ok(Self {
            theta,
            n_virtual,
            n_real,
        })
    }

    /// Paper defaults: θ = 12 per virtual node.
    pub fn with_defaults(n_virtual: usize, n_real: usize) -> Result<Self> {
        Self::new(12.0, n_virtual, n_real)
    }

    /// Input window T = θ·N_V.
    #[inline]
    pub fn window(&self) -> f64 {
        self.theta * self.n_virtual as f64
    }

    /// Default delay τ = 17·N_V: mask length 12·N_V and delay deliberately
    /// non-identical.
    pub fn default_tau(&self) -> f64 {
        17.0 * self.n_virtual as f64
    }

    /// Grid steps per θ slot; errors unless θ is a grid multiple.
    pub fn steps_per_slot(&self, config: &IntegratorConfig) -> Result<u64> {
        config.steps_in(self.theta, "theta")
    }
}

/// Per-node binary mask: N_R rows of N_V slot values in {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    values: Vec<u8>,
    n_real: usize,
    n_virtual: usize,
    seed: u64,
}

impl Mask {
    #[inline]
    pub fn get(&self, node: usize, slot: usize) -> u8 {
        self.values[node * self.n_virtual + slot]
    }

    pub fn n_real(&self) -> usize {
        self.n_real
    }

    pub fn n_virtual(&self) -> usize {
        self.n_virtual
    }

    /// RNG seed the mask was drawn from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, node: usize) -> &[u8] {
        &self.values[node * self.n_virtual..(node + 1) * self.n_virtual]
    }

    /// CSV serialization (one row per node) for exact experiment replay.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for k in 0..self.n_real {
            let row: Vec<String> = self.row(k).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, seed: u64) -> Result<Self> {
        let mut values = Vec::new();
        let mut n_virtual = None;
        let mut n_real = 0;
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<u8> = line
                .split(',')
                .map(|f| match f.trim() {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Error::Parse(format!("mask entry '{other}' not in {{0,1}}"))),
                })
                .collect::<Result<_>>()?;
            match n_virtual {
                None => n_virtual = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::Parse("ragged mask rows".into()));
                }
                _ => {}
            }
            values.extend_from_slice(&row);
            n_real += 1;
        }
        let n_virtual = n_virtual.ok_or_else(|| Error::Parse("empty mask file".into()))?;
        Ok(Self {
            values,
            n_real,
            n_virtual,
            seed,
        })
    }
}

/// Draw a binary mask, one independent T-periodic row per real node.
///
/// Entries are i.i.d. uniform over {0, 1} from a counter-based deterministic
/// RNG; an all-zero row would leave that node without input, so such rows are
/// rejected and redrawn (bounded).
pub fn generate_mask(n_real: usize, n_virtual: usize, seed: u64) -> Result<Mask> {
    if n_real == 0 || n_virtual == 0 {
        return Err(Error::Config("mask dimensions must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_real * n_virtual);
    for _node in 0..n_real {
        let mut attempts = 0;
        loop {
            let row: Vec<u8> = (0..n_virtual)
                .map(|_| (rng.next_u32() & 1) as u8)
                .collect();
            if row.iter().any(|&v| v == 1) {
                values.extend_from_slice(&row);
                break;
            }
            attempts += 1;
            if attempts > 100 {
                return Err(Error::TaskGeneration(
                    "mask rejection loop exceeded 100 redraws".into(),
                ));
            }
        }
    }
    Ok(Mask {
        values,
        n_real,
        n_virtual,
        seed,
    })
}

/// Input samples and injection constants.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSchedule {
    /// One input sample per window T.
    pub u: Vec<f64>,
    /// Maximum injection strength η.
    pub eta: f64,
    /// Base operating point λ.
    pub base_lambda: f64,
}

impl InputSchedule {
    pub fn new(u: Vec<f64>, eta: f64, base_lambda: f64) -> Result<Self> {
        if eta < 0.0 || !eta.is_finite() {
            return Err(Error::Config(format!("eta must be >= 0, got {eta}")));
        }
        Ok(Self {
            u,
            eta,
            base_lambda,
        })
    }
}

/// Pump vector λ_k(t) at an arbitrary time inside the schedule.
///
/// Window w = ⌊t/T⌋, slot s = ⌊(t mod T)/θ⌋;
/// λ_k = base + η · mask[k][s] · u[w].
pub fn pump_at(
    t: f64,
    schedule: &InputSchedule,
    mask: &Mask,
    timing: &TimingConstants,
) -> Result<Vec<f64>> {
    let t_total = timing.window() * schedule.u.len() as f64;
    if t < 0.0 || t >= t_total {
        return Err(Error::ScheduleOutOfRange { t, end: t_total });
    }
    let window = (t / timing.window()).floor() as usize;
    let slot = (((t - window as f64 * timing.window()) / timing.theta).floor() as usize)
        .min(timing.n_virtual - 1);
    let u = schedule.u[window];
    Ok((0..timing.n_real)
        .map(|k| schedule.base_lambda + schedule.eta * mask.get(k, slot) as f64 * u)
        .collect())
}

/// Grid-aligned drive built from a schedule, mask and timing constants.
///
/// Slot and window indices derive from the integer step index, so the pump
/// is exactly piecewise constant on the θ grid with no floating-point
/// boundary ambiguity.
#[derive(Debug, Clone)]
pub struct ScheduledDrive {
    schedule: InputSchedule,
    mask: Mask,
    n_virtual: usize,
    steps_per_slot: u64,
    cached: Vec<f64>,
    cache_until: u64,
}

impl ScheduledDrive {
    pub fn new(
        schedule: InputSchedule,
        mask: Mask,
        timing: &TimingConstants,
        config: &IntegratorConfig,
    ) -> Result<Self> {
        if mask.n_real() != timing.n_real || mask.n_virtual() != timing.n_virtual {
            return Err(Error::DimensionMismatch(format!(
                "mask is {}x{}, timing expects {}x{}",
                mask.n_real(),
                mask.n_virtual(),
                timing.n_real,
                timing.n_virtual
            )));
        }
        let steps_per_slot = timing.steps_per_slot(config)?;
        Ok(Self {
            cached: vec![0.0; timing.n_real],
            cache_until: 0,
            schedule,
            mask,
            n_virtual: timing.n_virtual,
            steps_per_slot,
        })
    }

    /// Total number of grid steps the schedule covers.
    pub fn total_steps(&self) -> u64 {
        self.schedule.u.len() as u64 * self.n_virtual as u64 * self.steps_per_slot
    }
}

impl DriveFn for ScheduledDrive {
    #[inline]
    fn pump(&mut self, step: u64, t: f64, out: &mut [f64]) -> Result<()> {
        // The pump is constant within a slot; recompute only at boundaries.
        if step >= self.cache_until || step + self.steps_per_slot < self.cache_until {
            let slot_index = step / self.steps_per_slot;
            let window = (slot_index / self.n_virtual as u64) as usize;
            let slot = (slot_index % self.n_virtual as u64) as usize;
            if window >= self.schedule.u.len() {
                return Err(Error::ScheduleOutOfRange {
                    t,
                    end: self.schedule.u.len() as f64,
                });
            }
            let inject = self.schedule.eta * self.schedule.u[window];
            for (k, o) in self.cached.iter_mut().enumerate() {
                *o = self.schedule.base_lambda + inject * self.mask.get(k, slot) as f64;
            }
            self.cache_until = (slot_index + 1) * self.steps_per_slot;
        }
        out.copy_from_slice(&self.cached);
        Ok(())
    }
}
