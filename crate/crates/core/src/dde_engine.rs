//! Fixed-step integrator for constant-delay DDE systems.
//!
//! Classical RK4 on a uniform grid with step `dt`. The delay τ must be a
//! grid multiple, so the delayed state at stage times t−τ and t+dt−τ is a
//! direct grid lookup; only the half-stage value at t+dt/2−τ needs
//! interpolation, done cubic-Hermite on the stored (state, derivative)
//! samples. Discontinuity points (t = 0 and every pump slot boundary) land
//! on grid nodes by construction, which keeps the scheme's order intact.
//!
//! The drive is sampled once per step, at the step start, and held for all
//! four stages. Every drive this crate produces is piecewise constant on
//! intervals aligned with the step grid, so this sampling is exact.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sl_model::{NetworkState, OscillatorParams, VectorField, DEFAULT_INITIAL_Z};
use crate::topology::AdjacencyMatrix;

/// Amplitude beyond which the run is aborted as mis-configured.
pub const DIVERGENCE_GUARD: f64 = 1e6;

/// Integration scheme. RK4 with cubic Hermite delay interpolation is the
/// only implemented method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Rk4Hermite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub method: Method,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            method: Method::Rk4Hermite,
        }
    }
}

impl IntegratorConfig {
    /// Number of grid steps in `span`, requiring `span` to be a step multiple
    /// within 1e-9 relative tolerance.
    pub fn steps_in(&self, span: f64, what: &str) -> Result<u64> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        let ratio = span / self.dt;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.abs().max(1.0) {
            return Err(Error::Config(format!(
                "{what} = {span} is not a positive multiple of dt = {}",
                self.dt
            )));
        }
        Ok(steps as u64)
    }
}

/// Per-node pump λ_k(t), evaluated once per integration step.
///
/// `step` is the grid index of the step start (t = step·dt); implementations
/// that are piecewise constant on the grid should branch on `step` rather
/// than on the floating-point time.
pub trait DriveFn {
    /// Steps arrive in increasing order within a run, which lets
    /// implementations cache the current slot.
    fn pump(&mut self, step: u64, t: f64, out: &mut [f64]) -> Result<()>;
}

/// Constant pump on every node.
#[derive(Debug, Clone, Copy)]
pub struct ConstantDrive(pub f64);

impl DriveFn for ConstantDrive {
    #[inline]
    fn pump(&mut self, _step: u64, _t: f64, out: &mut [f64]) -> Result<()> {
        out.fill(self.0);
        Ok(())
    }
}

/// Dense ring buffer of (state, derivative) samples on the integration grid.
///
/// Samples are indexed by signed grid index; anything at or before index 0
/// is the constant pre-history, returned exactly. Capacity covers the delay
/// window plus an interpolation margin, so memory is constant in run length.
#[derive(Debug)]
pub struct HistoryBuffer {
    n: usize,
    capacity: usize,
    states: Vec<Complex64>,
    derivs: Vec<Complex64>,
    initial: Vec<Complex64>,
    newest: i64,
}

impl HistoryBuffer {
    pub fn new(n: usize, delay_steps: u64, initial: &[Complex64]) -> Self {
        let capacity = delay_steps as usize + 4;
        Self {
            n,
            capacity,
            states: vec![Complex64::new(0.0, 0.0); capacity * n],
            derivs: vec![Complex64::new(0.0, 0.0); capacity * n],
            initial: initial.to_vec(),
            newest: i64::MIN,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    fn slot(&self, index: i64) -> usize {
        (index.rem_euclid(self.capacity as i64) as usize) * self.n
    }

    #[inline]
    pub fn store(&mut self, index: i64, z: &[Complex64], dz: &[Complex64]) {
        let s = self.slot(index);
        self.states[s..s + self.n].copy_from_slice(z);
        self.derivs[s..s + self.n].copy_from_slice(dz);
        self.newest = self.newest.max(index);
    }

    fn check_window(&self, index: i64) -> Result<()> {
        if index > self.newest || index <= self.newest - self.capacity as i64 {
            return Err(Error::HistoryUnderflow { index });
        }
        Ok(())
    }

    /// Grid state at `index`; index ≤ 0 returns the constant pre-history.
    #[inline]
    pub fn state_at(&self, index: i64) -> Result<&[Complex64]> {
        if index <= 0 {
            return Ok(&self.initial);
        }
        self.check_window(index)?;
        let s = self.slot(index);
        Ok(&self.states[s..s + self.n])
    }

    /// Cubic Hermite value at the midpoint of grid interval [index, index+1],
    /// using the stored derivatives: H(½) = (y₀+y₁)/2 + (d₀−d₁)·dt/8.
    #[inline]
    pub fn midpoint_into(&self, index: i64, dt: f64, out: &mut [Complex64]) -> Result<()> {
        if index < 0 {
            out.copy_from_slice(&self.initial);
            return Ok(());
        }
        self.check_window(index)?;
        self.check_window(index + 1)?;
        let a = self.slot(index);
        let b = self.slot(index + 1);
        hermite_mid(
            &self.states[a..a + self.n],
            &self.states[b..b + self.n],
            &self.derivs[a..a + self.n],
            &self.derivs[b..b + self.n],
            dt,
            out,
        );
        Ok(())
    }

    // Cursor-based accessors for the integration hot path: `slot` indices are
    // physical ring positions maintained incrementally by the caller, which
    // avoids a 64-bit division per lookup.

    #[inline]
    fn slot_state(&self, slot: usize) -> &[Complex64] {
        &self.states[slot * self.n..(slot + 1) * self.n]
    }

    #[inline]
    fn store_slot(&mut self, slot: usize, index: i64, z: &[Complex64], dz: &[Complex64]) {
        let s = slot * self.n;
        self.states[s..s + self.n].copy_from_slice(z);
        self.derivs[s..s + self.n].copy_from_slice(dz);
        self.newest = index;
    }

    #[inline]
    fn midpoint_slots(&self, slot_a: usize, slot_b: usize, dt: f64, out: &mut [Complex64]) {
        let a = slot_a * self.n;
        let b = slot_b * self.n;
        hermite_mid(
            &self.states[a..a + self.n],
            &self.states[b..b + self.n],
            &self.derivs[a..a + self.n],
            &self.derivs[b..b + self.n],
            dt,
            out,
        );
    }
}

#[inline]
fn hermite_mid(
    y0: &[Complex64],
    y1: &[Complex64],
    d0: &[Complex64],
    d1: &[Complex64],
    dt: f64,
    out: &mut [Complex64],
) {
    let h8 = dt / 8.0;
    for ((((o, &a), &b), &da), &db) in out.iter_mut().zip(y0).zip(y1).zip(d0).zip(d1) {
        *o = 0.5 * (a + b) + h8 * (da - db);
    }
}

/// Advance the network from the given initial state to `t_end`.
///
/// The history over [−τ, 0] is the initial state held constant. The observer
/// is invoked at every grid point (including t = 0 and t_end) with
/// `(step index, t, state)`.
pub fn integrate_with_initial<D, O>(
    config: &IntegratorConfig,
    params: &OscillatorParams,
    adjacency: &AdjacencyMatrix,
    initial: &[Complex64],
    drive: &mut D,
    t_end: f64,
    mut observer: O,
) -> Result<NetworkState>
where
    D: DriveFn + ?Sized,
    O: FnMut(u64, f64, &[Complex64]),
{
    let n = adjacency.node_count();
    if initial.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} nodes, adjacency has {}",
            initial.len(),
            n
        )));
    }
    let vf = VectorField::new(params, adjacency)?;
    let dt = config.dt;
    let n_steps = config.steps_in(t_end, "t_end")?;
    let delay_steps = config.steps_in(params.tau, "tau")?;

    let mut hist = HistoryBuffer::new(n, delay_steps, initial);
    let m = delay_steps as i64;

    let mut z = initial.to_vec();
    let mut pump = vec![0.0; n];
    let mut k1 = vec![Complex64::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut ztmp = k1.clone();
    let mut z_mid = k1.clone();

    observer(0, 0.0, &z);

    let guard_sq = DIVERGENCE_GUARD * DIVERGENCE_GUARD;
    let half = dt / 2.0;
    let sixth = dt / 6.0;
    let capacity = hist.capacity();

    // Physical ring cursors, advanced without division. `write_slot` tracks
    // grid index i; `delay_slot` tracks i − M once the delay window leaves
    // the constant pre-history (i ≥ M: index i − M lives in slot (i − M) mod
    // capacity, starting at 0).
    let mut write_slot: usize = 0;
    let mut delay_slot: usize = 0;
    let advance = |slot: usize| if slot + 1 == capacity { 0 } else { slot + 1 };

    for i in 0..n_steps {
        let t = i as f64 * dt;
        drive.pump(i, t, &mut pump)?;

        let in_prehistory = (i as i64) < m;
        // Stage 1 at t; the delayed value is an exact grid sample.
        {
            let zd: &[Complex64] = if in_prehistory {
                &hist.initial
            } else {
                hist.slot_state(delay_slot)
            };
            vf.eval_into(&z, zd, &pump, &mut k1);
        }
        hist.store_slot(write_slot, i as i64, &z, &k1);

        // Stages 2 and 3 at t + dt/2 share one interpolated delayed value;
        // stage 4 at t + dt is a grid sample again. For i < M all three lie
        // in the constant pre-history.
        if in_prehistory {
            z_mid.copy_from_slice(&hist.initial);
        } else {
            hist.midpoint_slots(delay_slot, advance(delay_slot), dt, &mut z_mid);
        }
        for k in 0..n {
            ztmp[k] = z[k] + half * k1[k];
        }
        vf.eval_into(&ztmp, &z_mid, &pump, &mut k2);
        for k in 0..n {
            ztmp[k] = z[k] + half * k2[k];
        }
        vf.eval_into(&ztmp, &z_mid, &pump, &mut k3);

        for k in 0..n {
            ztmp[k] = z[k] + dt * k3[k];
        }
        {
            let zd: &[Complex64] = if in_prehistory {
                &hist.initial
            } else {
                hist.slot_state(advance(delay_slot))
            };
            vf.eval_into(&ztmp, zd, &pump, &mut k4);
        }

        let mut ok = true;
        for k in 0..n {
            z[k] += sixth * (k1[k] + 2.0 * (k2[k] + k3[k]) + k4[k]);
            let nsq = z[k].norm_sqr();
            ok &= nsq.is_finite() && nsq <= guard_sq;
        }
        if !ok {
            return Err(Error::Divergence {
                t: t + dt,
                guard: DIVERGENCE_GUARD,
            });
        }

        write_slot = advance(write_slot);
        if !in_prehistory {
            delay_slot = advance(delay_slot);
        }
        observer(i + 1, (i + 1) as f64 * dt, &z);
    }

    Ok(NetworkState {
        z,
        t: n_steps as f64 * dt,
    })
}

/// [`integrate_with_initial`] from the default initial condition
/// Z_k = 0.001·(1+i) on every node.
pub fn integrate<D, O>(
    config: &IntegratorConfig,
    params: &OscillatorParams,
    adjacency: &AdjacencyMatrix,
    drive: &mut D,
    t_end: f64,
    observer: O,
) -> Result<NetworkState>
where
    D: DriveFn + ?Sized,
    O: FnMut(u64, f64, &[Complex64]),
{
    let initial = vec![DEFAULT_INITIAL_Z; adjacency.node_count()];
    integrate_with_initial(config, params, adjacency, &initial, drive, t_end, observer)
}
