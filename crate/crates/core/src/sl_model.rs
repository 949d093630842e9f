//! Stuart-Landau network vector field.
//!
//! Instantaneous derivative of the delay-coupled amplitude equations
//!
//! ```text
//! dZ_k/dt = (λ_k(t) + iω + γ|Z_k|²) Z_k + κ e^{iφ} Σ_l G_kl Z_l(t−τ)
//! ```
//!
//! The pump enters per node and time-varying through `drive` (the injection
//! channel); `OscillatorParams::lambda_pump` holds only the base operating
//! point. All oscillators share identical parameters.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::topology::AdjacencyMatrix;

/// Parameters of one Stuart-Landau unit plus the network coupling constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    /// Bifurcation parameter λ (base pump, dimensionless). The Andronov-Hopf
    /// bifurcation of a solitary unit sits at λ = 0.
    pub lambda_pump: f64,
    /// Free-running frequency ω (rad per unit time).
    pub omega: f64,
    /// Complex nonlinearity γ; Re(γ) < 0 is the supercritical case, Im(γ)
    /// sets the amplitude-phase coupling.
    pub gamma: Complex64,
    /// Coupling strength κ.
    pub kappa: f64,
    /// Coupling phase φ in [0, 2π).
    pub phi: f64,
    /// Delay time τ > 0 of every network link.
    pub tau: f64,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        Self {
            lambda_pump: 0.015,
            omega: 1.0,
            gamma: Complex64::new(-0.1, 0.5),
            kappa: 0.04,
            phi: 0.0,
            tau: 2176.0,
        }
    }
}

impl OscillatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        for (name, v) in [
            ("lambda", self.lambda_pump),
            ("omega", self.omega),
            ("kappa", self.kappa),
            ("phi", self.phi),
            ("gamma.re", self.gamma.re),
            ("gamma.im", self.gamma.im),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

/// Network state: complex amplitudes Z_k plus the current time.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub z: Vec<Complex64>,
    pub t: f64,
}

impl NetworkState {
    /// Uniform state z0 on all nodes at t = 0; the default initial condition
    /// is the small symmetric perturbation 0.001·(1+i) off the origin.
    pub fn uniform(n: usize, z0: Complex64) -> Self {
        Self {
            z: vec![z0; n],
            t: 0.0,
        }
    }
}

/// Default initial amplitude: deterministic, escapes the off-state whenever
/// the origin is unstable.
pub const DEFAULT_INITIAL_Z: Complex64 = Complex64::new(1e-3, 1e-3);

/// The vector field with precomputed coupling structure (CSR-packed sparse
/// rows of G), reused across the many derivative evaluations of a run.
#[derive(Debug, Clone)]
pub struct VectorField {
    omega: f64,
    gamma: Complex64,
    /// κ e^{iφ}
    coupling_factor: Complex64,
    row_offsets: Vec<u32>,
    entries: Vec<(u32, f64)>,
    n: usize,
}

impl VectorField {
    pub fn new(params: &OscillatorParams, adjacency: &AdjacencyMatrix) -> Result<Self> {
        params.validate()?;
        let n = adjacency.node_count();
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut entries = Vec::new();
        row_offsets.push(0u32);
        for row in adjacency.sparse_rows() {
            for (l, w) in row {
                entries.push((l as u32, w));
            }
            row_offsets.push(entries.len() as u32);
        }
        Ok(Self {
            omega: params.omega,
            gamma: params.gamma,
            coupling_factor: Complex64::from_polar(params.kappa, params.phi),
            row_offsets,
            entries,
            n,
        })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// dZ_k/dt for every node, written into `out`. Lengths are the caller's
    /// responsibility on this hot path; [`derivative`] is the checked entry.
    #[inline]
    pub fn eval_into(
        &self,
        z: &[Complex64],
        delayed: &[Complex64],
        drive: &[f64],
        out: &mut [Complex64],
    ) {
        let offsets = &self.row_offsets;
        for (k, (o, (&zk, &dk))) in out
            .iter_mut()
            .zip(z.iter().zip(drive.iter()))
            .enumerate()
        {
            let local = (Complex64::new(dk, self.omega) + self.gamma * zk.norm_sqr()) * zk;
            let mut feed = Complex64::new(0.0, 0.0);
            for &(l, w) in &self.entries[offsets[k] as usize..offsets[k + 1] as usize] {
                feed += w * delayed[l as usize];
            }
            *o = local + self.coupling_factor * feed;
        }
    }
}

/// Checked single-shot derivative evaluation.
///
/// `drive[k]` is the instantaneous per-node pump λ_k(t) supplied by the
/// input pipeline; `delayed[l]` is Z_l(t−τ).
pub fn derivative(
    state: &NetworkState,
    delayed: &[Complex64],
    params: &OscillatorParams,
    adjacency: &AdjacencyMatrix,
    drive: &[f64],
) -> Result<Vec<Complex64>> {
    let n = adjacency.node_count();
    if state.z.len() != n || delayed.len() != n || drive.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "state ({}), delayed ({}), drive ({}) must all match adjacency dimension {}",
            state.z.len(),
            delayed.len(),
            drive.len(),
            n
        )));
    }
    let vf = VectorField::new(params, adjacency)?;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    vf.eval_into(&state.z, delayed, drive, &mut out);
    Ok(out)
}
