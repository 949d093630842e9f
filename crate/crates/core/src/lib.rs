//! Reservoir computing with delay-coupled Stuart-Landau oscillator networks.
//!
//! The crate simulates networks of N_R delay-coupled Stuart-Landau oscillators,
//!
//! ```text
//! dZ_k/dt = (λ_k(t) + iω + γ|Z_k|²) Z_k + κ e^{iφ} Σ_l G_kl Z_l(t−τ)
//! ```
//!
//! drives them with time-multiplexed ("masked") input so that each oscillator
//! contributes N_V virtual nodes per input window, and trains a linear readout
//! on the harvested amplitudes. The same pipeline covers the whole
//! virtual-to-real spectrum: a single node with self-feedback (N_R = 1), mixed
//! multiplexed networks, and pure real networks (N_V = 1).
//!
//! Modules:
//! - [`sl_model`] — the network vector field
//! - [`topology`] — ring-based adjacency generators and edge-list I/O
//! - [`dde_engine`] — fixed-step RK4 integrator with Hermite-interpolated delay lookup
//! - [`input_pipeline`] — binary masks and piecewise-constant pump schedules
//! - [`tasks`] — NARMA10 and Santa Fe one-step-prediction data
//! - [`readout`] — state harvesting, ridge regression, NRMSE
//! - [`dynamics_probe`] — input-free synchronization / periodicity classification
//! - [`esn_baseline`] — time-discrete echo state network sharing the readout
//! - [`experiment_harness`] — train/test runs, 2-D (λ, φ) scans, aggregation
//! - [`config`] / [`cli`] — run manifests and the command-line front end

pub mod cli;
pub mod config;
pub mod dde_engine;
pub mod dynamics_probe;
pub mod error;
pub mod esn_baseline;
pub mod experiment_harness;
pub mod input_pipeline;
pub mod readout;
pub mod sl_model;
pub mod tasks;
pub mod topology;

pub use error::{Error, Result};
