//! Time-discrete echo state network baseline, sharing the linear readout:
//!
//! ```text
//! X(t+1) = tanh(W_res X(t) + W_in I(t))
//! ```
//!
//! W_res is a sparse random matrix rescaled to a target spectral radius,
//! W_in a dense random input vector; both are deterministic per seed.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::readout::StateMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsnConfig {
    pub n_nodes: usize,
    pub spectral_radius: f64,
    pub input_scale: f64,
    /// Fraction of nonzero reservoir entries, in (0, 1].
    pub density: f64,
    pub seed: u64,
}

impl Default for EsnConfig {
    fn default() -> Self {
        // 256 nodes matches the oscillator readout dimension N_V·N_R = 2⁸.
        Self {
            n_nodes: 256,
            spectral_radius: 0.9,
            input_scale: 1.0,
            density: 0.1,
            seed: 42,
        }
    }
}

impl EsnConfig {
    fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::Config("n_nodes must be >= 1".into()));
        }
        if !(self.spectral_radius > 0.0) {
            return Err(Error::Config(format!(
                "spectral_radius must be > 0, got {}",
                self.spectral_radius
            )));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::Config(format!(
                "density must be in (0, 1], got {}",
                self.density
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsnMatrices {
    pub w_res: DMatrix<f64>,
    pub w_in: DVector<f64>,
}

const MAX_POWER_ITERATIONS: usize = 10_000;

/// Spectral radius by power iteration on the Krylov pair (x, Ax): the third
/// vector A²x is fit as a·Ax + b·x, whose companion roots give the dominant
/// eigenvalue modulus even when it is a complex-conjugate pair (plain norm
/// ratios never settle in that case).
pub fn spectral_radius_estimate(m: &DMatrix<f64>, seed: u64) -> Result<f64> {
    let n = m.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    if x.norm() == 0.0 {
        x[0] = 1.0;
    }
    x /= x.norm();
    let mut prev = f64::NAN;
    let mut stable = 0;
    for _ in 0..MAX_POWER_ITERATIONS {
        let w = m * &x;
        let rw = w.norm();
        if rw < 1e-300 {
            return Ok(0.0); // nilpotent directions only
        }
        let u = m * &w;
        // Least squares u ≈ a·w + b·x via 2×2 normal equations.
        let ww = w.dot(&w);
        let wx = w.dot(&x);
        let xx = x.dot(&x);
        let det = ww * xx - wx * wx;
        let est = if det.abs() < 1e-14 * ww * xx {
            // x and Ax collinear: dominant eigenvalue is real, Rayleigh ratio.
            rw / x.norm()
        } else {
            let wu = w.dot(&u);
            let xu = x.dot(&u);
            let a = (wu * xx - xu * wx) / det;
            let b = (xu * ww - wu * wx) / det;
            // Roots of μ² − aμ − b.
            let disc = a * a + 4.0 * b;
            if disc >= 0.0 {
                let r = disc.sqrt();
                ((a + r) / 2.0).abs().max(((a - r) / 2.0).abs())
            } else {
                // Complex pair: |μ|² = −b.
                (-b).sqrt()
            }
        };
        if (est - prev).abs() <= 1e-9 * est.abs().max(1e-12) {
            stable += 1;
            if stable >= 3 {
                return Ok(est);
            }
        } else {
            stable = 0;
        }
        prev = est;
        x = &u / u.norm();
    }
    Err(Error::SpectralEstimate(MAX_POWER_ITERATIONS))
}

/// Build (W_res, W_in): sparse uniform [−1, 1] reservoir rescaled to the
/// target spectral radius, dense uniform [−input_scale, input_scale] input
/// weights. Deterministic per seed.
pub fn esn_build(config: &EsnConfig) -> Result<EsnMatrices> {
    config.validate()?;
    let n = config.n_nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w_res = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let keep = rng.random::<f64>() < config.density;
            let value = rng.random::<f64>() * 2.0 - 1.0;
            if keep {
                w_res[(i, j)] = value;
            }
        }
    }
    let radius = spectral_radius_estimate(&w_res, config.seed ^ 0x5eed)?;
    if radius < 1e-12 {
        return Err(Error::DegenerateData(
            "reservoir matrix has zero spectral radius; increase density or size".into(),
        ));
    }
    w_res *= config.spectral_radius / radius;
    let w_in = DVector::from_fn(n, |_, _| (rng.random::<f64>() * 2.0 - 1.0) * config.input_scale);
    Ok(EsnMatrices { w_res, w_in })
}

/// Drive the ESN over a scalar input sequence from the given initial state;
/// row t of the returned state matrix is X(t+1) (the state after consuming
/// input t) plus the trailing bias column.
pub fn esn_run_from(
    matrices: &EsnMatrices,
    inputs: &[f64],
    initial: &DVector<f64>,
) -> Result<StateMatrix> {
    let n = matrices.w_res.nrows();
    if matrices.w_res.ncols() != n || matrices.w_in.len() != n || initial.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "W_res {}x{}, W_in {}, X0 {}",
            matrices.w_res.nrows(),
            matrices.w_res.ncols(),
            matrices.w_in.len(),
            initial.len()
        )));
    }
    let mut x = initial.clone();
    let cols = n + 1;
    let mut data = Vec::with_capacity(inputs.len() * cols);
    for &u in inputs {
        let mut pre = &matrices.w_res * &x;
        pre += &matrices.w_in * u;
        x = pre.map(f64::tanh);
        data.extend_from_slice(x.as_slice());
        data.push(1.0);
    }
    StateMatrix::from_raw(inputs.len(), cols, data)
}

/// [`esn_run_from`] with the standard X(0) = 0.
pub fn esn_run(matrices: &EsnMatrices, inputs: &[f64]) -> Result<StateMatrix> {
    let n = matrices.w_res.nrows();
    esn_run_from(matrices, inputs, &DVector::zeros(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent oracle: dominant eigenvalue modulus from the full complex
    /// spectrum (Schur-based), no power iteration involved.
    fn eigen_radius(m: &DMatrix<f64>) -> f64 {
        m.clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn build_hits_target_radius() {
        for seed in [1u64, 7, 42] {
            let config = EsnConfig {
                n_nodes: 80,
                seed,
                ..Default::default()
            };
            let m = esn_build(&config).unwrap();
            let radius = eigen_radius(&m.w_res);
            assert!(
                (0.89..=0.91).contains(&radius),
                "seed {seed}: radius {radius}"
            );
        }
    }

    #[test]
    fn power_iteration_agrees_with_eigen_oracle() {
        for seed in 0..6u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1234));
            let m = DMatrix::from_fn(40, 40, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let est = spectral_radius_estimate(&m, 9).unwrap();
            let exact = eigen_radius(&m);
            assert_relative_eq!(est, exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn power_iteration_handles_rotation_matrix() {
        // Pure rotation: complex pair of modulus exactly 1; norm-ratio power
        // iteration would oscillate forever.
        let angle: f64 = 0.7;
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[angle.cos(), -angle.sin(), angle.sin(), angle.cos()],
        );
        let est = spectral_radius_estimate(&m, 3).unwrap();
        assert_relative_eq!(est, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn same_seed_same_matrices() {
        let config = EsnConfig {
            n_nodes: 30,
            ..Default::default()
        };
        assert_eq!(esn_build(&config).unwrap(), esn_build(&config).unwrap());
    }

    #[test]
    fn full_density_is_dense() {
        let config = EsnConfig {
            n_nodes: 2,
            density: 1.0,
            ..Default::default()
        };
        let m = esn_build(&config).unwrap();
        assert!(m.w_res.iter().all(|&v| v != 0.0));
    }

    #[test]
    fn zero_matrices_give_zero_states() {
        let m = EsnMatrices {
            w_res: DMatrix::zeros(3, 3),
            w_in: DVector::zeros(3),
        };
        let states = esn_run(&m, &[0.4, 0.9, 0.1]).unwrap();
        for r in 0..3 {
            assert!(states.row(r)[..3].iter().all(|&v| v == 0.0));
            assert_eq!(states.row(r)[3], 1.0);
        }
    }

    #[test]
    fn scalar_update_matches_tanh() {
        let m = EsnMatrices {
            w_res: DMatrix::zeros(1, 1),
            w_in: DVector::from_element(1, 1.0),
        };
        let states = esn_run(&m, &[0.5]).unwrap();
        assert_relative_eq!(states.row(0)[0], 0.5f64.tanh(), epsilon = 1e-15);
        assert_relative_eq!(states.row(0)[0], 0.462117, epsilon = 1e-6);
    }

    #[test]
    fn states_bounded_by_tanh() {
        let config = EsnConfig {
            n_nodes: 50,
            ..Default::default()
        };
        let m = esn_build(&config).unwrap();
        let inputs: Vec<f64> = (0..200).map(|i| ((i * 37) % 100) as f64 / 100.0).collect();
        let states = esn_run(&m, &inputs).unwrap();
        for r in 0..states.rows() {
            assert!(states.row(r)[..50].iter().all(|v| v.abs() < 1.0));
        }
    }

    #[test]
    fn echo_state_washout() {
        // Below unit spectral radius, trajectories from different initial
        // states converge on bounded inputs.
        let config = EsnConfig {
            n_nodes: 60,
            spectral_radius: 0.9,
            ..Default::default()
        };
        let m = esn_build(&config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let inputs: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let a = esn_run_from(&m, &inputs, &DVector::zeros(60)).unwrap();
        let b = esn_run_from(&m, &inputs, &DVector::from_element(60, 0.5)).unwrap();
        let last = inputs.len() - 1;
        let dist: f64 = (0..60)
            .map(|c| (a.row(last)[c] - b.row(last)[c]).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(dist < 1e-6, "washout distance {dist}");
    }
}
