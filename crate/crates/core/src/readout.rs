//! Linear readout: state harvesting, ridge-regression training, NRMSE.
//!
//! The reservoir is read out once per θ: feature (k, s) of window w is node
//! k's amplitude |Z_k| sampled at t = w·T + (s+1)·θ, the end of slot s. A
//! constant bias column is appended. Training solves the ridge-regularized
//! normal equations with a Cholesky factorization; plain least squares is
//! ridge = 0.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::dde_engine::IntegratorConfig;
use crate::error::{Error, Result};
use crate::input_pipeline::TimingConstants;

/// Which scalar observable of the complex node state enters the state matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadoutObservable {
    /// Amplitude |Z_k| — the experimentally measurable quantity.
    #[default]
    Amplitude,
    /// Re and Im parts as two separate features per virtual node.
    ReIm,
}

impl ReadoutObservable {
    fn features_per_slot(self) -> usize {
        match self {
            ReadoutObservable::Amplitude => 1,
            ReadoutObservable::ReIm => 2,
        }
    }
}

/// Harvested reservoir responses: one row per input window,
/// N_R·N_V feature columns (2× for [`ReadoutObservable::ReIm`]) plus one
/// trailing bias column of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl StateMatrix {
    pub fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "state matrix {}x{} needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy of a contiguous row range, e.g. the training split.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> StateMatrix {
        StateMatrix {
            rows: range.len(),
            cols: self.cols,
            data: self.data[range.start * self.cols..range.end * self.cols].to_vec(),
        }
    }
}

/// Streaming harvester fed from the integration observer.
#[derive(Debug)]
pub struct Harvester {
    n_virtual: usize,
    steps_per_slot: u64,
    n_windows: usize,
    observable: ReadoutObservable,
    cols: usize,
    data: Vec<f64>,
    samples_seen: usize,
    next_sample_step: u64,
    bad_sample_t: Option<f64>,
}

impl Harvester {
    pub fn new(
        timing: &TimingConstants,
        config: &IntegratorConfig,
        n_windows: usize,
        observable: ReadoutObservable,
    ) -> Result<Self> {
        let steps_per_slot = timing.steps_per_slot(config)?;
        let f = observable.features_per_slot();
        let cols = timing.n_real * timing.n_virtual * f + 1;
        let mut data = vec![0.0; n_windows * cols];
        // Pre-set the bias column.
        for w in 0..n_windows {
            data[w * cols + cols - 1] = 1.0;
        }
        Ok(Self {
            n_virtual: timing.n_virtual,
            steps_per_slot,
            n_windows,
            observable,
            cols,
            data,
            samples_seen: 0,
            next_sample_step: steps_per_slot,
            bad_sample_t: None,
        })
    }

    /// Total integration time needed to fill every window.
    pub fn t_end(&self, config: &IntegratorConfig) -> f64 {
        (self.n_windows as u64 * self.n_virtual as u64 * self.steps_per_slot) as f64 * config.dt
    }

    /// Observer callback: records slot-end samples, ignores interior points.
    /// Steps must arrive in increasing order (as the integrator emits them).
    #[inline]
    pub fn observe(&mut self, step: u64, t: f64, z: &[Complex64]) {
        if step != self.next_sample_step {
            return;
        }
        self.next_sample_step += self.steps_per_slot;
        let slot_count = (step / self.steps_per_slot - 1) as usize;
        let w = slot_count / self.n_virtual;
        if w >= self.n_windows {
            return;
        }
        let s = slot_count % self.n_virtual;
        let row = &mut self.data[w * self.cols..(w + 1) * self.cols];
        match self.observable {
            ReadoutObservable::Amplitude => {
                for (k, zk) in z.iter().enumerate() {
                    let a = zk.norm();
                    if !a.is_finite() {
                        self.bad_sample_t.get_or_insert(t);
                    }
                    row[k * self.n_virtual + s] = a;
                }
            }
            ReadoutObservable::ReIm => {
                for (k, zk) in z.iter().enumerate() {
                    if !zk.re.is_finite() || !zk.im.is_finite() {
                        self.bad_sample_t.get_or_insert(t);
                    }
                    let base = 2 * (k * self.n_virtual + s);
                    row[base] = zk.re;
                    row[base + 1] = zk.im;
                }
            }
        }
        self.samples_seen = self.samples_seen.max(slot_count + 1);
    }

    /// Finalize into a state matrix; every window must have been observed.
    pub fn finish(self) -> Result<StateMatrix> {
        if let Some(t) = self.bad_sample_t {
            return Err(Error::Divergence {
                t,
                guard: crate::dde_engine::DIVERGENCE_GUARD,
            });
        }
        let needed = self.n_windows * self.n_virtual;
        if self.samples_seen < needed {
            return Err(Error::InsufficientData(format!(
                "harvested {} of {} slot samples",
                self.samples_seen, needed
            )));
        }
        StateMatrix::from_raw(self.n_windows, self.cols, self.data)
    }
}

/// Trained output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutWeights {
    pub w: Vec<f64>,
    pub ridge: f64,
}

impl ReadoutWeights {
    /// One weight per line, bias last.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,weight\n");
        for (i, w) in self.w.iter().enumerate() {
            out.push_str(&format!("{i},{w}\n"));
        }
        out
    }
}

/// Solve w = argmin ‖S·w − y‖² + ridge·‖w‖² via the normal equations with a
/// symmetric positive-definite factorization. Deterministic; the bias column
/// is regularized along with the rest.
pub fn train(states: &StateMatrix, targets: &[f64], ridge: f64) -> Result<ReadoutWeights> {
    if states.rows != targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} state rows vs {} targets",
            states.rows,
            targets.len()
        )));
    }
    if states.rows == 0 {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(Error::Config(format!("ridge must be >= 0, got {ridge}")));
    }
    if states.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData(
            "non-finite entry in state matrix".into(),
        ));
    }
    let s = DMatrix::from_row_slice(states.rows, states.cols, &states.data);
    let y = DVector::from_column_slice(targets);
    let mut gram = s.tr_mul(&s);
    for i in 0..states.cols {
        gram[(i, i)] += ridge;
    }
    let gram_diag: Vec<f64> = (0..states.cols).map(|i| gram[(i, i)]).collect();
    let rhs = s.tr_mul(&y);
    let chol = Cholesky::new(gram).ok_or(Error::NumericalRank)?;
    // The factorization tolerates pivots that are pure cancellation noise;
    // reject them the LAPACK way: d_j² must clear eps·n times the original
    // diagonal entry. NaN pivots fail the comparison too.
    let pivot_floor = (states.cols as f64).max(16.0) * f64::EPSILON;
    let l = chol.l_dirty();
    for (j, &g_jj) in gram_diag.iter().enumerate() {
        let d = l[(j, j)];
        if !(d * d > pivot_floor * g_jj) {
            return Err(Error::NumericalRank);
        }
    }
    let w = chol.solve(&rhs);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalRank);
    }
    Ok(ReadoutWeights {
        w: w.as_slice().to_vec(),
        ridge,
    })
}

/// Apply trained weights row-wise.
pub fn predict(states: &StateMatrix, weights: &ReadoutWeights) -> Result<Vec<f64>> {
    if weights.w.len() != states.cols {
        return Err(Error::DimensionMismatch(format!(
            "{} weights vs {} state columns",
            weights.w.len(),
            states.cols
        )));
    }
    Ok((0..states.rows)
        .map(|r| {
            states
                .row(r)
                .iter()
                .zip(&weights.w)
                .map(|(x, w)| x * w)
                .sum()
        })
        .collect())
}

/// Root-mean-square error normalized by the population variance of the
/// target: √( (1/N)·Σ(y − ŷ)² / σ²(y) ). 0 is perfect agreement; a static
/// prediction of the target mean scores exactly 1.
pub fn nrmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "target length {} vs prediction length {}",
            y.len(),
            y_hat.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::InsufficientData(
            "nrmse needs at least 2 samples".into(),
        ));
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var <= 0.0 || !var.is_finite() {
        return Err(Error::UndefinedMetric(
            "target series has zero variance".into(),
        ));
    }
    let mse = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    Ok((mse / var).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn feed_constant(harv: &mut Harvester, total_steps: u64, z: &[Complex64]) {
        for step in 0..=total_steps {
            harv.observe(step, step as f64 * 0.01, z);
        }
    }

    #[test]
    fn harvest_shape_contract() {
        // N_R = 1, N_V = 4, 10 windows → 10×5 (4 features + bias).
        let timing = TimingConstants::with_defaults(4, 1).unwrap();
        let cfg = IntegratorConfig::default();
        let mut h = Harvester::new(&timing, &cfg, 10, ReadoutObservable::Amplitude).unwrap();
        let z = [Complex64::new(0.6, 0.8)];
        let total = 10 * 4 * timing.steps_per_slot(&cfg).unwrap();
        feed_constant(&mut h, total, &z);
        let m = h.finish().unwrap();
        assert_eq!((m.rows(), m.cols()), (10, 5));
        for r in 0..10 {
            for c in 0..4 {
                assert_relative_eq!(m.row(r)[c], 1.0, epsilon = 1e-12); // |0.6+0.8i| = 1
            }
            assert_eq!(m.row(r)[4], 1.0);
        }
    }

    #[test]
    fn off_state_harvest_is_zero_features_bias_one() {
        let timing = TimingConstants::with_defaults(3, 2).unwrap();
        let cfg = IntegratorConfig::default();
        let mut h = Harvester::new(&timing, &cfg, 4, ReadoutObservable::Amplitude).unwrap();
        let z = [Complex64::new(0.0, 0.0); 2];
        let total = 4 * 3 * timing.steps_per_slot(&cfg).unwrap();
        feed_constant(&mut h, total, &z);
        let m = h.finish().unwrap();
        for r in 0..4 {
            assert!(m.row(r)[..6].iter().all(|&v| v == 0.0));
            assert_eq!(m.row(r)[6], 1.0);
        }
    }

    #[test]
    fn fig4_dimensions_give_257_columns() {
        let timing = TimingConstants::with_defaults(128, 2).unwrap();
        let cfg = IntegratorConfig::default();
        let h = Harvester::new(&timing, &cfg, 1, ReadoutObservable::Amplitude).unwrap();
        assert_eq!(h.cols, 257);
        let h2 = Harvester::new(&timing, &cfg, 1, ReadoutObservable::ReIm).unwrap();
        assert_eq!(h2.cols, 513);
    }

    #[test]
    fn incomplete_harvest_rejected() {
        let timing = TimingConstants::with_defaults(4, 1).unwrap();
        let cfg = IntegratorConfig::default();
        let mut h = Harvester::new(&timing, &cfg, 10, ReadoutObservable::Amplitude).unwrap();
        feed_constant(&mut h, 100, &[Complex64::new(0.1, 0.0)]);
        assert!(matches!(h.finish(), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn intercept_only_regression_recovers_mean() {
        let states = StateMatrix::from_raw(4, 1, vec![1.0; 4]).unwrap();
        let y = [1.0, 2.0, 3.0, 6.0];
        let w = train(&states, &y, 0.0).unwrap();
        assert_relative_eq!(w.w[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_linear_targets_recovered() {
        // y = S·w*: training must reach NRMSE < 1e-8 and an orthogonal residual.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (rows, cols) = (60, 7);
        let mut data: Vec<f64> = (0..rows * cols).map(|_| rng.random::<f64>()).collect();
        for r in 0..rows {
            data[r * cols + cols - 1] = 1.0;
        }
        let states = StateMatrix::from_raw(rows, cols, data).unwrap();
        let w_star: Vec<f64> = (0..cols).map(|i| (i as f64) - 2.5).collect();
        let y: Vec<f64> = (0..rows)
            .map(|r| states.row(r).iter().zip(&w_star).map(|(x, w)| x * w).sum())
            .collect();
        let w = train(&states, &y, 0.0).unwrap();
        let y_hat = predict(&states, &w).unwrap();
        assert!(nrmse(&y, &y_hat).unwrap() < 1e-8);
        // Residual orthogonal to every column.
        for c in 0..cols {
            let dot: f64 = (0..rows)
                .map(|r| states.row(r)[c] * (y[r] - y_hat[r]))
                .sum();
            assert!(dot.abs() < 1e-8, "column {c}: residual projection {dot}");
        }
    }

    #[test]
    fn huge_ridge_shrinks_weights_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let states = StateMatrix::from_raw(
            30,
            4,
            (0..120).map(|_| rng.random::<f64>()).collect(),
        )
        .unwrap();
        let y: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
        let w = train(&states, &y, 1e14).unwrap();
        assert!(w.w.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn singular_system_without_ridge_is_reported() {
        // Two identical columns make SᵀS rank deficient.
        let mut data = Vec::new();
        for r in 0..10 {
            let v = r as f64;
            data.extend_from_slice(&[v, v, 1.0]);
        }
        let states = StateMatrix::from_raw(10, 3, data).unwrap();
        let y: Vec<f64> = (0..10).map(|r| r as f64).collect();
        assert!(matches!(train(&states, &y, 0.0), Err(Error::NumericalRank)));
        // A small ridge repairs it.
        assert!(train(&states, &y, 1e-8).is_ok());
    }

    #[test]
    fn ridge_never_decreases_training_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let states = StateMatrix::from_raw(
            40,
            6,
            (0..240).map(|_| rng.random::<f64>()).collect(),
        )
        .unwrap();
        let y: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
        let mut last = -1.0;
        for ridge in [0.0, 1e-6, 1e-3, 1e-1, 10.0, 1e3] {
            let w = train(&states, &y, ridge).unwrap();
            let y_hat = predict(&states, &w).unwrap();
            let res: f64 = y
                .iter()
                .zip(&y_hat)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            assert!(res >= last - 1e-10, "ridge {ridge}: {res} < {last}");
            last = res;
        }
    }

    #[test]
    fn nrmse_calibration_points() {
        let y = [0.3, 0.7, 0.2, 0.9, 0.5];
        assert!(nrmse(&y, &y).unwrap() < 1e-12);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let mean_pred = vec![mean; y.len()];
        assert_relative_eq!(nrmse(&y, &mean_pred).unwrap(), 1.0, epsilon = 1e-12);
        // MSE 1 against population variance 0.25.
        assert_relative_eq!(
            nrmse(&[0.0, 1.0], &[1.0, 0.0]).unwrap(),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn nrmse_zero_variance_rejected() {
        assert!(matches!(
            nrmse(&[1.0, 1.0, 1.0], &[1.0, 0.9, 1.1]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    proptest! {
        #[test]
        fn nrmse_affine_invariance(
            a in prop::sample::select(vec![-3.0, -0.5, 0.7, 2.0]),
            b in -5.0f64..5.0,
            seed in 0u64..500,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
            let y_hat: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
            let base = nrmse(&y, &y_hat).unwrap();
            let ys: Vec<f64> = y.iter().map(|v| a * v + b).collect();
            let yhs: Vec<f64> = y_hat.iter().map(|v| a * v + b).collect();
            let scaled = nrmse(&ys, &yhs).unwrap();
            prop_assert!((base - scaled).abs() < 1e-9 * (1.0 + base));
        }
    }
}
