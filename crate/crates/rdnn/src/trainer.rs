//! Mini-batch Adam over the empirical risk.
//!
//! Training examples are the `n * N` (subject, grid point) pairs, so the
//! objective is exactly the double average `(1/nN) sum_i sum_j rho(Y_ij -
//! f(X_j))`. Each epoch shuffles all pairs without replacement; every
//! mini-batch draws a fresh dropout mask. Because the network input only
//! ranges over the `N` grid points, a batch is evaluated as one matrix pass
//! over the grid with the per-example scores accumulated by grid index.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::network::{DropoutMask, Gradients, NetworkParams};
use crate::sim::FunctionalSample;

/// Optimization settings.
///
/// Defaults follow the training protocol: learning rate 0.001, batches of
/// 256 (clamped to the dataset when smaller), 200 epochs, and the standard
/// Adam moment constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Keep probability of hidden units; 1.0 disables dropout.
    pub dropout_keep: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 256,
            epochs: 200,
            dropout_keep: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Invalid("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch size must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Invalid("epoch count must be positive".into()));
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return Err(Error::Invalid(format!(
                "dropout keep must lie in (0,1], got {}",
                self.dropout_keep
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Invalid("adam betas must lie in [0,1)".into()));
        }
        Ok(())
    }
}

/// First/second moment accumulators of Adam.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Gradients,
    v: Gradients,
    t: u64,
}

impl AdamState {
    pub fn new(params: &NetworkParams) -> Self {
        AdamState {
            m: Gradients::zeros_like(params),
            v: Gradients::zeros_like(params),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update with bias correction, in place.
pub fn adam_step(
    params: &mut NetworkParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    let layers = params.weights().len();
    if grads.weights.len() != layers || state.m.weights.len() != layers {
        return Err(Error::Dimension("gradient/state layer count mismatch".into()));
    }
    for l in 0..layers {
        if grads.weights[l].dim() != params.weights()[l].dim()
            || grads.shifts[l].len() != params.shifts()[l].len()
        {
            return Err(Error::Dimension(format!("gradient shape mismatch at layer {l}")));
        }
    }
    state.t += 1;
    let bias1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bias2 = 1.0 - cfg.beta2.powi(state.t as i32);
    for l in 0..layers {
        update_slice(
            params.weights_mut()[l].as_slice_mut().expect("contiguous"),
            state.m.weights[l].as_slice_mut().expect("contiguous"),
            state.v.weights[l].as_slice_mut().expect("contiguous"),
            grads.weights[l].as_slice().expect("contiguous"),
            cfg,
            bias1,
            bias2,
        );
        update_slice(
            params.shifts_mut()[l].as_slice_mut().expect("contiguous"),
            state.m.shifts[l].as_slice_mut().expect("contiguous"),
            state.v.shifts[l].as_slice_mut().expect("contiguous"),
            grads.shifts[l].as_slice().expect("contiguous"),
            cfg,
            bias1,
            bias2,
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn update_slice(
    theta: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    g: &[f64],
    cfg: &TrainConfig,
    bias1: f64,
    bias2: f64,
) {
    for i in 0..theta.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        theta[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// All (subject, grid point) example pairs in canonical order.
pub(crate) fn all_pairs(n_subjects: usize, n_points: usize) -> Vec<(u32, u32)> {
    let mut pairs = Vec::with_capacity(n_subjects * n_points);
    for i in 0..n_subjects {
        for j in 0..n_points {
            pairs.push((i as u32, j as u32));
        }
    }
    pairs
}

/// Grid coordinates as an `N x d` input matrix.
pub(crate) fn grid_inputs(sample: &FunctionalSample) -> Array2<f64> {
    let n_pts = sample.grid.n_points();
    let d = sample.grid.dim();
    Array2::from_shape_vec((n_pts, d), sample.grid.coords().to_vec()).expect("shape")
}

/// Full-data objective without dropout, for the per-epoch trace.
pub fn full_objective(
    params: &NetworkParams,
    sample: &FunctionalSample,
    loss: &LossSpec,
    inputs: ArrayView2<f64>,
) -> Result<f64> {
    let fwd = params.forward_batch(inputs, None)?;
    let n = sample.n_subjects();
    let n_pts = sample.n_points();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n_pts {
            total += loss.value(sample.responses[[i, j]] - fwd.outputs[j]);
        }
    }
    Ok(total / (n * n_pts) as f64)
}

/// Trains `params` on `sample`, returning the fitted parameters and the
/// per-epoch full-data objective.
///
/// Fully deterministic under a fixed `cfg.seed`.
pub fn train(
    params: NetworkParams,
    sample: &FunctionalSample,
    loss: &LossSpec,
    cfg: &TrainConfig,
) -> Result<(NetworkParams, Vec<f64>)> {
    cfg.validate()?;
    let n = sample.n_subjects();
    let n_pts = sample.n_points();
    if n == 0 || n_pts == 0 {
        return Err(Error::Invalid("sample must be nonempty".into()));
    }
    if params.input_dim() != sample.grid.dim() {
        return Err(Error::Dimension(format!(
            "network input dim {} vs grid dim {}",
            params.input_dim(),
            sample.grid.dim()
        )));
    }

    let mut params = params;
    let inputs = grid_inputs(sample);
    let total = n * n_pts;
    let batch = cfg.batch_size.min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pairs = all_pairs(n, n_pts);
    let mut state = AdamState::new(&params);
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut out_grads = vec![0.0f64; n_pts];

    for _ in 0..cfg.epochs {
        pairs.shuffle(&mut rng);
        for chunk in pairs.chunks(batch) {
            let mask = if cfg.dropout_keep < 1.0 {
                Some(DropoutMask::sample(params.dims(), cfg.dropout_keep, &mut rng)?)
            } else {
                None
            };
            let fwd = params.forward_batch(inputs.view(), mask.as_ref())?;
            let scale = 1.0 / chunk.len() as f64;
            out_grads.fill(0.0);
            for &(i, j) in chunk {
                let residual = sample.responses[[i as usize, j as usize]] - fwd.outputs[j as usize];
                out_grads[j as usize] -= scale * loss.score(residual);
            }
            let grads = params.backward_from_outputs(inputs.view(), &fwd, &out_grads, mask.as_ref());
            adam_step(&mut params, &grads, &mut state, cfg)?;
        }
        trace.push(full_objective(&params, sample, loss, inputs.view())?);
    }
    Ok((params, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::sim::{simulate, MeanSpec, NoiseSpec};
    use ndarray::array;

    fn scalar_net(value: f64) -> NetworkParams {
        NetworkParams::from_parts(
            vec![1, 1, 1],
            vec![array![[0.0]], array![[0.0]]],
            vec![array![0.0], array![value]],
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut net = scalar_net(1.5);
        let before = net.clone();
        let grads = Gradients::zeros_like(&net);
        let mut state = AdamState::new(&net);
        adam_step(&mut net, &grads, &mut state, &TrainConfig::default()).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn first_step_matches_closed_form() {
        let mut net = scalar_net(0.0);
        let mut grads = Gradients::zeros_like(&net);
        grads.shifts[1][0] = 1.0;
        let mut state = AdamState::new(&net);
        let cfg = TrainConfig::default();
        adam_step(&mut net, &grads, &mut state, &cfg).unwrap();
        // With bias correction, m_hat = 1 and v_hat = 1 on the first step.
        let want = -cfg.learning_rate * 1.0 / (1.0 + cfg.epsilon);
        assert!((net.shifts()[1][0] - want).abs() < 1e-15);
    }

    #[test]
    fn two_unit_gradient_steps_decrease_monotonically() {
        let mut net = scalar_net(0.0);
        let mut grads = Gradients::zeros_like(&net);
        grads.shifts[1][0] = 1.0;
        let mut state = AdamState::new(&net);
        let cfg = TrainConfig::default();
        adam_step(&mut net, &grads, &mut state, &cfg).unwrap();
        let after_one = net.shifts()[1][0];
        adam_step(&mut net, &grads, &mut state, &cfg).unwrap();
        let after_two = net.shifts()[1][0];
        assert!(after_one < 0.0);
        assert!(after_two < after_one);
        assert!(after_two.abs() < 0.002);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut net = scalar_net(0.0);
        let other = NetworkParams::from_parts(
            vec![1, 2, 1],
            vec![array![[0.0], [0.0]], array![[0.0, 0.0]]],
            vec![array![0.0, 0.0], array![0.0]],
        )
        .unwrap();
        let grads = Gradients::zeros_like(&other);
        let mut state = AdamState::new(&net);
        assert!(adam_step(&mut net, &grads, &mut state, &TrainConfig::default()).is_err());
    }

    #[test]
    fn pair_enumeration_covers_every_example_once() {
        let pairs = all_pairs(3, 4);
        assert_eq!(pairs.len(), 12);
        let mut sorted = pairs.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 12);
    }

    #[test]
    fn constant_data_is_fit_to_within_tolerance() {
        let grid = make_grid(2, 5).unwrap();
        let truth = vec![3.0; grid.n_points()];
        let sample = simulate(&grid, &MeanSpec::Custom(truth), &NoiseSpec::none(), 10, 4).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let net = NetworkParams::init(&[2, 16, 16, 1], &mut rng).unwrap();
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 8,
            seed: 5,
            ..TrainConfig::default()
        };
        let (fitted, trace) = train(net, &sample, &LossSpec::L2, &cfg).unwrap();
        assert_eq!(trace.len(), 200);
        assert!(trace.iter().all(|v| v.is_finite()));
        assert!(trace.last().unwrap() <= trace.first().unwrap());
        for p in grid.points() {
            let f = fitted.forward(p, None).unwrap();
            assert!((f - 3.0).abs() < 0.05, "fit {f} at {p:?}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let grid = make_grid(2, 4).unwrap();
        let sample = simulate(&grid, &MeanSpec::TwoD, &NoiseSpec::standard(), 6, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let net = NetworkParams::init(&[2, 8, 1], &mut rng).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 16,
            dropout_keep: 0.5,
            seed: 11,
            ..TrainConfig::default()
        };
        let (a_params, a_trace) = train(net.clone(), &sample, &LossSpec::huber(1.0).unwrap(), &cfg).unwrap();
        let (b_params, b_trace) = train(net, &sample, &LossSpec::huber(1.0).unwrap(), &cfg).unwrap();
        assert_eq!(a_params, b_params);
        assert_eq!(a_trace, b_trace);
    }

    #[test]
    fn pinball_fit_recovers_the_gaussian_quantile() {
        let grid = make_grid(2, 10).unwrap();
        let truth = vec![0.0; grid.n_points()];
        let noise = NoiseSpec {
            gp_enabled: false,
            ..NoiseSpec::standard()
        };
        let sample = simulate(&grid, &MeanSpec::Custom(truth), &noise, 200, 31).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let net = NetworkParams::init(&[2, 16, 16, 1], &mut rng).unwrap();
        let cfg = TrainConfig {
            epochs: 150,
            seed: 13,
            ..TrainConfig::default()
        };
        let (fitted, _) = train(net, &sample, &LossSpec::quantile(0.9).unwrap(), &cfg).unwrap();
        let mean: f64 = grid
            .points()
            .map(|p| fitted.forward(p, None).unwrap())
            .sum::<f64>()
            / grid.n_points() as f64;
        // 0.9-quantile of N(0,1).
        assert!((mean - 1.2816).abs() < 0.15, "grid mean {mean}");
    }
}
