//! Finite-difference verification of backpropagation.
//!
//! The oracle recomputes the batch objective under small parameter
//! perturbations and compares central differences against the analytic
//! gradient. Probes that sit next to a ReLU boundary or a loss kink are
//! rejected, since there the subgradient convention and the difference
//! quotient legitimately disagree.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::Result;
use crate::loss::LossSpec;
use crate::network::NetworkParams;

/// `(1/B) sum_b rho(y_b - f(x_b))` evaluated by plain forward passes.
pub fn batch_objective(
    params: &NetworkParams,
    inputs: ArrayView2<f64>,
    targets: &[f64],
    loss: &LossSpec,
) -> Result<f64> {
    let fwd = params.forward_batch(inputs, None)?;
    Ok(fwd
        .outputs
        .iter()
        .zip(targets)
        .map(|(&f, &y)| loss.value(y - f))
        .sum::<f64>()
        / targets.len() as f64)
}

/// Distance of each residual from the nearest kink of `loss`.
fn kink_margin(residual: f64, loss: &LossSpec) -> f64 {
    match *loss {
        LossSpec::L2 => f64::INFINITY,
        LossSpec::Huber { k } => (residual.abs() - k).abs(),
        LossSpec::Quantile { .. } => residual.abs(),
    }
}

/// Checks `count` randomly chosen parameter coordinates of a freshly drawn
/// network against central differences with step `h`.
///
/// Returns the worst relative error observed. The batch is resampled until
/// every residual is at least `1e-3` from a loss kink and every hidden
/// pre-activation at least `1e-3` from zero.
pub fn check_random_params<R: Rng>(
    dims: &[usize],
    loss: &LossSpec,
    count: usize,
    h: f64,
    rng: &mut R,
) -> Result<f64> {
    let mut params = NetworkParams::init(dims, rng)?;
    let batch_size = 8;
    let d = dims[0];

    let (inputs, targets) = loop {
        let data: Vec<f64> = (0..batch_size * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let inputs = Array2::from_shape_vec((batch_size, d), data).expect("shape");
        let targets: Vec<f64> = (0..batch_size).map(|_| rng.random_range(-2.0..2.0)).collect();
        let fwd = params.forward_batch(inputs.view(), None)?;
        let kinks_clear = fwd
            .outputs
            .iter()
            .zip(&targets)
            .all(|(&f, &y)| kink_margin(y - f, loss) > 1e-3);
        let margins_clear = (0..batch_size).all(|b| {
            let row: Vec<f64> = inputs.row(b).to_vec();
            params.activation_margin(&row).map(|m| m > 1e-3).unwrap_or(false)
        });
        if kinks_clear && margins_clear {
            break (inputs, targets);
        }
        // A boundary-adjacent draw: refresh the network and try again.
        params = NetworkParams::init(dims, rng)?;
    };

    let analytic = params.backward(inputs.view(), &targets, loss, None)?;
    let transitions = dims.len() - 1;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let l = rng.random_range(0..transitions);
        let weight_side = rng.random::<f64>() < 0.8;
        let (an, fd) = if weight_side {
            let rows = params.weights()[l].nrows();
            let cols = params.weights()[l].ncols();
            let r = rng.random_range(0..rows);
            let c = rng.random_range(0..cols);
            let an = analytic.weights[l][[r, c]];
            let orig = params.weights()[l][[r, c]];
            params.weights_mut()[l][[r, c]] = orig + h;
            let up = batch_objective(&params, inputs.view(), &targets, loss)?;
            params.weights_mut()[l][[r, c]] = orig - h;
            let down = batch_objective(&params, inputs.view(), &targets, loss)?;
            params.weights_mut()[l][[r, c]] = orig;
            (an, (up - down) / (2.0 * h))
        } else {
            let len = params.shifts()[l].len();
            let i = rng.random_range(0..len);
            let an = analytic.shifts[l][i];
            let orig = params.shifts()[l][i];
            params.shifts_mut()[l][i] = orig + h;
            let up = batch_objective(&params, inputs.view(), &targets, loss)?;
            params.shifts_mut()[l][i] = orig - h;
            let down = batch_objective(&params, inputs.view(), &targets, loss)?;
            params.shifts_mut()[l][i] = orig;
            (an, (up - down) / (2.0 * h))
        };
        let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn objective_matches_direct_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = NetworkParams::init(&[2, 4, 1], &mut rng).unwrap();
        let inputs = Array2::from_shape_vec((2, 2), vec![0.1, 0.2, -0.3, 0.4]).unwrap();
        let targets = [1.0, -1.0];
        let loss = LossSpec::L2;
        let want: f64 = targets
            .iter()
            .enumerate()
            .map(|(b, &y)| {
                let x: Vec<f64> = inputs.row(b).to_vec();
                loss.value(y - params.forward(&x, None).unwrap())
            })
            .sum::<f64>()
            / 2.0;
        let got = batch_objective(&params, inputs.view(), &targets, &loss).unwrap();
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn random_networks_pass_the_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for loss in [LossSpec::L2, LossSpec::huber(1.0).unwrap()] {
            let worst = check_random_params(&[3, 16, 1], &loss, 10, 1e-5, &mut rng).unwrap();
            assert!(worst <= 1e-4, "worst {worst}");
        }
    }
}
