//! Feed-forward ReLU networks with exact backpropagation.
//!
//! A network with hidden dims `(p_0, ..., p_{L+1})`, `p_{L+1} = 1`, computes
//! `f(x) = W_L sigma(W_{L-1} ... sigma(W_0 x + u_0) ...) + u_L` with
//! `sigma(t) = max(t, 0)` applied elementwise. Batches of inputs are pushed
//! through as matrices so the hot path is a chain of GEMMs.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Weights and shifts of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    dims: Vec<usize>,
    /// `weights[l]` has shape `(p_{l+1}, p_l)`, row-major.
    weights: Vec<Array2<f64>>,
    /// `shifts[l]` has length `p_{l+1}`; the last one is the scalar output shift.
    shifts: Vec<Array1<f64>>,
}

/// Per-parameter tensors shaped like a `NetworkParams`; used for gradients
/// and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub shifts: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        Gradients {
            weights: params.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            shifts: params.shifts.iter().map(|u| Array1::zeros(u.raw_dim())).collect(),
        }
    }
}

/// Inverted-dropout keep masks for the hidden layers.
///
/// Entry `l` scales hidden activation `l+1`: dropped units carry 0, survivors
/// carry `1 / keep_rate`, so inference needs no rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    scales: Vec<Array1<f64>>,
}

impl DropoutMask {
    /// Samples one mask per hidden layer at the given keep rate.
    pub fn sample<R: Rng>(dims: &[usize], keep_rate: f64, rng: &mut R) -> Result<Self> {
        if !(keep_rate > 0.0 && keep_rate <= 1.0) {
            return Err(Error::Invalid(format!("keep rate must lie in (0,1], got {keep_rate}")));
        }
        let scale = 1.0 / keep_rate;
        let scales = dims[1..dims.len() - 1]
            .iter()
            .map(|&p| {
                Array1::from_iter((0..p).map(|_| {
                    if rng.random::<f64>() < keep_rate {
                        scale
                    } else {
                        0.0
                    }
                }))
            })
            .collect();
        Ok(DropoutMask { scales })
    }

    /// Mask that keeps every unit (identical to no dropout).
    pub fn full(dims: &[usize]) -> Self {
        DropoutMask {
            scales: dims[1..dims.len() - 1].iter().map(|&p| Array1::ones(p)).collect(),
        }
    }

    fn layer(&self, l: usize) -> &Array1<f64> {
        &self.scales[l]
    }
}

/// Activations cached by a batched forward pass.
#[derive(Debug)]
pub struct BatchForward {
    /// Network output per input row.
    pub outputs: Vec<f64>,
    /// Pre-activations `z_1 .. z_{L+1}` (the last is the output itself).
    pre: Vec<Array2<f64>>,
    /// Hidden activations `h_1 .. h_L` after ReLU and masking.
    post: Vec<Array2<f64>>,
}

impl NetworkParams {
    /// Builds a network from explicit parts, validating shapes.
    pub fn from_parts(dims: Vec<usize>, weights: Vec<Array2<f64>>, shifts: Vec<Array1<f64>>) -> Result<Self> {
        validate_dims(&dims)?;
        let transitions = dims.len() - 1;
        if weights.len() != transitions || shifts.len() != transitions {
            return Err(Error::Dimension(format!(
                "expected {transitions} weight/shift layers, got {}/{}",
                weights.len(),
                shifts.len()
            )));
        }
        for l in 0..transitions {
            if weights[l].dim() != (dims[l + 1], dims[l]) {
                return Err(Error::Dimension(format!(
                    "weight {l} has shape {:?}, expected ({}, {})",
                    weights[l].dim(),
                    dims[l + 1],
                    dims[l]
                )));
            }
            if shifts[l].len() != dims[l + 1] {
                return Err(Error::Dimension(format!(
                    "shift {l} has length {}, expected {}",
                    shifts[l].len(),
                    dims[l + 1]
                )));
            }
        }
        Ok(NetworkParams { dims, weights, shifts })
    }

    /// He-style initialization: weights `N(0, 2 / fan_in)`, shifts zero.
    pub fn init<R: Rng>(dims: &[usize], rng: &mut R) -> Result<Self> {
        validate_dims(dims)?;
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut shifts = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let (rows, cols) = (dims[l + 1], dims[l]);
            let sd = (2.0 / cols as f64).sqrt();
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                let z: f64 = StandardNormal.sample(rng);
                data.push(sd * z);
            }
            weights.push(Array2::from_shape_vec((rows, cols), data).expect("shape"));
            shifts.push(Array1::zeros(rows));
        }
        Ok(NetworkParams {
            dims: dims.to_vec(),
            weights,
            shifts,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of hidden layers `L`.
    pub fn hidden_layers(&self) -> usize {
        self.dims.len() - 2
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn shifts(&self) -> &[Array1<f64>] {
        &self.shifts
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.weights
    }

    pub(crate) fn shifts_mut(&mut self) -> &mut [Array1<f64>] {
        &mut self.shifts
    }

    /// Evaluates the network at one point.
    pub fn forward(&self, x: &[f64], mask: Option<&DropoutMask>) -> Result<f64> {
        if x.len() != self.dims[0] {
            return Err(Error::Dimension(format!(
                "input has {} coordinates, network expects {}",
                x.len(),
                self.dims[0]
            )));
        }
        let input = ArrayView2::from_shape((1, x.len()), x).expect("shape");
        Ok(self.forward_batch(input, mask)?.outputs[0])
    }

    /// Evaluates the network on a batch of input rows, caching activations.
    pub fn forward_batch(&self, inputs: ArrayView2<f64>, mask: Option<&DropoutMask>) -> Result<BatchForward> {
        if inputs.ncols() != self.dims[0] {
            return Err(Error::Dimension(format!(
                "inputs have {} columns, network expects {}",
                inputs.ncols(),
                self.dims[0]
            )));
        }
        let transitions = self.dims.len() - 1;
        let mut pre = Vec::with_capacity(transitions);
        let mut post = Vec::with_capacity(transitions - 1);
        let mut h = inputs.to_owned();
        for l in 0..transitions {
            let mut z = h.dot(&self.weights[l].t());
            z += &self.shifts[l];
            pre.push(z.clone());
            if l + 1 < transitions {
                z.mapv_inplace(|v| v.max(0.0));
                if let Some(m) = mask {
                    z *= m.layer(l);
                }
                post.push(z.clone());
                h = z;
            } else {
                h = z;
            }
        }
        let outputs = h.column(0).to_vec();
        Ok(BatchForward { outputs, pre, post })
    }

    /// Backpropagates `d objective / d output` through the cached pass.
    ///
    /// `out_grads[p]` is the derivative of the scalar objective with respect
    /// to the network output at input row `p`; any per-example averaging is
    /// already folded in. The ReLU subgradient at zero is taken as zero.
    pub fn backward_from_outputs(
        &self,
        inputs: ArrayView2<f64>,
        fwd: &BatchForward,
        out_grads: &[f64],
        mask: Option<&DropoutMask>,
    ) -> Gradients {
        let transitions = self.dims.len() - 1;
        let rows = inputs.nrows();
        debug_assert_eq!(out_grads.len(), rows);

        let mut grads = Gradients::zeros_like(self);
        let mut delta =
            Array2::from_shape_vec((rows, 1), out_grads.to_vec()).expect("shape");
        for l in (0..transitions).rev() {
            let h_below = if l == 0 { inputs } else { fwd.post[l - 1].view() };
            grads.weights[l] = delta.t().dot(&h_below);
            grads.shifts[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut next = delta.dot(&self.weights[l]);
                next.zip_mut_with(&fwd.pre[l - 1], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                if let Some(m) = mask {
                    next *= m.layer(l - 1);
                }
                delta = next;
            }
        }
        grads
    }

    /// Exact (sub)gradient of `(1/B) sum_b rho(y_b - f(x_b))` over a batch.
    pub fn backward(
        &self,
        inputs: ArrayView2<f64>,
        targets: &[f64],
        loss: &crate::loss::LossSpec,
        mask: Option<&DropoutMask>,
    ) -> Result<Gradients> {
        if inputs.nrows() == 0 {
            return Err(Error::Invalid("batch must be nonempty".into()));
        }
        if inputs.nrows() != targets.len() {
            return Err(Error::Dimension(format!(
                "{} input rows vs {} targets",
                inputs.nrows(),
                targets.len()
            )));
        }
        let fwd = self.forward_batch(inputs, mask)?;
        let scale = 1.0 / targets.len() as f64;
        let out_grads: Vec<f64> = fwd
            .outputs
            .iter()
            .zip(targets)
            .map(|(&f, &y)| -scale * loss.score(y - f))
            .collect();
        Ok(self.backward_from_outputs(inputs, &fwd, &out_grads, mask))
    }

    /// Smallest `|pre-activation|` over the hidden layers at `x`.
    ///
    /// Gradient checks reject probe points with a small margin, where a
    /// finite-difference step could cross a ReLU boundary.
    pub fn activation_margin(&self, x: &[f64]) -> Result<f64> {
        let input = ArrayView2::from_shape((1, x.len()), x)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        let fwd = self.forward_batch(input, None)?;
        let mut margin = f64::INFINITY;
        for z in &fwd.pre[..fwd.pre.len() - 1] {
            for &v in z.iter() {
                margin = margin.min(v.abs());
            }
        }
        Ok(margin)
    }

    /// Zeroes every weight and shift with magnitude below `threshold`.
    pub fn prune(&mut self, threshold: f64) {
        for w in &mut self.weights {
            w.mapv_inplace(|v| if v.abs() < threshold { 0.0 } else { v });
        }
        for u in &mut self.shifts {
            u.mapv_inplace(|v| if v.abs() < threshold { 0.0 } else { v });
        }
    }

    /// Diagnoses the sparse-class conditions at budget `s` over a probe grid.
    pub fn class_report(&self, s: usize, probe: &GridSpec) -> Result<ClassReport> {
        let nonzero_count = self
            .weights
            .iter()
            .map(|w| w.iter().filter(|v| **v != 0.0).count())
            .sum::<usize>()
            + self
                .shifts
                .iter()
                .map(|u| u.iter().filter(|v| **v != 0.0).count())
                .sum::<usize>();
        let max_entry = self
            .weights
            .iter()
            .zip(&self.shifts)
            .map(|(w, u)| {
                let wmax = w.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
                let umax = u.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
                wmax + umax
            })
            .fold(0.0f64, f64::max);
        let coords = probe.coords();
        let inputs = ArrayView2::from_shape((probe.n_points(), probe.dim()), coords)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        let fwd = self.forward_batch(inputs, None)?;
        let sup_norm_estimate = fwd.outputs.iter().fold(0.0f64, |a, &v| a.max(v.abs()));

        let sparsity_ok = nonzero_count <= s;
        let magnitude_ok = max_entry <= 1.0;
        let sup_norm_ok = sup_norm_estimate <= 1.0;
        Ok(ClassReport {
            nonzero_count,
            max_entry,
            sup_norm_estimate,
            sparsity_ok,
            magnitude_ok,
            sup_norm_ok,
            satisfies_class: sparsity_ok && magnitude_ok && sup_norm_ok,
        })
    }
}

/// How a network sits relative to the sparse class at a given budget.
///
/// The class conditions are diagnosed, never enforced: training uses dropout
/// and unconstrained Adam, and the fitted surfaces of the benchmark designs
/// deliberately exceed the unit sup-norm bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    /// Total nonzero weights and shifts.
    pub nonzero_count: usize,
    /// `max_l (||W_l||_inf + ||u_l||_inf)`.
    pub max_entry: f64,
    /// `max |f|` over the probe grid.
    pub sup_norm_estimate: f64,
    pub sparsity_ok: bool,
    pub magnitude_ok: bool,
    pub sup_norm_ok: bool,
    pub satisfies_class: bool,
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::Invalid("network needs at least input and output dims".into()));
    }
    if dims.contains(&0) {
        return Err(Error::Invalid("layer sizes must be positive".into()));
    }
    if *dims.last().unwrap() != 1 {
        return Err(Error::Invalid("output dimension must be 1".into()));
    }
    Ok(())
}
