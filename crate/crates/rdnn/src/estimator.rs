//! End-to-end estimation: architecture selection, fitting, prediction.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::loss::LossSpec;
use crate::network::NetworkParams;
use crate::rng::{derive_seed, tags};
use crate::sim::FunctionalSample;
use crate::trainer::{train, TrainConfig};

/// Network architecture driven by the sample size.
///
/// `theta` and `nu` are the rate-assumption constants fixed at 0.5; they are
/// carried here so alternative choices can be recorded alongside a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureConfig {
    /// Hidden layer count `L`.
    pub hidden_layers: usize,
    /// Common hidden width `p_l`.
    pub width: usize,
    /// Sparsity budget `s`.
    pub sparsity: usize,
    /// Dropout keep rate, the `s`-to-width ratio.
    pub dropout_keep: f64,
    pub theta: f64,
    pub nu: f64,
}

impl ArchitectureConfig {
    /// Layer sizes `(d, width, ..., width, 1)` with `hidden_layers` hidden layers.
    pub fn dims(&self, input_dim: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_layers + 2);
        dims.push(input_dim);
        dims.extend(std::iter::repeat_n(self.width, self.hidden_layers));
        dims.push(1);
        dims
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.width == 0 || self.sparsity == 0 {
            return Err(Error::Invalid("architecture sizes must be positive".into()));
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return Err(Error::Invalid(format!(
                "dropout keep must lie in (0,1], got {}",
                self.dropout_keep
            )));
        }
        Ok(())
    }
}

/// Selects the architecture from the sample size, base-2 logarithm:
/// `L = ceil(0.5 log2(n sqrt(N)))`, `p_l = ceil(10 sqrt(n) N^{1/4})`,
/// `s = ceil(5 sqrt(n) N^{1/4}) * L`, dropout keep `= ceil(5 ...)/ceil(10 ...)`.
pub fn select_architecture(n_subjects: usize, n_points: usize) -> ArchitectureConfig {
    let n = n_subjects as f64;
    let big_n = n_points as f64;
    let hidden_layers = (0.5 * (n * big_n.sqrt()).log2()).ceil() as usize;
    let hidden_layers = hidden_layers.max(1);
    let base = n.sqrt() * big_n.powf(0.25);
    let width = (10.0 * base).ceil() as usize;
    let half = (5.0 * base).ceil() as usize;
    let sparsity = half * hidden_layers;
    ArchitectureConfig {
        hidden_layers,
        width,
        sparsity,
        dropout_keep: half as f64 / width as f64,
        theta: 0.5,
        nu: 0.5,
    }
}

/// A trained estimator with its provenance.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: NetworkParams,
    pub arch: ArchitectureConfig,
    pub loss: LossSpec,
    pub train_config: TrainConfig,
    /// Per-epoch full-data objective.
    pub trace: Vec<f64>,
    /// Network output at every training grid point, no dropout.
    pub fitted_surface: Vec<f64>,
    pub seed: u64,
}

/// Fits one estimator on a sample.
///
/// The architecture defaults to `select_architecture`; the training
/// configuration defaults to the standard protocol with the dropout rate
/// taken from the architecture. The fit seed drives both initialization and
/// the training stream, overriding any seed in a supplied `TrainConfig`.
pub fn fit(
    sample: &FunctionalSample,
    loss: &LossSpec,
    arch_override: Option<&ArchitectureConfig>,
    train_override: Option<&TrainConfig>,
    seed: u64,
) -> Result<FitResult> {
    let arch = match arch_override {
        Some(a) => {
            a.validate()?;
            *a
        }
        None => select_architecture(sample.n_subjects(), sample.n_points()),
    };
    let mut cfg = match train_override {
        Some(c) => *c,
        None => TrainConfig {
            dropout_keep: arch.dropout_keep,
            ..TrainConfig::default()
        },
    };
    cfg.seed = derive_seed(seed, &[tags::TRAIN]);
    cfg.validate()?;

    let dims = arch.dims(sample.grid.dim());
    let mut init_rng = crate::rng::stream_rng(seed, tags::INIT);
    let params = NetworkParams::init(&dims, &mut init_rng)?;
    let (params, trace) = train(params, sample, loss, &cfg)?;

    let inputs = ArrayView2::from_shape(
        (sample.grid.n_points(), sample.grid.dim()),
        sample.grid.coords(),
    )
    .map_err(|e| Error::Dimension(e.to_string()))?;
    let fitted_surface = params.forward_batch(inputs, None)?.outputs;

    Ok(FitResult {
        params,
        arch,
        loss: *loss,
        train_config: cfg,
        trace,
        fitted_surface,
        seed,
    })
}

/// Evaluates a fitted network on an arbitrary grid, e.g. at a finer
/// resolution than the training lattice.
pub fn predict(result: &FitResult, target: &GridSpec) -> Result<Vec<f64>> {
    if target.dim() != result.params.input_dim() {
        return Err(Error::Dimension(format!(
            "target grid dim {} vs network input dim {}",
            target.dim(),
            result.params.input_dim()
        )));
    }
    let inputs = ArrayView2::from_shape((target.n_points(), target.dim()), target.coords())
        .map_err(|e| Error::Dimension(e.to_string()))?;
    Ok(result.params.forward_batch(inputs, None)?.outputs)
}

/// Fits one quantile estimator per level, sharing the architecture and
/// deriving an independent seed for each level from `base_seed`.
pub fn fit_quantiles(
    sample: &FunctionalSample,
    taus: &[f64],
    arch_override: Option<&ArchitectureConfig>,
    train_override: Option<&TrainConfig>,
    base_seed: u64,
) -> Result<Vec<FitResult>> {
    let shared = match arch_override {
        Some(a) => *a,
        None => select_architecture(sample.n_subjects(), sample.n_points()),
    };
    taus.iter()
        .enumerate()
        .map(|(k, &tau)| {
            let loss = LossSpec::quantile(tau)?;
            let seed = derive_seed(base_seed, &[tags::QUANTILE, k as u64]);
            fit(sample, &loss, Some(&shared), train_override, seed)
        })
        .collect()
}
