//! Convex location-defining losses and their score functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loss applied to residuals during empirical-risk minimization.
///
/// All variants are convex, nonnegative, and vanish at zero. The square loss
/// is halved so that its score is the identity; a constant factor does not
/// move the minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossSpec {
    /// Least squares, `x^2 / 2`.
    L2,
    /// Huber loss: quadratic inside `[-k, k]`, linear outside.
    Huber { k: f64 },
    /// Pinball (check) loss whose minimizer is the tau-quantile.
    Quantile { tau: f64 },
}

impl LossSpec {
    /// Huber loss with threshold `k > 0`.
    pub fn huber(k: f64) -> Result<Self> {
        if k.is_nan() || k <= 0.0 {
            return Err(Error::Invalid(format!("huber threshold must be positive, got {k}")));
        }
        Ok(LossSpec::Huber { k })
    }

    /// Pinball loss at level `tau` in `(0, 1)`.
    pub fn quantile(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Invalid(format!("quantile level must lie in (0,1), got {tau}")));
        }
        Ok(LossSpec::Quantile { tau })
    }

    /// Loss value at residual `x`.
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            LossSpec::L2 => 0.5 * x * x,
            LossSpec::Huber { k } => {
                if x.abs() <= k {
                    0.5 * x * x
                } else {
                    k * (x.abs() - 0.5 * k)
                }
            }
            LossSpec::Quantile { tau } => x * (tau - f64::from(x < 0.0)),
        }
    }

    /// Score `psi = rho'` at residual `x`.
    ///
    /// At kinks the subgradient is fixed: the quantile score at zero is `tau`,
    /// and the Huber score at `|x| = k` is `+-k` (continuous).
    pub fn score(&self, x: f64) -> f64 {
        match *self {
            LossSpec::L2 => x,
            LossSpec::Huber { k } => x.clamp(-k, k),
            LossSpec::Quantile { tau } => {
                if x < 0.0 {
                    tau - 1.0
                } else {
                    tau
                }
            }
        }
    }

    /// Short name used in reports.
    pub fn name(&self) -> String {
        match *self {
            LossSpec::L2 => "l2".to_string(),
            LossSpec::Huber { k } => format!("huber(k={k})"),
            LossSpec::Quantile { tau } => format!("quantile(tau={tau})"),
        }
    }
}
