//! Synthetic multi-dimensional functional data.
//!
//! Responses follow `Y_ij = f_0(X_j) + eta_i(X_j) + e_ij`: a fixed location
//! surface, an optional zero-mean Gaussian-process deviation per subject, and
//! i.i.d. measurement errors that may be Gaussian or a heavy-tailed mixture.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::rng::subject_rng;

/// 2D location surface `-8 [1 + exp{cot(x1^2) cos(2 pi x2)}]^{-1}`.
///
/// Undefined where `sin(x1^2) = 0`; on grids in `(0,1]^2` the argument
/// `x1^2` stays inside `(0, 1]`, where the cotangent is always defined.
pub fn mean_2d(x: &[f64]) -> Result<f64> {
    if x.len() != 2 {
        return Err(Error::Dimension(format!("mean_2d expects 2 coordinates, got {}", x.len())));
    }
    let t = x[0] * x[0];
    let s = t.sin();
    if s == 0.0 {
        return Err(Error::Invalid(format!("cot(x1^2) undefined at x1 = {}", x[0])));
    }
    let cot = t.cos() / s;
    Ok(-8.0 / (1.0 + (cot * (2.0 * std::f64::consts::PI * x[1]).cos()).exp()))
}

/// 3D location surface `exp(x1/3 + x2/3 + sqrt(x3 + 0.1))`.
pub fn mean_3d(x: &[f64]) -> Result<f64> {
    if x.len() != 3 {
        return Err(Error::Dimension(format!("mean_3d expects 3 coordinates, got {}", x.len())));
    }
    if x[2] < -0.1 {
        return Err(Error::Invalid(format!("sqrt(x3 + 0.1) undefined at x3 = {}", x[2])));
    }
    Ok((x[0] / 3.0 + x[1] / 3.0 + (x[2] + 0.1).sqrt()).exp())
}

/// Location surface used by the simulator.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanSpec {
    /// The 2D preset surface.
    TwoD,
    /// The 3D preset surface.
    ThreeD,
    /// A tabulated surface given by its values on the grid, lattice order.
    Custom(Vec<f64>),
}

impl MeanSpec {
    /// Evaluates the surface on every grid point.
    pub fn truth_on(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        match self {
            MeanSpec::TwoD => {
                if grid.dim() != 2 {
                    return Err(Error::Dimension(format!(
                        "2d mean surface on a {}-dimensional grid",
                        grid.dim()
                    )));
                }
                grid.points().map(mean_2d).collect()
            }
            MeanSpec::ThreeD => {
                if grid.dim() != 3 {
                    return Err(Error::Dimension(format!(
                        "3d mean surface on a {}-dimensional grid",
                        grid.dim()
                    )));
                }
                grid.points().map(mean_3d).collect()
            }
            MeanSpec::Custom(values) => {
                if values.len() != grid.n_points() {
                    return Err(Error::Dimension(format!(
                        "tabulated surface has {} values for {} grid points",
                        values.len(),
                        grid.n_points()
                    )));
                }
                Ok(values.clone())
            }
        }
    }

    /// Short identifier stored in generation records.
    pub fn id(&self) -> &'static str {
        match self {
            MeanSpec::TwoD => "2d",
            MeanSpec::ThreeD => "3d",
            MeanSpec::Custom(_) => "custom",
        }
    }
}

/// Measurement-error law for `e_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErrorKind {
    /// `scale * N(0,1)`.
    Gaussian,
    /// `N(0,1)` with probability `1 - weight`, `Cauchy(0, scale)` otherwise.
    MixtureCauchy { weight: f64 },
    /// `N(0,1)` with probability `1 - weight`, `Slash(0, scale)` otherwise,
    /// where `Slash(0, s) = s * Z / U` with `Z ~ N(0,1)`, `U ~ Uniform(0,1]`.
    MixtureSlash { weight: f64 },
}

/// Error-process specification: process deviation plus measurement errors.
///
/// `error_scale` is the standard deviation of the Gaussian kind and the scale
/// of the heavy-tailed mixture component (the mixtures keep their Gaussian
/// part at `N(0,1)`, with the heavy component scale fixed to 0.5 in the
/// benchmark designs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub gp_enabled: bool,
    pub error_kind: ErrorKind,
    pub error_scale: f64,
}

impl NoiseSpec {
    /// Gaussian process deviation plus standard normal measurement errors.
    pub fn standard() -> Self {
        NoiseSpec {
            gp_enabled: true,
            error_kind: ErrorKind::Gaussian,
            error_scale: 1.0,
        }
    }

    /// No noise at all: responses equal the location surface.
    pub fn none() -> Self {
        NoiseSpec {
            gp_enabled: false,
            error_kind: ErrorKind::Gaussian,
            error_scale: 0.0,
        }
    }

    /// Normal-Cauchy mixture errors with the given Cauchy weight.
    pub fn mixture_cauchy(weight: f64) -> Result<Self> {
        Self::mixture(ErrorKind::MixtureCauchy { weight }, weight)
    }

    /// Normal-Slash mixture errors with the given Slash weight.
    pub fn mixture_slash(weight: f64) -> Result<Self> {
        Self::mixture(ErrorKind::MixtureSlash { weight }, weight)
    }

    fn mixture(kind: ErrorKind, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::Invalid(format!("mixture weight must lie in [0,1], got {weight}")));
        }
        Ok(NoiseSpec {
            gp_enabled: true,
            error_kind: kind,
            error_scale: 0.5,
        })
    }

    /// Validates field ranges.
    pub fn validate(&self) -> Result<()> {
        if self.error_scale < 0.0 {
            return Err(Error::Invalid(format!(
                "error scale must be nonnegative, got {}",
                self.error_scale
            )));
        }
        match self.error_kind {
            ErrorKind::MixtureCauchy { weight } | ErrorKind::MixtureSlash { weight } => {
                if !(0.0..=1.0).contains(&weight) {
                    return Err(Error::Invalid(format!(
                        "mixture weight must lie in [0,1], got {weight}"
                    )));
                }
            }
            ErrorKind::Gaussian => {}
        }
        Ok(())
    }

    /// Draws one measurement error.
    pub fn draw_error<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.error_kind {
            ErrorKind::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                self.error_scale * z
            }
            ErrorKind::MixtureCauchy { weight } => {
                let u: f64 = rng.random();
                if u < weight {
                    Cauchy::new(0.0, self.error_scale).expect("validated scale").sample(rng)
                } else {
                    StandardNormal.sample(rng)
                }
            }
            ErrorKind::MixtureSlash { weight } => {
                let u: f64 = rng.random();
                if u < weight {
                    let z: f64 = StandardNormal.sample(rng);
                    // 1 - U in (0,1] avoids division by zero.
                    let denom = 1.0 - rng.random::<f64>();
                    self.error_scale * z / denom
                } else {
                    StandardNormal.sample(rng)
                }
            }
        }
    }
}

/// One draw of the zero-mean process with covariance
/// `G_0(x, x') = sum_k cos(2 pi (x_k - x'_k))`.
///
/// The kernel has exact rank `2d`, so a draw is represented in closed form as
/// `eta(x) = sum_k zeta_1k cos(2 pi x_k) + zeta_2k sin(2 pi x_k)` with i.i.d.
/// standard normal coefficients; the cosine addition identity recovers `G_0`
/// exactly, with no grid discretization or Cholesky jitter involved.
#[derive(Debug, Clone)]
pub struct GpSurface {
    coeffs: Vec<(f64, f64)>,
}

impl GpSurface {
    /// Draws the `2d` coefficients from `rng`.
    pub fn sample<R: Rng>(d: usize, rng: &mut R) -> Self {
        let coeffs = (0..d)
            .map(|_| {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                (a, b)
            })
            .collect();
        GpSurface { coeffs }
    }

    /// Evaluates the draw at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(x)
            .map(|(&(a, b), &xk)| {
                let t = 2.0 * std::f64::consts::PI * xk;
                a * t.cos() + b * t.sin()
            })
            .sum()
    }

    /// The covariance function this process realizes.
    pub fn kernel(x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(&a, &b)| (2.0 * std::f64::consts::PI * (a - b)).cos())
            .sum()
    }
}

/// One process draw evaluated on every grid point.
pub fn sample_gp(grid: &GridSpec, seed: u64) -> Vec<f64> {
    let mut rng = subject_rng(seed, 0);
    let surface = GpSurface::sample(grid.dim(), &mut rng);
    grid.points().map(|p| surface.eval(p)).collect()
}

/// Record of how a sample was generated.
#[derive(Debug, Clone, PartialEq)]
pub struct GenMeta {
    pub mean_id: String,
    pub noise: NoiseSpec,
    pub seed: u64,
}

/// `n` subjects observed on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    pub grid: GridSpec,
    /// `n x N` response matrix, one row per subject.
    pub responses: Array2<f64>,
    /// The location surface on the grid, when known.
    pub truth: Option<Vec<f64>>,
    /// Generation record; absent for ingested data.
    pub meta: Option<GenMeta>,
}

impl FunctionalSample {
    pub fn n_subjects(&self) -> usize {
        self.responses.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.responses.ncols()
    }
}

/// One subject's response row under the per-subject substream scheme.
///
/// The row depends only on `(seed, subject)`: the subject's stream first
/// yields the process coefficients, then one measurement error per grid
/// point in lattice order.
pub fn subject_row(grid: &GridSpec, truth: &[f64], noise: &NoiseSpec, seed: u64, subject: usize) -> Vec<f64> {
    let mut rng = subject_rng(seed, subject);
    let gp = GpSurface::sample(grid.dim(), &mut rng);
    grid.points()
        .zip(truth)
        .map(|(x, &f0)| {
            let deviation = if noise.gp_enabled { gp.eval(x) } else { 0.0 };
            f0 + deviation + noise.draw_error(&mut rng)
        })
        .collect()
}

/// Generates a functional sample of `n` subjects.
///
/// Identical arguments produce bit-identical samples; subjects are drawn on
/// disjoint substreams so generation order does not matter.
pub fn simulate(
    grid: &GridSpec,
    mean: &MeanSpec,
    noise: &NoiseSpec,
    n: usize,
    seed: u64,
) -> Result<FunctionalSample> {
    if n == 0 {
        return Err(Error::Invalid("subject count must be positive".into()));
    }
    noise.validate()?;
    let truth = mean.truth_on(grid)?;
    let n_points = grid.n_points();

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| subject_row(grid, &truth, noise, seed, i))
        .collect();

    let mut responses = Array2::zeros((n, n_points));
    for (i, row) in rows.into_iter().enumerate() {
        responses.row_mut(i).assign(&ndarray::Array1::from(row));
    }

    Ok(FunctionalSample {
        grid: grid.clone(),
        responses,
        truth: Some(truth),
        meta: Some(GenMeta {
            mean_id: mean.id().to_string(),
            noise: *noise,
            seed,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Independent re-implementation of the 2D surface used as an oracle.
    fn mean_2d_oracle(x1: f64, x2: f64) -> f64 {
        let t = x1 * x1;
        let cot = 1.0 / t.tan();
        let inner = cot * (2.0 * std::f64::consts::PI * x2).cos();
        -8.0 * (1.0 + inner.exp()).recip()
    }

    fn mean_3d_oracle(x1: f64, x2: f64, x3: f64) -> f64 {
        f64::exp(x1 / 3.0 + x2 / 3.0 + f64::sqrt(x3 + 0.1))
    }

    #[test]
    fn mean_2d_matches_hand_evaluations() {
        assert!((mean_2d(&[0.5, 0.5]).unwrap() - -7.8437).abs() < 1e-4);
        assert!((mean_2d(&[1.0, 0.25]).unwrap() - -4.0).abs() < 1e-12);
        assert!((mean_2d(&[1.0, 0.75]).unwrap() - -4.0).abs() < 1e-12);
    }

    #[test]
    fn mean_2d_matches_independent_reimplementation_on_grid() {
        let g = make_grid(2, 10).unwrap();
        for p in g.points() {
            let got = mean_2d(p).unwrap();
            let want = mean_2d_oracle(p[0], p[1]);
            assert!((got - want).abs() < 1e-12, "{p:?}: {got} vs {want}");
        }
    }

    #[test]
    fn mean_2d_rejects_degenerate_points() {
        assert!(mean_2d(&[0.0, 0.5]).is_err());
        assert!(mean_2d(&[0.5]).is_err());
    }

    #[test]
    fn mean_3d_matches_hand_evaluations() {
        assert!((mean_3d(&[0.0, 0.0, 0.0]).unwrap() - 1.3720).abs() < 1e-4);
        assert!((mean_3d(&[1.0, 1.0, 1.0]).unwrap() - 5.5590).abs() < 1e-3);
        assert!(mean_3d(&[1.0, 1.0, 1.0]).unwrap() > mean_3d(&[0.2, 0.2, 0.2]).unwrap());
    }

    #[test]
    fn mean_3d_matches_independent_reimplementation_on_grid() {
        let g = make_grid(3, 5).unwrap();
        for p in g.points() {
            let got = mean_3d(p).unwrap();
            let want = mean_3d_oracle(p[0], p[1], p[2]);
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn gp_pointwise_variance_equals_dimension() {
        let reps = 10_000;
        for d in [2usize, 3] {
            let x = vec![0.3; d];
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut sum_sq = 0.0;
            for _ in 0..reps {
                let v = GpSurface::sample(d, &mut rng).eval(&x);
                sum_sq += v * v;
            }
            let var = sum_sq / reps as f64;
            assert!((var - d as f64).abs() < 0.05, "d={d}: var {var}");
        }
    }

    #[test]
    fn gp_covariance_matches_kernel_at_fixed_pair() {
        let x = [0.1, 0.1];
        let y = [0.3, 0.1];
        let want = GpSurface::kernel(&x, &y);
        assert!((want - 1.3090).abs() < 1e-4);
        let reps = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut acc = 0.0;
        for _ in 0..reps {
            let s = GpSurface::sample(2, &mut rng);
            acc += s.eval(&x) * s.eval(&y);
        }
        let emp = acc / reps as f64;
        assert!((emp - want).abs() < 0.05, "empirical {emp} vs kernel {want}");
    }

    #[test]
    fn sample_gp_is_deterministic_on_the_grid() {
        let g = make_grid(2, 6).unwrap();
        let a = sample_gp(&g, 19);
        let b = sample_gp(&g, 19);
        assert_eq!(a, b);
        assert_eq!(a.len(), 36);
        assert_ne!(a, sample_gp(&g, 20));
        // Matches an explicit draw from the same substream.
        let mut rng = crate::rng::subject_rng(19, 0);
        let surface = GpSurface::sample(2, &mut rng);
        for (v, p) in a.iter().zip(g.points()) {
            assert_eq!(*v, surface.eval(p));
        }
    }

    #[test]
    fn gp_draw_is_periodic_with_period_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = GpSurface::sample(2, &mut rng);
        let a = s.eval(&[0.3, 0.4]);
        let b = s.eval(&[1.3, 0.4]);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn zero_noise_reproduces_truth_exactly() {
        let g = make_grid(2, 5).unwrap();
        let sample = simulate(&g, &MeanSpec::TwoD, &NoiseSpec::none(), 4, 9).unwrap();
        let truth = sample.truth.as_ref().unwrap();
        for i in 0..4 {
            for (j, &t) in truth.iter().enumerate() {
                assert_eq!(sample.responses[[i, j]], t);
            }
        }
    }

    #[test]
    fn simulated_shapes_and_finiteness() {
        let g = make_grid(2, 10).unwrap();
        let sample = simulate(&g, &MeanSpec::TwoD, &NoiseSpec::standard(), 50, 7).unwrap();
        assert_eq!(sample.responses.dim(), (50, 100));
        assert!(sample.responses.iter().all(|v| v.is_finite()));
        assert_eq!(sample.truth.as_ref().unwrap().len(), 100);
    }

    #[test]
    fn full_cauchy_mixture_has_median_near_zero() {
        let noise = NoiseSpec::mixture_cauchy(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut draws: Vec<f64> = (0..10_000).map(|_| noise.draw_error(&mut rng)).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = draws[draws.len() / 2];
        assert!(median > -0.1 && median < 0.1, "median {median}");
    }

    #[test]
    fn simulation_is_deterministic() {
        let g = make_grid(2, 6).unwrap();
        let noise = NoiseSpec::mixture_slash(0.3).unwrap();
        let a = simulate(&g, &MeanSpec::TwoD, &noise, 8, 123).unwrap();
        let b = simulate(&g, &MeanSpec::TwoD, &noise, 8, 123).unwrap();
        assert_eq!(a.responses, b.responses);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn rows_follow_per_subject_substreams() {
        let g = make_grid(2, 4).unwrap();
        let noise = NoiseSpec::standard();
        let sample = simulate(&g, &MeanSpec::TwoD, &noise, 5, 42).unwrap();
        let truth = sample.truth.as_ref().unwrap();
        for i in 0..5 {
            let row = subject_row(&g, truth, &noise, 42, i);
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(sample.responses[[i, j]], v);
            }
        }
    }

    #[test]
    fn mean_dimension_mismatch_is_rejected() {
        let g = make_grid(3, 4).unwrap();
        assert!(simulate(&g, &MeanSpec::TwoD, &NoiseSpec::standard(), 3, 0).is_err());
        assert!(MeanSpec::Custom(vec![0.0; 10]).truth_on(&g).is_err());
    }
}
