//! Outlier injection on top of a clean functional sample.
//!
//! A contaminated subject receives an additive `Uniform(10, 20)` shift on the
//! grid points selected by a region mask: a stripe at one level of the first
//! axis, or an axis-aligned block. The draws use a stream independent of data
//! generation, so a clean/contaminated pair shares its clean part exactly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::rng::{stream_rng, tags};
use crate::sim::FunctionalSample;

/// Interval on one axis, half-open or closed on the right.
///
/// The benchmark stripe variants use both typographies: the interrupted
/// stripe is a union of half-open pieces `[(2k-2)/10, (2k-1)/10)`, while the
/// full stripe is the closed interval `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub closed_hi: bool,
}

impl Interval {
    pub fn half_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, closed_hi: false }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, closed_hi: true }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && (x < self.hi || (self.closed_hi && x == self.hi))
    }
}

/// Where outliers are injected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    /// Grid points with first coordinate exactly `a0` and second coordinate
    /// inside the interval union. 2D only.
    Stripe { a0: f64, intervals: Vec<Interval> },
    /// Grid points with every coordinate inside the closed `[lo, hi]`.
    Block { lo: f64, hi: f64 },
}

/// Full contamination specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContaminationSpec {
    pub region: Region,
    /// Fraction of subjects contaminated; `floor(r * n)` subjects are drawn.
    pub proportion: f64,
    /// Bounds of the uniform outlier magnitude.
    pub magnitude_lo: f64,
    pub magnitude_hi: f64,
}

impl ContaminationSpec {
    /// Stripe contamination with the benchmark magnitude `Uniform(10, 20)`.
    pub fn stripe(a0: f64, intervals: Vec<Interval>, proportion: f64) -> Result<Self> {
        ContaminationSpec {
            region: Region::Stripe { a0, intervals },
            proportion,
            magnitude_lo: 10.0,
            magnitude_hi: 20.0,
        }
        .validated()
    }

    /// Block contamination with the benchmark magnitude `Uniform(10, 20)`.
    pub fn block(lo: f64, hi: f64, proportion: f64) -> Result<Self> {
        ContaminationSpec {
            region: Region::Block { lo, hi },
            proportion,
            magnitude_lo: 10.0,
            magnitude_hi: 20.0,
        }
        .validated()
    }

    /// The interrupted stripe `a0 = 0.2`, `I = U_k [(2k-2)/10, (2k-1)/10)`.
    pub fn stripe_interrupted(proportion: f64) -> Result<Self> {
        let intervals = (1..=5)
            .map(|k| Interval::half_open((2 * k - 2) as f64 / 10.0, (2 * k - 1) as f64 / 10.0))
            .collect();
        Self::stripe(0.2, intervals, proportion)
    }

    /// The full stripe `a0 = 0.2`, `I = [0, 1]`.
    pub fn stripe_full(proportion: f64) -> Result<Self> {
        Self::stripe(0.2, vec![Interval::closed(0.0, 1.0)], proportion)
    }

    fn validated(self) -> Result<Self> {
        if !(0.0..=1.0).contains(&self.proportion) {
            return Err(Error::Invalid(format!(
                "contamination proportion must lie in [0,1], got {}",
                self.proportion
            )));
        }
        if self.magnitude_lo.is_nan() || self.magnitude_hi.is_nan() || self.magnitude_lo >= self.magnitude_hi {
            return Err(Error::Invalid("magnitude bounds must satisfy lo < hi".into()));
        }
        if let Region::Block { lo, hi } = self.region {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(Error::Invalid(format!("block bounds must satisfy 0 <= {lo} <= {hi} <= 1")));
            }
        }
        Ok(self)
    }

    /// Grid-point indices covered by the region.
    pub fn mask(&self, grid: &GridSpec) -> Result<Vec<usize>> {
        match &self.region {
            Region::Stripe { a0, intervals } => stripe_mask(grid, *a0, intervals),
            Region::Block { lo, hi } => block_mask(grid, *lo, *hi),
        }
    }
}

/// Draws `floor(r * n)` distinct subject indices uniformly without replacement.
pub fn select_contaminated(n: usize, r: f64, seed: u64) -> Vec<usize> {
    let count = (r * n as f64).floor() as usize;
    let count = count.min(n);
    let mut rng = stream_rng(seed, tags::CONTAM_SELECT);
    // Partial Fisher-Yates: the first `count` slots are a uniform subset.
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    let mut chosen = pool[..count].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Indices of 2D grid points on the stripe `x1 = a0`, `x2 in I`.
pub fn stripe_mask(grid: &GridSpec, a0: f64, intervals: &[Interval]) -> Result<Vec<usize>> {
    if grid.dim() != 2 {
        return Err(Error::Dimension(format!(
            "stripe regions are 2D only, grid has d = {}",
            grid.dim()
        )));
    }
    let m = grid.axis_sizes()[0];
    let level = a0 * m as f64;
    if (level - level.round()).abs() > 1e-9 || level.round() < 1.0 || level.round() > m as f64 {
        return Err(Error::Invalid(format!("stripe level {a0} is not on the (0,1] lattice of {m} points")));
    }
    let j1 = level.round() as usize;
    Ok(grid
        .points()
        .enumerate()
        .filter(|(_, p)| {
            let on_level = (p[0] * m as f64).round() as usize == j1;
            on_level && intervals.iter().any(|iv| iv.contains(p[1]))
        })
        .map(|(j, _)| j)
        .collect())
}

/// Indices of grid points with every coordinate in the closed `[a0, a1]`.
pub fn block_mask(grid: &GridSpec, a0: f64, a1: f64) -> Result<Vec<usize>> {
    if !(0.0 <= a0 && a0 <= a1 && a1 <= 1.0) {
        return Err(Error::Invalid(format!("block bounds must satisfy 0 <= {a0} <= {a1} <= 1")));
    }
    Ok(grid
        .points()
        .enumerate()
        .filter(|(_, p)| p.iter().all(|&c| c >= a0 && c <= a1))
        .map(|(j, _)| j)
        .collect())
}

/// Adds independent uniform outliers to the masked entries of the selected
/// subjects. Everything else, including the truth surface, is untouched.
pub fn apply(sample: &FunctionalSample, spec: &ContaminationSpec, seed: u64) -> Result<FunctionalSample> {
    let mask = spec.mask(&sample.grid)?;
    let subjects = select_contaminated(sample.n_subjects(), spec.proportion, seed);
    let mut out = sample.clone();
    let mut rng = stream_rng(seed, tags::CONTAM_MAGNITUDE);
    let span = spec.magnitude_hi - spec.magnitude_lo;
    for &i in &subjects {
        for &j in &mask {
            out.responses[[i, j]] += spec.magnitude_lo + span * rng.random::<f64>();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::sim::{simulate, MeanSpec, NoiseSpec};

    #[test]
    fn selection_size_is_floor_of_r_n() {
        let s = select_contaminated(50, 0.2, 1);
        assert_eq!(s.len(), 10);
        let mut dedup = s.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 10);
        assert!(s.iter().all(|&i| i < 50));
        assert!(select_contaminated(100, 0.0, 1).is_empty());
        assert_eq!(select_contaminated(10, 1.0, 1), (0..10).collect::<Vec<_>>());
    }

    // Brute-force enumeration of lattice points against interval arithmetic,
    // used to pin the stripe mask counts before trusting the implementation.
    fn stripe_oracle(m: usize, a0: f64, intervals: &[Interval]) -> Vec<(usize, usize)> {
        let mut hits = Vec::new();
        for j1 in 1..=m {
            for j2 in 1..=m {
                let x1 = j1 as f64 / m as f64;
                let x2 = j2 as f64 / m as f64;
                if (x1 - a0).abs() < 1e-12 && intervals.iter().any(|iv| iv.contains(x2)) {
                    hits.push((j1, j2));
                }
            }
        }
        hits
    }

    #[test]
    fn full_stripe_covers_the_whole_level() {
        let g = make_grid(2, 10).unwrap();
        let mask = stripe_mask(&g, 0.2, &[Interval::closed(0.0, 1.0)]).unwrap();
        assert_eq!(mask.len(), 10);
        for &j in &mask {
            assert!((g.point(j)[0] - 0.2).abs() < 1e-12);
        }
        assert_eq!(stripe_oracle(10, 0.2, &[Interval::closed(0.0, 1.0)]).len(), 10);
    }

    #[test]
    fn interrupted_stripe_matches_enumeration_oracle() {
        let g = make_grid(2, 10).unwrap();
        let intervals: Vec<Interval> = (1..=5)
            .map(|k| Interval::half_open((2 * k - 2) as f64 / 10.0, (2 * k - 1) as f64 / 10.0))
            .collect();
        let oracle = stripe_oracle(10, 0.2, &intervals);
        // Lattice values in the half-open union: 0.2, 0.4, 0.6, 0.8 (left
        // endpoints in; 0.1, 0.3, ... excluded by the open right ends).
        assert_eq!(oracle.len(), 4);
        let coords: Vec<usize> = oracle.iter().map(|&(_, j2)| j2).collect();
        assert_eq!(coords, vec![2, 4, 6, 8]);

        let mask = stripe_mask(&g, 0.2, &intervals).unwrap();
        assert_eq!(mask.len(), 4);
        let got: Vec<f64> = mask.iter().map(|&j| g.point(j)[1]).collect();
        assert_eq!(got, vec![0.2, 0.4, 0.6, 0.8]);
    }

    #[test]
    fn off_lattice_stripe_level_is_rejected() {
        let g = make_grid(2, 10).unwrap();
        assert!(stripe_mask(&g, 0.25, &[Interval::closed(0.0, 1.0)]).is_err());
    }

    #[test]
    fn block_masks_match_enumeration() {
        let g2 = make_grid(2, 10).unwrap();
        assert_eq!(block_mask(&g2, 0.1, 0.3).unwrap().len(), 9);
        assert_eq!(block_mask(&g2, 0.1, 0.5).unwrap().len(), 25);
        let g3 = make_grid(3, 5).unwrap();
        let mask = block_mask(&g3, 0.10, 0.30).unwrap();
        assert_eq!(mask.len(), 1);
        assert_eq!(g3.point(mask[0]), &[0.2, 0.2, 0.2]);
    }

    #[test]
    fn zero_proportion_is_the_identity() {
        let g = make_grid(2, 10).unwrap();
        let sample = simulate(&g, &MeanSpec::TwoD, &NoiseSpec::standard(), 20, 3).unwrap();
        let spec = ContaminationSpec::block(0.1, 0.3, 0.0).unwrap();
        let out = apply(&sample, &spec, 9).unwrap();
        assert_eq!(out.responses, sample.responses);
    }

    #[test]
    fn empty_interval_union_is_the_identity() {
        let g = make_grid(2, 10).unwrap();
        let sample = simulate(&g, &MeanSpec::TwoD, &NoiseSpec::standard(), 8, 2).unwrap();
        let spec = ContaminationSpec::stripe(0.2, vec![], 0.5).unwrap();
        assert!(spec.mask(&g).unwrap().is_empty());
        let out = apply(&sample, &spec, 1).unwrap();
        assert_eq!(out.responses, sample.responses);
    }

    #[test]
    fn contaminated_entries_shift_by_uniform_magnitudes() {
        let g = make_grid(2, 10).unwrap();
        let sample = simulate(&g, &MeanSpec::TwoD, &NoiseSpec::standard(), 50, 3).unwrap();
        let spec = ContaminationSpec::block(0.1, 0.3, 0.1).unwrap();
        let out = apply(&sample, &spec, 17).unwrap();

        let mut modified = 0usize;
        for i in 0..50 {
            for j in 0..100 {
                let before = sample.responses[[i, j]];
                let after = out.responses[[i, j]];
                if after != before {
                    modified += 1;
                    let delta = after - before;
                    assert!((10.0..20.0).contains(&delta), "delta {delta}");
                }
            }
        }
        // floor(0.1 * 50) subjects x 9 masked points.
        assert_eq!(modified, 45);
        assert_eq!(out.truth, sample.truth);
    }

    #[test]
    fn modified_count_is_subjects_times_mask() {
        let g = make_grid(2, 10).unwrap();
        let sample = simulate(&g, &MeanSpec::TwoD, &NoiseSpec::standard(), 23, 5).unwrap();
        let spec = ContaminationSpec::stripe_full(0.2).unwrap();
        let out = apply(&sample, &spec, 5).unwrap();
        let diff = out
            .responses
            .iter()
            .zip(sample.responses.iter())
            .filter(|(a, b)| a != b)
            .count();
        let subjects = select_contaminated(23, 0.2, 5).len();
        let mask = spec.mask(&g).unwrap().len();
        assert_eq!(diff, subjects * mask);
    }

    #[test]
    fn proportion_outside_unit_interval_is_rejected() {
        assert!(ContaminationSpec::block(0.1, 0.3, 1.5).is_err());
        assert!(ContaminationSpec::block(0.5, 0.1, 0.1).is_err());
    }
}
