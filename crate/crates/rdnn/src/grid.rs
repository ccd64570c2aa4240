//! Equally spaced observation lattices on the unit cube.

use crate::error::{Error, Result};

/// An equally spaced observation grid on `(0,1]^d`.
///
/// Axis `k` with `m_k` points carries the values `{1/m_k, 2/m_k, ..., 1}`;
/// zero is excluded. Points are ordered lexicographically in the integer
/// multi-index `(j_1, ..., j_d)` with the last index fastest, and stored as a
/// flattened row-major `N x d` coordinate block.
///
/// Simulated designs use the same size on every axis (`N = m^d`); ingested
/// imaging lattices may differ per axis (e.g. 79 x 95 pixel slices).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    axis_sizes: Vec<usize>,
    points: Vec<f64>,
}

impl GridSpec {
    /// Grid with possibly different point counts per axis.
    pub fn rectangular(axis_sizes: &[usize]) -> Result<Self> {
        if axis_sizes.is_empty() {
            return Err(Error::Invalid("grid dimension must be positive".into()));
        }
        if axis_sizes.contains(&0) {
            return Err(Error::Invalid("points per axis must be positive".into()));
        }
        let d = axis_sizes.len();
        let n_points: usize = axis_sizes.iter().product();
        let mut points = Vec::with_capacity(n_points * d);
        let mut index = vec![1usize; d];
        for _ in 0..n_points {
            for (k, &j) in index.iter().enumerate() {
                points.push(j as f64 / axis_sizes[k] as f64);
            }
            // Advance the multi-index, last axis fastest.
            for k in (0..d).rev() {
                if index[k] < axis_sizes[k] {
                    index[k] += 1;
                    break;
                }
                index[k] = 1;
            }
        }
        Ok(GridSpec {
            axis_sizes: axis_sizes.to_vec(),
            points,
        })
    }

    /// Dimension of the domain.
    pub fn dim(&self) -> usize {
        self.axis_sizes.len()
    }

    /// Points per axis.
    pub fn axis_sizes(&self) -> &[usize] {
        &self.axis_sizes
    }

    /// Total number of grid points.
    pub fn n_points(&self) -> usize {
        self.points.len() / self.axis_sizes.len()
    }

    /// Coordinates of point `j` in lattice order.
    pub fn point(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.points[j * d..(j + 1) * d]
    }

    /// All coordinates as a flat row-major `N x d` slice.
    pub fn coords(&self) -> &[f64] {
        &self.points
    }

    /// Iterator over points in lattice order.
    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim())
    }

    /// The lattice values along axis `k`: `{1/m_k, ..., 1}`.
    pub fn axis_values(&self, k: usize) -> Vec<f64> {
        let m = self.axis_sizes[k];
        (1..=m).map(|j| j as f64 / m as f64).collect()
    }

    /// True when every axis has the same number of points.
    pub fn is_uniform(&self) -> bool {
        self.axis_sizes.windows(2).all(|w| w[0] == w[1])
    }
}

/// Builds the `d`-dimensional grid with `m` points per axis (`N = m^d`).
pub fn make_grid(d: usize, m: usize) -> Result<GridSpec> {
    if d == 0 {
        return Err(Error::Invalid("grid dimension must be positive".into()));
    }
    if m == 0 {
        return Err(Error::Invalid("points per axis must be positive".into()));
    }
    GridSpec::rectangular(&vec![m; d])
}
