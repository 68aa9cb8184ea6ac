use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::geom::Point;

/// Largest supported dyadic depth.
pub const MAX_DEPTH: u32 = 12;
/// Largest factor dimension.
pub const MAX_FACTOR_DIM: usize = 4;
/// Upper bound on the number of finest lattice cells.
pub const MAX_CELLS: usize = 1 << 24;

/// Product structure `R^N = R^{N_1} x ... x R^{N_n}` truncated to `[0,1)^N`
/// with dyadic depth `K`.
///
/// The finest lattice has `3 * 2^K` cells per axis. Exact coordinates are
/// integers in the unit `1 / (3 * 2^(K+1))`, half a finest cell, so that
/// standard corners, one-third shifted corners and cell centres are all
/// representable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridConfig {
    dims: Vec<usize>,
    depth: u32,
}

impl GridConfig {
    pub fn new(dims: Vec<usize>, depth: u32) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidConfig("at least one factor required".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d == 0 || d > MAX_FACTOR_DIM) {
            return Err(Error::InvalidConfig(format!(
                "factor dimension {d} outside 1..={MAX_FACTOR_DIM}"
            )));
        }
        if !(1..=MAX_DEPTH).contains(&depth) {
            return Err(Error::DepthExceeded(format!(
                "depth {depth} outside 1..={MAX_DEPTH}"
            )));
        }
        let total: usize = dims.iter().sum();
        let per_axis = 3usize << depth;
        let cells = (0..total).try_fold(1usize, |acc, _| acc.checked_mul(per_axis));
        match cells {
            Some(c) if c <= MAX_CELLS => {}
            _ => {
                return Err(Error::DepthExceeded(format!(
                    "lattice of {per_axis}^{total} cells exceeds {MAX_CELLS}"
                )))
            }
        }
        Ok(Self { dims, depth })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of factors `n`.
    pub fn factors(&self) -> usize {
        self.dims.len()
    }

    /// Total dimension `N`.
    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn max_factor_dim(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(1)
    }

    pub fn min_factor_dim(&self) -> usize {
        self.dims.iter().copied().min().unwrap_or(1)
    }

    /// Same factors at another depth.
    pub fn with_depth(&self, depth: u32) -> Result<Self> {
        Self::new(self.dims.clone(), depth)
    }

    /// Scale `s` of the global unit `1/(3 * 2^s)`; equals `K + 1`.
    pub fn unit_scale(&self) -> i32 {
        self.depth as i32 + 1
    }

    /// Extent of `[0,1)` in global units.
    pub fn extent(&self) -> i64 {
        3i64 << (self.depth + 1)
    }

    pub fn cells_per_axis(&self) -> usize {
        3usize << self.depth
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis().pow(self.total_dim() as u32)
    }

    /// Axis range of factor `j` (0-based) inside the global axis list.
    pub fn factor_axes(&self, j: usize) -> Range<usize> {
        let start: usize = self.dims[..j].iter().sum();
        start..start + self.dims[j]
    }

    /// Factor owning each global axis.
    pub fn axis_factors(&self) -> Vec<usize> {
        self.dims
            .iter()
            .enumerate()
            .flat_map(|(j, &d)| std::iter::repeat_n(j, d))
            .collect()
    }

    /// Point from integer coordinates in the global unit.
    pub fn point(&self, coords: &[i64]) -> Point {
        Point::new(coords.to_vec(), self.unit_scale())
    }

    /// Centre of the finest cell with the given multi-index.
    pub fn cell_center(&self, cell: &[usize]) -> Point {
        self.point(&cell.iter().map(|&i| 2 * i as i64 + 1).collect::<Vec<_>>())
    }
}
