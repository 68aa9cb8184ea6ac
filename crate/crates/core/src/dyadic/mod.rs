//! Exact combinatorics of standard and one-third shifted dyadic grids.
//!
//! No floating point enters any membership or containment decision here.

mod config;
mod cube;
mod enumerate;
mod geom;
mod minimal;
mod shift;

pub use config::{GridConfig, MAX_CELLS, MAX_DEPTH, MAX_FACTOR_DIM};
pub use cube::{DyadicCube, ProductRect, RectRecord, Shift};
pub use enumerate::{enumerate_rects, RectFamily};
pub use geom::{GeoBox, Point};
pub use minimal::{cube_distance_bounds, min_rect, minimal_cube, product_minimal};
pub use shift::shift_cover;
