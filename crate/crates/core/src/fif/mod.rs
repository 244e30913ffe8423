//! Interpolation data, normalization to the unit interval, and evaluation of
//! the fractal interpolation function through its functional equation.

mod grid;
mod problem;
mod system;

pub use grid::{
    evaluate_grid, evaluate_point, evaluate_point_exact, FifGrid, GridOptions, PointValue, SweepOrder, DEFAULT_GRID_TOL,
};
pub use problem::{validate, InterpolationProblem, ValidationReport, SPACING_TOL};
pub use system::{normalize, NormalizedSystem};
