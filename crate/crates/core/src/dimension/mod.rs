//! Oscillation sums, box counting, and the dimension verdict.

mod boxcount;
mod oscillation;
mod verdict;

pub use boxcount::{box_count, empirical_dimension, BoxCount, EmpiricalFit};
pub use oscillation::{oscillation_profile, OscillationProfile, DEFAULT_RESOLUTION_MARGIN};
pub use verdict::{
    dimension_verdict, dimension_verdict_with_grid, sufficient_condition, Branch, Diagnostics, DimensionOptions,
    DimensionReport, OscillationSummary, SufficientCondition, Verdict, DEFAULT_GRID_LEVEL, DEFAULT_K_MAX,
};
