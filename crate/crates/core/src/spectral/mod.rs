//! Vertical scaling matrices, their Perron roots, and the sum function.
//!
//! A level-`k` matrix is stored as its `N x N^k` entry table only; the
//! `N^k x N^k` matrix places `entries[i][j]` at row `i N^{k-1} + l` for the
//! block `l N <= j < (l + 1) N` (all indices 0-based).

mod bracket;
mod extrema;
mod matrix;
mod power;
mod sum_function;

pub use bracket::{estimate_rho_s, is_monotone, rho_bracket, rho_history, RhoBracket, RhoEstimate, MONOTONE_SLACK};
pub use extrema::{build_extrema_table, build_extrema_table_capped, ExtremaTable, DEFAULT_ENTRY_CAP};
pub use matrix::{build_sampled_matrix, MatrixKind, SampleRule, ScalingMatrix};
pub use power::{
    spectral_radius, spectral_radius_with, SpectralOptions, SpectralResult, DEFAULT_MAX_ITERATIONS,
    DEFAULT_SPECTRAL_TOL,
};
pub use sum_function::{sum_function_report, GammaLevel, SumFunction, SumFunctionReport, SumPiece, CONSTANT_GAMMA_TOL};
