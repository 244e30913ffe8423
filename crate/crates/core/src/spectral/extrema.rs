use rayon::prelude::*;

use crate::error::{FifError, Result};
use crate::fif::NormalizedSystem;

/// Default cap on `N^{k+1}`, the number of table entries.
pub const DEFAULT_ENTRY_CAP: u64 = 100_000_000;

/// Extrema of `|S|` over the intervals
/// `I^k_{i,j} = [i/N + j/N^{k+1}, i/N + (j+1)/N^{k+1}]`, 0-based `i < N`, `j < N^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremaTable {
    n: usize,
    level: u32,
    upper: Vec<f64>,
    lower: Vec<f64>,
    certified_gap: f64,
}

impl ExtremaTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// `N^k`, the number of columns.
    pub fn columns(&self) -> usize {
        self.upper.len() / self.n
    }

    /// Row-major `N x N^k` maxima.
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Row-major `N x N^k` minima.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_at(&self, i: usize, j: usize) -> f64 {
        self.upper[i * self.columns() + j]
    }

    pub fn lower_at(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.columns() + j]
    }

    /// Guaranteed bound on `upper - lower` per entry: `lambda_S N^{-k-1}`
    /// (plus twice the scan tolerance for black-box `S`).
    pub fn certified_gap(&self) -> f64 {
        self.certified_gap
    }

    /// `max_j sum_i upper[i][j]`.
    pub fn gamma_upper(&self) -> f64 {
        column_sums(&self.upper, self.n).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `min_j sum_i lower[i][j]`.
    pub fn gamma_lower(&self) -> f64 {
        column_sums(&self.lower, self.n).fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.upper, self.lower)
    }
}

fn column_sums(entries: &[f64], n: usize) -> impl Iterator<Item = f64> + '_ {
    let cols = entries.len() / n;
    (0..cols).map(move |j| (0..n).map(|i| entries[i * cols + j]).sum())
}

pub(crate) fn checked_columns(n: usize, level: u32, cap: u64) -> Result<usize> {
    if level < 1 {
        return Err(FifError::DomainError("matrix level must be at least 1".into()));
    }
    (n as u64)
        .checked_pow(level + 1)
        .filter(|&entries| entries <= cap)
        .map(|entries| (entries / n as u64) as usize)
        .ok_or_else(|| FifError::ResourceLimit {
            what: format!("{n}^{} table entries exceed the cap of {cap}", level + 1),
            achieved_width: None,
        })
}

pub fn build_extrema_table(system: &NormalizedSystem, level: u32) -> Result<ExtremaTable> {
    build_extrema_table_capped(system, level, DEFAULT_ENTRY_CAP)
}

pub fn build_extrema_table_capped(system: &NormalizedSystem, level: u32, cap: u64) -> Result<ExtremaTable> {
    let n = system.n();
    let cols = checked_columns(n, level, cap)?;
    let den = (n * cols) as u64;
    let extrema = (0..n * cols)
        .into_par_iter()
        .map(|flat| {
            let start = flat as u64;
            system.scaling().abs_extrema_rational(start, start + 1, den)
        })
        .collect::<Result<Vec<_>>>()?;
    let upper = extrema.iter().map(|e| e.max).collect();
    let lower = extrema.iter().map(|e| e.min).collect();
    let certified_gap = system.lipschitz() / den as f64 + 2.0 * system.scaling().extrema_slack();
    Ok(ExtremaTable {
        n,
        level,
        upper,
        lower,
        certified_gap,
    })
}
