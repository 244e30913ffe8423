use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FifError, Result};
use crate::fif::FifGrid;

/// Grid levels kept beyond `k` for well-resolved oscillations.
pub const DEFAULT_RESOLUTION_MARGIN: u32 = 6;

/// Oscillations of `f` over the level-`k` intervals `I^k_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationProfile {
    pub level: u32,
    /// Sampled `max - min` over the grid points of each closed interval.
    pub per_interval: Vec<f64>,
    /// `O_k`, the sum of `per_interval`.
    pub total: f64,
    /// Certified lower bound on `O_k`.
    pub total_lower: f64,
    /// Certified upper bound on `O_k`.
    pub total_upper: f64,
    /// Twice the grid error bound.
    pub value_margin: f64,
    /// Twice the largest oscillation of `f` over one grid cell.
    pub sampling_margin: f64,
}

impl OscillationProfile {
    pub fn lower_at(&self, j: usize) -> f64 {
        (self.per_interval[j] - self.value_margin).max(0.0)
    }

    pub fn upper_at(&self, j: usize) -> f64 {
        self.per_interval[j] + self.value_margin + self.sampling_margin
    }
}

/// Sampled `(min, max)` of the grid values over each closed `I^k_j`.
pub(crate) fn column_ranges(grid: &FifGrid, k: u32) -> Result<Vec<(f64, f64)>> {
    if grid.level() < k + 1 {
        return Err(FifError::InsufficientResolution {
            grid_level: grid.level(),
            level: k,
        });
    }
    let n = grid.n();
    let columns = n.pow(k);
    let stride = n.pow(grid.level() - k);
    let values = grid.values();
    Ok((0..columns)
        .into_par_iter()
        .map(|j| {
            values[j * stride..=(j + 1) * stride]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                })
        })
        .collect())
}

/// `O(f, I^k_j)` for every `j`, with certified bounds on the total.
pub fn oscillation_profile(grid: &FifGrid, k: u32) -> Result<OscillationProfile> {
    let per_interval: Vec<f64> = column_ranges(grid, k)?.into_iter().map(|(lo, hi)| hi - lo).collect();
    let value_margin = 2.0 * grid.error_bound();
    let sampling_margin = 2.0 * grid.cell_oscillation();
    let total = per_interval.iter().sum();
    let total_lower = per_interval.iter().map(|o| (o - value_margin).max(0.0)).sum();
    let total_upper = per_interval.iter().map(|o| o + value_margin + sampling_margin).sum();
    Ok(OscillationProfile {
        level: k,
        per_interval,
        total,
        total_lower,
        total_upper,
        value_margin,
        sampling_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fif::{evaluate_grid, normalize, GridOptions, InterpolationProblem};
    use crate::scaling::ScalingFunction;

    fn example_grid(level: u32) -> FifGrid {
        let sys = normalize(&InterpolationProblem::three_branch_example()).unwrap();
        evaluate_grid(&sys, level, GridOptions::default()).unwrap()
    }

    #[test]
    fn example_level_one() {
        let p = oscillation_profile(&example_grid(8), 1).unwrap();
        assert_eq!(p.per_interval.len(), 3);
        for (j, want) in [1.0, 1.4, 1.0].into_iter().enumerate() {
            assert!(p.lower_at(j) >= want - 1e-9, "{j}: {}", p.lower_at(j));
        }
        assert!(p.total_lower >= 3.4 - 1e-9);
        assert!(p.total_lower <= p.total && p.total <= p.total_upper);
    }

    #[test]
    fn totals_grow_with_level() {
        let grid = example_grid(9);
        let totals: Vec<f64> = (0..=8).map(|k| oscillation_profile(&grid, k).unwrap().total).collect();
        assert!(totals.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn collinear_data_has_no_oscillation() {
        let s = ScalingFunction::from_f64(&[0.0, 1.0], &[vec![0.3, 0.2]], None).unwrap();
        let p = InterpolationProblem::from_f64(&[0.0, 0.5, 1.0], &[2.0, 1.5, 1.0], s).unwrap();
        let grid = evaluate_grid(&normalize(&p).unwrap(), 8, GridOptions::default()).unwrap();
        for k in 1..=5 {
            let prof = oscillation_profile(&grid, k).unwrap();
            assert!(prof.per_interval.iter().all(|&o| o == 0.0));
        }
    }

    #[test]
    fn refuses_coarse_grid() {
        let grid = example_grid(4);
        assert!(matches!(
            oscillation_profile(&grid, 4),
            Err(FifError::InsufficientResolution {
                grid_level: 4,
                level: 4
            })
        ));
    }
}
