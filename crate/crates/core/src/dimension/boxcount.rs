use serde::Serialize;

use super::oscillation::column_ranges;
use crate::error::{FifError, Result};
use crate::fif::FifGrid;

/// Number of `N^{-k}`-squares meeting the graph, counted column by column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxCount {
    pub level: u32,
    pub epsilon: f64,
    /// Count from the sampled column ranges.
    pub count: u64,
    /// Certified bounds on the count for the true graph.
    pub lower: u64,
    pub upper: u64,
}

/// Squares `[a eps, (a + 1) eps)` met by a column whose values span `[lo, hi]`.
fn squares(lo: f64, hi: f64, scale: f64) -> u64 {
    if hi < lo {
        return 1;
    }
    ((hi * scale).floor() - (lo * scale).floor()) as u64 + 1
}

pub fn box_count(grid: &FifGrid, k: u32) -> Result<BoxCount> {
    let ranges = column_ranges(grid, k)?;
    let scale = (grid.n() as f64).powi(k as i32);
    let err = grid.error_bound();
    let omega = grid.cell_oscillation();
    let mut count = 0;
    let mut lower = 0;
    let mut upper = 0;
    for &(lo, hi) in &ranges {
        count += squares(lo, hi, scale);
        lower += squares(lo + err, hi - err, scale);
        upper += squares(lo - err - omega, hi + err + omega, scale);
    }
    Ok(BoxCount {
        level: k,
        epsilon: 1.0 / scale,
        count,
        lower,
        upper,
    })
}

/// Least-squares slope of `log count` against `k log N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalFit {
    pub window: (u32, u32),
    pub slope: f64,
    pub intercept: f64,
    /// `(k, slope between k - 1 and k)` for consecutive levels in the window.
    pub step_slopes: Vec<(u32, f64)>,
}

pub fn empirical_dimension(counts: &[BoxCount], n: usize, window: (u32, u32)) -> Result<EmpiricalFit> {
    let (k_lo, k_hi) = window;
    let mut points: Vec<&BoxCount> = counts.iter().filter(|c| c.level >= k_lo && c.level <= k_hi).collect();
    points.sort_by_key(|c| c.level);
    points.dedup_by_key(|c| c.level);
    if points.len() < 3 {
        return Err(FifError::DegenerateFit(format!(
            "{} levels in window {k_lo}..={k_hi}, need at least 3",
            points.len()
        )));
    }
    if points.iter().all(|c| c.count == points[0].count) {
        return Err(FifError::DegenerateFit("all counts are equal".into()));
    }
    let log_n = (n as f64).ln();
    let xs: Vec<f64> = points.iter().map(|c| c.level as f64 * log_n).collect();
    let ys: Vec<f64> = points.iter().map(|c| (c.count as f64).ln()).collect();
    let m = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let slope = sxy / sxx;
    let step_slopes = points
        .windows(2)
        .zip(ys.windows(2).zip(xs.windows(2)))
        .map(|(c, (y, x))| (c[1].level, (y[1] - y[0]) / (x[1] - x[0])))
        .collect();
    Ok(EmpiricalFit {
        window,
        slope,
        intercept: y_mean - slope * x_mean,
        step_slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::oscillation_profile;
    use crate::fif::{evaluate_grid, normalize, GridOptions, InterpolationProblem};
    use crate::scaling::ScalingFunction;

    fn grid_for(values: &[f64], s: f64, level: u32) -> FifGrid {
        let s = ScalingFunction::from_f64(&[0.0, 1.0], &[vec![s]], None).unwrap();
        let knots: Vec<f64> = (0..values.len())
            .map(|i| i as f64 / (values.len() - 1) as f64)
            .collect();
        let p = InterpolationProblem::from_f64(&knots, values, s).unwrap();
        evaluate_grid(&normalize(&p).unwrap(), level, GridOptions::default()).unwrap()
    }

    #[test]
    fn flat_graph_counts_one_row() {
        let grid = grid_for(&[0.0, 0.0, 0.0, 0.0], 0.5, 8);
        let counts: Vec<BoxCount> = (1..=6).map(|k| box_count(&grid, k).unwrap()).collect();
        for c in &counts {
            assert_eq!(c.count, 3u64.pow(c.level));
            assert_eq!(c.lower, c.count);
        }
        let fit = empirical_dimension(&counts, 3, (1, 6)).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn example_middle_column() {
        let sys = normalize(&InterpolationProblem::three_branch_example()).unwrap();
        let grid = evaluate_grid(&sys, 8, GridOptions::default()).unwrap();
        let c = box_count(&grid, 1).unwrap();
        // values 1 and 2.4 in the middle column meet rows 3..=7
        let mid = squares(1.0 + grid.error_bound(), 2.4 - grid.error_bound(), 3.0);
        assert!(mid >= 5);
        assert!(c.lower > mid + 1);
    }

    #[test]
    fn oscillation_sandwich() {
        let sys = normalize(&InterpolationProblem::three_branch_example()).unwrap();
        let grid = evaluate_grid(&sys, 10, GridOptions::default()).unwrap();
        for k in 1..=6 {
            let c = box_count(&grid, k).unwrap();
            let o = oscillation_profile(&grid, k).unwrap();
            let nk = 3f64.powi(k as i32);
            assert!(c.lower as f64 >= 0.5 * nk * (1.0 + o.total_lower) - 1e-9);
            assert!(c.upper as f64 <= nk * (o.total_upper + 2.0) + 1e-9);
            assert!(c.lower <= c.count && c.count <= c.upper);
            assert!(c.lower as f64 >= nk);
        }
    }

    #[test]
    fn degenerate_windows() {
        let grid = grid_for(&[0.0, 0.0, 0.0], 0.5, 6);
        let counts: Vec<BoxCount> = (1..=2).map(|k| box_count(&grid, k).unwrap()).collect();
        assert!(matches!(
            empirical_dimension(&counts, 2, (1, 2)),
            Err(FifError::DegenerateFit(_))
        ));
        let same: Vec<BoxCount> = (1..=3)
            .map(|level| BoxCount {
                level,
                epsilon: 0.5,
                count: 4,
                lower: 4,
                upper: 4,
            })
            .collect();
        assert!(matches!(
            empirical_dimension(&same, 2, (1, 3)),
            Err(FifError::DegenerateFit(_))
        ));
    }
}
