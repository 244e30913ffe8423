use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::system::NormalizedSystem;
use crate::error::{FifError, Result};
use crate::rational::{ratio_from_f64, ratio_to_f64};

/// Default sup-norm stopping tolerance for grid evaluation.
pub const DEFAULT_GRID_TOL: f64 = 1e-12;
/// Largest grid (number of points) evaluated in memory.
pub const MAX_GRID_POINTS: u64 = 1 << 28;
const MAX_SWEEPS: usize = 100_000;

/// Update order of the fixed-point sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    /// In-place sweep ordered by N-adic level. Every point is updated after
    /// its preimage, so one sweep reaches the fixed point.
    #[default]
    LevelOrdered,
    /// Simultaneous update of all points from the previous iterate.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub tol: f64,
    pub order: SweepOrder,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            tol: DEFAULT_GRID_TOL,
            order: SweepOrder::default(),
        }
    }
}

/// Values of the normalized FIF on `{ j / N^m : 0 <= j <= N^m }`.
#[derive(Debug, Clone, PartialEq)]
pub struct FifGrid {
    level: u32,
    n: usize,
    values: Vec<f64>,
    error_bound: f64,
    cell_oscillation: f64,
    sweeps: Vec<f64>,
}

impl FifGrid {
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Branch count `N` of the system the grid was computed from.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of grid cells, `N^level`.
    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 / self.cells() as f64
    }

    /// Certified sup-norm distance between stored and true grid values.
    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }

    /// Certified bound on the oscillation of `f` over any single grid cell.
    pub fn cell_oscillation(&self) -> f64 {
        self.cell_oscillation
    }

    /// Sup-norm change of each sweep, in order.
    pub fn sweep_history(&self) -> &[f64] {
        &self.sweeps
    }

    /// Largest `|f(x) - S(x) f(L_i^{-1} x) - h(x)|` over the grid.
    pub fn functional_equation_residual(&self, system: &NormalizedSystem) -> f64 {
        let update = PointUpdate::new(system, self.level);
        (0..self.values.len())
            .into_par_iter()
            .map(|j| {
                let (s, pre, h) = update.terms(j);
                (s * self.values[pre] + h - self.values[j]).abs()
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Per-point pieces of the update `g(x_j) <- S(x_j) g(x_pre) + h(x_j)`.
struct PointUpdate<'a> {
    system: &'a NormalizedSystem,
    cells: usize,
    block: usize,
}

impl<'a> PointUpdate<'a> {
    fn new(system: &'a NormalizedSystem, level: u32) -> Self {
        let block = system.n().pow(level - 1);
        PointUpdate {
            system,
            cells: block * system.n(),
            block,
        }
    }

    #[inline]
    fn branch(&self, j: usize) -> usize {
        (j / self.block).min(self.system.n() - 1)
    }

    #[inline]
    fn h(&self, j: usize) -> f64 {
        let i = self.branch(j);
        let offset = j - i * self.block;
        let hv = self.system.h_values();
        let t = offset as f64 / self.block as f64;
        hv[i] + (hv[i + 1] - hv[i]) * t
    }

    /// `(S(x_j), index of L_i^{-1}(x_j), h(x_j))`.
    #[inline]
    fn terms(&self, j: usize) -> (f64, usize, f64) {
        let i = self.branch(j);
        let pre = self.system.n() * (j - i * self.block);
        let x = j as f64 / self.cells as f64;
        (self.system.scaling().eval(x), pre, self.h(j))
    }
}

/// Fixed-point iteration of the functional equation on the level-`m` grid,
/// started from `g_0 = h` and stopped once a sweep changes no value by more
/// than `tol (1 - beta)`.
pub fn evaluate_grid(system: &NormalizedSystem, level: u32, options: GridOptions) -> Result<FifGrid> {
    if level < 1 {
        return Err(FifError::DomainError("grid level must be at least 1".into()));
    }
    if !(options.tol > 0.0) {
        return Err(FifError::DomainError(format!(
            "grid tolerance {} must be positive",
            options.tol
        )));
    }
    let beta = system.beta();
    if !(beta < 1.0) {
        return Err(FifError::ContractivityViolation { sup_abs: beta });
    }
    let n = system.n();
    let cells = (n as u64)
        .checked_pow(level)
        .filter(|&c| c < MAX_GRID_POINTS)
        .ok_or_else(|| FifError::ResourceLimit {
            what: format!("grid of {n}^{level} cells exceeds {MAX_GRID_POINTS} points"),
            achieved_width: None,
        })? as usize;

    let update = PointUpdate::new(system, level);
    let mut values: Vec<f64> = (0..=cells).map(|j| update.h(j)).collect();
    let stop = options.tol * (1.0 - beta);
    let mut sweeps = Vec::new();

    let last_change = match options.order {
        SweepOrder::Jacobi => {
            let scale: Vec<f64> = (0..=cells)
                .into_par_iter()
                .map(|j| system.scaling().eval(j as f64 / cells as f64))
                .collect();
            let mut next = vec![0.0; cells + 1];
            loop {
                next.par_iter_mut().enumerate().for_each(|(j, out)| {
                    let i = update.branch(j);
                    let pre = n * (j - i * update.block);
                    *out = scale[j] * values[pre] + update.h(j);
                });
                let change = next
                    .par_iter()
                    .zip(values.par_iter())
                    .map(|(a, b)| (a - b).abs())
                    .reduce(|| 0.0, f64::max);
                std::mem::swap(&mut values, &mut next);
                sweeps.push(change);
                if change <= stop {
                    break change;
                }
                if sweeps.len() >= MAX_SWEEPS {
                    return Err(FifError::NoConvergence {
                        iterations: sweeps.len(),
                        gap: change,
                    });
                }
            }
        }
        SweepOrder::LevelOrdered => {
            let mut first = 0.0_f64;
            for l in 1..=level {
                let stride = n.pow(level - l);
                for q in (1..n.pow(l)).filter(|q| q % n != 0) {
                    let j = q * stride;
                    let (s, pre, h) = update.terms(j);
                    let v = s * values[pre] + h;
                    first = first.max((v - values[j]).abs());
                    values[j] = v;
                }
            }
            sweeps.push(first);
            let grid = FifGrid {
                level,
                n,
                values,
                error_bound: 0.0,
                cell_oscillation: 0.0,
                sweeps: Vec::new(),
            };
            let residual = grid.functional_equation_residual(system);
            values = grid.values;
            sweeps.push(residual);
            if residual > stop {
                return Err(FifError::NoConvergence {
                    iterations: sweeps.len(),
                    gap: residual,
                });
            }
            residual
        }
    };

    // a posteriori contraction bound plus accumulated rounding
    let rounding = 8.0 * f64::EPSILON * (level as f64 + 1.0) * system.sup_f_bound() / (1.0 - beta);
    let error_bound = match options.order {
        SweepOrder::Jacobi => last_change * beta / (1.0 - beta),
        SweepOrder::LevelOrdered => last_change / (1.0 - beta),
    } + rounding;

    Ok(FifGrid {
        level,
        n,
        values,
        error_bound,
        cell_oscillation: cell_oscillation_bound(system, level),
        sweeps,
    })
}

/// Bound on `O(f, J)` over level-`level` cells `J`, from the recursion
/// `O(f, J) <= max_J|S| O(f, L_i^{-1} J) + (lambda_S M_f + |h'|) |J|`
/// started at `O(f, [0, 1]) <= 2 M_f`.
fn cell_oscillation_bound(system: &NormalizedSystem, level: u32) -> f64 {
    let n = system.n();
    let m_f = system.sup_f_bound();
    let lambda = system.lipschitz();
    let beta = system.beta();
    let hv = system.h_values();
    let slack = system.scaling().extrema_slack();
    let mut prev = vec![2.0 * m_f];
    let mut worst = 2.0 * m_f;
    for l in 1..=level {
        let block = n.pow(l - 1);
        let width = 1.0 / (block * n) as f64;
        let step = |c: usize| {
            let i = c / block;
            let mid = (c as f64 + 0.5) * width;
            let s_max = (system.scaling().eval(mid).abs() + 0.5 * lambda * width + slack).min(beta);
            let additive = (lambda * m_f + (hv[i + 1] - hv[i]).abs() * n as f64) * width;
            (s_max * prev[c - i * block] + additive).min(2.0 * m_f)
        };
        if l == level {
            worst = (0..block * n).into_par_iter().map(step).reduce(|| 0.0, f64::max);
        } else {
            prev = (0..block * n).into_par_iter().map(step).collect();
        }
    }
    // guard against rounding in the recursion itself
    worst * (1.0 + 1e-12)
}

/// Value of `f(x)` truncated after `depth` address digits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointValue {
    pub value: f64,
    pub error_bound: f64,
}

/// Evaluates `f(x) = h(x) + S(x) f(L_{i_1}^{-1} x)` expanded `depth` times.
///
/// The address digits of `x` are generated exactly, so the result is the
/// value at the double `x` itself.
pub fn evaluate_point(system: &NormalizedSystem, x: f64, depth: u32) -> Result<PointValue> {
    if !(0.0..=1.0).contains(&x) {
        return Err(FifError::DomainError(format!("x = {x} outside [0, 1]")));
    }
    evaluate_point_exact(system, &ratio_from_f64(x)?, depth)
}

/// [`evaluate_point`] at a rational `x`, e.g. `1/6`, which has no exact double.
pub fn evaluate_point_exact(system: &NormalizedSystem, x: &BigRational, depth: u32) -> Result<PointValue> {
    if x.is_negative() || *x > BigRational::one() {
        return Err(FifError::DomainError(format!("x = {x} outside [0, 1]")));
    }
    if depth < 1 {
        return Err(FifError::DomainError("expansion depth must be at least 1".into()));
    }
    let n = BigInt::from(system.n());
    let last = BigInt::from(system.n() - 1);
    let mut value = 0.0;
    let mut product = 1.0;
    let mut point = x.clone();
    for _ in 0..depth {
        let at = ratio_to_f64(&point);
        value += product * system.h(at);
        product *= system.scaling().eval(at);
        if product == 0.0 {
            break;
        }
        let scaled = point * &n;
        let digit = scaled.floor().to_integer().min(last.clone());
        point = scaled - BigRational::from_integer(digit);
    }
    let (beta, m_f) = (system.beta(), system.sup_f_bound());
    let rounding = 8.0 * f64::EPSILON * (depth as f64 + 1.0) * m_f / (1.0 - beta);
    Ok(PointValue {
        value,
        error_bound: beta.powi(depth as i32) * m_f + rounding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fif::{normalize, InterpolationProblem};
    use crate::scaling::ScalingFunction;

    fn example() -> NormalizedSystem {
        normalize(&InterpolationProblem::three_branch_example()).unwrap()
    }

    #[test]
    fn oracle_values_at_level_four() {
        let sys = example();
        let grid = evaluate_grid(&sys, 4, GridOptions::default()).unwrap();
        let cells = grid.cells();
        assert_eq!(cells, 81);
        for (i, want) in [0.0, 1.0, 1.0, 0.0].iter().enumerate() {
            assert!((grid.values()[i * 27] - want).abs() <= grid.error_bound() + 1e-10);
        }
        let residual = grid.functional_equation_residual(&sys);
        assert!(residual <= 2.0 * grid.error_bound() + 1e-10);
        assert!(grid.values().iter().all(|v| v.abs() <= sys.sup_f_bound()));
    }

    #[test]
    fn point_oracles() {
        let sys = example();
        let half = evaluate_point(&sys, 0.5, 40).unwrap();
        assert!((half.value - 2.4).abs() <= half.error_bound);
        assert!(half.error_bound <= 2e-4);
        let deep = evaluate_point(&sys, 0.5, 200).unwrap();
        assert!((deep.value - 2.4).abs() < 1e-14);
        let sixth = evaluate_point_exact(&sys, &crate::rational::ratio(1, 6), 200).unwrap();
        assert!((sixth.value - 47.0 / 30.0).abs() < 1e-14);
        // the double nearest 1/6 has a different address past ~50 digits
        let near = evaluate_point(&sys, 1.0 / 6.0, 200).unwrap();
        assert!((near.value - 47.0 / 30.0).abs() < 1e-7);
        assert_eq!(evaluate_point(&sys, 0.0, 7).unwrap().value, 0.0);
        assert!(matches!(evaluate_point(&sys, 1.5, 3), Err(FifError::DomainError(_))));
        assert!(matches!(evaluate_point(&sys, 0.5, 0), Err(FifError::DomainError(_))));
    }

    #[test]
    fn zero_scaling_reduces_to_h() {
        let s = ScalingFunction::from_f64(&[0.0, 1.0], &[vec![0.0]], None).unwrap();
        let p = InterpolationProblem::from_f64(&[0.0, 0.5, 1.0], &[0.0, 1.0, 0.0], s).unwrap();
        let sys = normalize(&p).unwrap();
        for x in [0.1, 0.25, 0.5, 0.9] {
            assert_eq!(evaluate_point(&sys, x, 5).unwrap().value, sys.h(x));
        }
    }

    #[test]
    fn jacobi_and_level_ordered_agree_bitwise() {
        let sys = example();
        let jacobi = evaluate_grid(
            &sys,
            6,
            GridOptions {
                tol: 1e-12,
                order: SweepOrder::Jacobi,
            },
        )
        .unwrap();
        let ordered = evaluate_grid(&sys, 6, GridOptions::default()).unwrap();
        assert_eq!(jacobi.values(), ordered.values());
        assert_eq!(ordered.sweep_history().len(), 2);
        assert_eq!(ordered.sweep_history()[1], 0.0);
    }

    #[test]
    fn jacobi_changes_contract_by_beta() {
        let sys = example();
        let grid = evaluate_grid(
            &sys,
            7,
            GridOptions {
                tol: 1e-12,
                order: SweepOrder::Jacobi,
            },
        )
        .unwrap();
        let history = grid.sweep_history();
        assert!(history.len() <= 9, "{history:?}");
        for pair in history.windows(2) {
            assert!(pair[1] <= sys.beta() * pair[0] + 1e-15, "{history:?}");
        }
        assert_eq!(*history.last().unwrap(), 0.0);
    }

    #[test]
    fn bad_arguments() {
        let sys = example();
        assert!(matches!(
            evaluate_grid(&sys, 0, GridOptions::default()),
            Err(FifError::DomainError(_))
        ));
        let neg = GridOptions {
            tol: -1.0,
            ..GridOptions::default()
        };
        assert!(matches!(evaluate_grid(&sys, 3, neg), Err(FifError::DomainError(_))));
        assert!(matches!(
            evaluate_grid(&sys, 30, GridOptions::default()),
            Err(FifError::ResourceLimit { .. })
        ));
    }

    #[test]
    fn cell_oscillation_bound_covers_sampled_cells() {
        let sys = example();
        let coarse = evaluate_grid(&sys, 5, GridOptions::default()).unwrap();
        let fine = evaluate_grid(&sys, 9, GridOptions::default()).unwrap();
        let ratio = fine.cells() / coarse.cells();
        let worst = (0..coarse.cells())
            .map(|c| {
                let cell = &fine.values()[c * ratio..=(c + 1) * ratio];
                let max = cell.iter().cloned().fold(f64::MIN, f64::max);
                let min = cell.iter().cloned().fold(f64::MAX, f64::min);
                max - min
            })
            .fold(0.0, f64::max);
        assert!(
            worst <= coarse.cell_oscillation(),
            "{worst} > {}",
            coarse.cell_oscillation()
        );
    }
}
