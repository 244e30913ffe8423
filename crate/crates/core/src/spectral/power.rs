use serde::{Deserialize, Serialize};

use super::matrix::ScalingMatrix;
use crate::error::{FifError, Result};

pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            tol: DEFAULT_SPECTRAL_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Perron root and eigenvector of a nonnegative scaling matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub radius: f64,
    /// Positive eigenvector with unit 1-norm.
    pub eigenvector: Vec<f64>,
    pub iterations: usize,
    /// `|| M v - radius v ||_inf` for the returned `v`.
    pub residual: f64,
    /// Collatz-Wielandt bounds `min_i (Mv)_i / v_i <= rho <= max_i (Mv)_i / v_i`,
    /// present when the iterate is strictly positive.
    pub bounds: Option<(f64, f64)>,
}

pub fn spectral_radius(matrix: &ScalingMatrix, tol: f64) -> Result<SpectralResult> {
    spectral_radius_with(
        matrix,
        SpectralOptions {
            tol,
            ..SpectralOptions::default()
        },
    )
}

/// Power iteration from the all-ones vector.
///
/// For a strictly positive iterate the Collatz-Wielandt quotients bracket the
/// Perron root, and iteration stops once the bracket is narrower than `tol`;
/// the radius is its midpoint. Otherwise it stops when successive estimates
/// and the residual are both within `tol`.
pub fn spectral_radius_with(matrix: &ScalingMatrix, options: SpectralOptions) -> Result<SpectralResult> {
    if !(options.tol > 0.0) {
        return Err(FifError::DomainError(format!(
            "spectral tolerance {} must be positive",
            options.tol
        )));
    }
    if matrix.entries().iter().all(|&e| e == 0.0) {
        return Err(FifError::MalformedInput("scaling matrix is identically zero".into()));
    }
    let dim = matrix.dim();
    let mut v = vec![1.0; dim];
    let mut w = vec![0.0; dim];
    let mut previous = f64::NAN;
    let mut gap = f64::INFINITY;

    for iteration in 1..=options.max_iterations {
        matrix.matvec_into(&v, &mut w)?;
        let bounds = collatz_wielandt(&v, &w);
        let estimate = match bounds {
            Some((lo, hi)) => 0.5 * (lo + hi),
            None => w.iter().sum::<f64>() / v.iter().sum::<f64>(),
        };
        if !(estimate > 0.0) {
            return Err(FifError::NoConvergence {
                iterations: iteration,
                gap: f64::NAN,
            });
        }
        let residual = sup_residual(&v, &w, estimate);
        let converged = match bounds {
            Some((lo, hi)) => {
                gap = hi - lo;
                gap <= options.tol
            }
            None => {
                gap = (estimate - previous).abs();
                gap <= options.tol && residual <= options.tol
            }
        };
        if converged {
            let norm: f64 = v.iter().sum();
            let eigenvector: Vec<f64> = v.iter().map(|x| x / norm).collect();
            return Ok(SpectralResult {
                radius: estimate,
                residual: residual / norm,
                eigenvector,
                iterations: iteration,
                bounds,
            });
        }
        previous = estimate;
        let scale = w.iter().cloned().fold(0.0, f64::max);
        if !(scale > 0.0) {
            return Err(FifError::NoConvergence {
                iterations: iteration,
                gap,
            });
        }
        for (dst, src) in v.iter_mut().zip(&w) {
            *dst = src / scale;
        }
    }
    Err(FifError::NoConvergence {
        iterations: options.max_iterations,
        gap,
    })
}

fn collatz_wielandt(v: &[f64], w: &[f64]) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&vi, &wi) in v.iter().zip(w) {
        if !(vi > 0.0) {
            return None;
        }
        let q = wi / vi;
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Some((lo, hi))
}

/// `|| w - radius v ||_inf` with `v` scaled by its max entry.
fn sup_residual(v: &[f64], w: &[f64], radius: f64) -> f64 {
    v.iter().zip(w).map(|(a, b)| (b - radius * a).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fif::{normalize, InterpolationProblem};
    use crate::spectral::{build_extrema_table, MatrixKind};

    #[test]
    fn example_level_one() {
        let sys = normalize(&InterpolationProblem::three_branch_example()).unwrap();
        let (upper, lower) = ScalingMatrix::from_table(build_extrema_table(&sys, 1).unwrap());
        let r_up = spectral_radius(&upper, 1e-10).unwrap();
        let r_lo = spectral_radius(&lower, 1e-10).unwrap();
        assert!((r_up.radius - 1.7622).abs() < 5e-5, "{}", r_up.radius);
        assert!((r_lo.radius - 1.5380).abs() < 5e-5, "{}", r_lo.radius);
        for r in [&r_up, &r_lo] {
            assert!(r.eigenvector.iter().all(|&x| x > 0.0));
            assert!((r.eigenvector.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(r.residual <= 1e-10);
        }
    }

    #[test]
    fn constant_row_sums_are_exact() {
        let m = ScalingMatrix::from_entries(3, 2, MatrixKind::Upper, vec![0.5; 27]).unwrap();
        let r = spectral_radius(&m, 1e-10).unwrap();
        assert_eq!(r.radius, 1.5);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn zero_matrix_rejected() {
        let m = ScalingMatrix::from_entries(2, 1, MatrixKind::Upper, vec![0.0; 4]).unwrap();
        assert!(matches!(spectral_radius(&m, 1e-10), Err(FifError::MalformedInput(_))));
    }

    #[test]
    fn permutation_and_nilpotent() {
        // ones is already an eigenvector of the swap
        let m = ScalingMatrix::from_entries(2, 1, MatrixKind::Upper, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let r = spectral_radius(&m, 1e-10).unwrap();
        assert_eq!(r.radius, 1.0);
        let nilpotent = ScalingMatrix::from_entries(2, 1, MatrixKind::Upper, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let opts = SpectralOptions {
            tol: 1e-10,
            max_iterations: 50,
        };
        assert!(matches!(
            spectral_radius_with(&nilpotent, opts),
            Err(FifError::NoConvergence { .. })
        ));
    }
}
