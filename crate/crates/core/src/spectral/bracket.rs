use serde::Serialize;

use super::extrema::build_extrema_table;
use super::matrix::ScalingMatrix;
use super::power::{spectral_radius_with, SpectralOptions};
use crate::error::{FifError, Result};
use crate::fif::NormalizedSystem;

/// Slack allowed on the monotonicity of the bracket history.
pub const MONOTONE_SLACK: f64 = 1e-8;

/// `[rho(M'_k), rho(M_k)]` at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoBracket {
    pub level: u32,
    /// `rho(M'_k)`; absent unless `S > 0`.
    pub lower: Option<f64>,
    /// `rho(M_k)`.
    pub upper: f64,
    /// `upper - lower`.
    pub width: Option<f64>,
    /// `C lambda_S N^{-k-1} rho(M'_k)`, a certified bound on `upper - lower`.
    pub width_bound: Option<f64>,
    pub iterations: (usize, usize),
}

impl RhoBracket {
    pub fn midpoint(&self) -> Option<f64> {
        self.lower.map(|lo| 0.5 * (lo + self.upper))
    }
}

/// Computes both spectral radii at level `k`.
///
/// Under `S > 0` the result is a two-sided bracket with a certified width.
/// When `S` only avoids vanishing on subintervals, just `rho(M_k)` is
/// returned; the lower limit is not assumed to agree with the upper one.
pub fn rho_bracket(system: &NormalizedSystem, k: u32, options: SpectralOptions) -> Result<RhoBracket> {
    system.report().require_nonvanishing()?;
    let table = build_extrema_table(system, k)?;
    let (upper_m, lower_m) = ScalingMatrix::from_table(table);
    let upper = spectral_radius_with(&upper_m, options)?;
    if !system.is_positive() {
        return Ok(RhoBracket {
            level: k,
            lower: None,
            upper: upper.radius,
            width: None,
            width_bound: None,
            iterations: (upper.iterations, 0),
        });
    }
    let lower = spectral_radius_with(&lower_m, options)?;
    let c = system.positivity_constant().expect("S > 0");
    let width_bound = c * system.lipschitz() * (system.n() as f64).powi(-(k as i32) - 1) * lower.radius;
    Ok(RhoBracket {
        level: k,
        lower: Some(lower.radius),
        upper: upper.radius,
        width: Some(upper.radius - lower.radius),
        width_bound: Some(width_bound),
        iterations: (upper.iterations, lower.iterations),
    })
}

/// Brackets for `k = 1..=k_max`.
pub fn rho_history(system: &NormalizedSystem, k_max: u32, options: SpectralOptions) -> Result<Vec<RhoBracket>> {
    (1..=k_max).map(|k| rho_bracket(system, k, options)).collect()
}

/// True when `rho(M_k)` never increases and `rho(M'_k)` never decreases
/// along the history, up to `slack`.
pub fn is_monotone(history: &[RhoBracket], slack: f64) -> bool {
    history.windows(2).all(|w| {
        let upper_ok = w[1].upper <= w[0].upper + slack;
        let lower_ok = match (w[0].lower, w[1].lower) {
            (Some(a), Some(b)) => a <= b + slack,
            _ => true,
        };
        upper_ok && lower_ok
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoEstimate {
    /// Bracket midpoint at the final level.
    pub estimate: f64,
    pub half_width: f64,
    pub level: u32,
    pub history: Vec<RhoBracket>,
}

/// Refines `k` until `rho(M_k) - rho(M'_k) <= target_width`.
///
/// Fails with `ResourceLimit` (carrying the achieved width) when `k_max`
/// levels do not suffice.
pub fn estimate_rho_s(
    system: &NormalizedSystem,
    target_width: f64,
    k_max: u32,
    options: SpectralOptions,
) -> Result<RhoEstimate> {
    if !(target_width > 0.0) {
        return Err(FifError::DomainError(format!(
            "target width {target_width} must be positive"
        )));
    }
    system.report().require_positive()?;
    let mut history = Vec::new();
    let mut width = f64::INFINITY;
    for k in 1..=k_max {
        let bracket = rho_bracket(system, k, options)?;
        let lower = bracket.lower.expect("S > 0");
        width = bracket.upper - lower;
        let estimate = 0.5 * (bracket.upper + lower);
        history.push(bracket);
        if width <= target_width {
            return Ok(RhoEstimate {
                estimate,
                half_width: 0.5 * width.max(0.0),
                level: k,
                history,
            });
        }
    }
    Err(FifError::ResourceLimit {
        what: format!("bracket width {width:e} above target {target_width:e} at k_max = {k_max}"),
        achieved_width: Some(width),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fif::{normalize, InterpolationProblem};
    use crate::scaling::ScalingFunction;

    fn opts() -> SpectralOptions {
        SpectralOptions::default()
    }

    fn constant_system(c: f64) -> NormalizedSystem {
        let s = ScalingFunction::from_f64(&[0.0, 1.0], &[vec![c]], None).unwrap();
        let p = InterpolationProblem::from_f64(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], &[0.0, 1.0, 1.0, 0.0], s).unwrap();
        normalize(&p).unwrap()
    }

    #[test]
    fn constant_bracket_is_degenerate() {
        let b = rho_bracket(&constant_system(0.5), 1, opts()).unwrap();
        assert_eq!(b.upper, 1.5);
        assert_eq!(b.lower, Some(1.5));
        let est = estimate_rho_s(&constant_system(0.5), 1e-4, 8, opts()).unwrap();
        assert_eq!(est.level, 1);
        assert_eq!(est.estimate, 1.5);
    }

    #[test]
    fn example_level_four() {
        let sys = normalize(&InterpolationProblem::three_branch_example()).unwrap();
        let b = rho_bracket(&sys, 4, opts()).unwrap();
        assert!((b.upper - 1.6515).abs() < 5e-5);
        assert!((b.lower.unwrap() - 1.6432).abs() < 5e-5);
        assert!(b.width.unwrap() <= b.width_bound.unwrap());
    }

    #[test]
    fn estimate_reports_history_and_limit() {
        let sys = normalize(&InterpolationProblem::three_branch_example()).unwrap();
        let est = estimate_rho_s(&sys, 2e-4, 8, opts()).unwrap();
        assert!(est.level <= 8);
        assert!((est.estimate - 1.6474).abs() < 1e-4);
        assert!(is_monotone(&est.history, MONOTONE_SLACK));
        match estimate_rho_s(&sys, 1e-6, 3, opts()) {
            Err(FifError::ResourceLimit {
                achieved_width: Some(w),
                ..
            }) => assert!(w > 1e-6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sign_changing_scaling_gives_upper_only() {
        let s = ScalingFunction::from_f64(&[0.0, 1.0], &[vec![-0.4, 0.8]], None).unwrap();
        let p = InterpolationProblem::from_f64(&[0.0, 0.5, 1.0], &[0.0, 1.0, 0.0], s).unwrap();
        let sys = normalize(&p).unwrap();
        let b = rho_bracket(&sys, 3, opts()).unwrap();
        assert!(b.lower.is_none() && b.width_bound.is_none());
        assert!(b.upper > 0.0);
        assert!(matches!(
            estimate_rho_s(&sys, 1e-4, 4, opts()),
            Err(FifError::ConditionNotMet { .. })
        ));
    }
}
