use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::boxcount::{box_count, empirical_dimension, BoxCount, EmpiricalFit};
use super::oscillation::{oscillation_profile, OscillationProfile, DEFAULT_RESOLUTION_MARGIN};
use crate::error::{FifError, Result};
use crate::fif::{evaluate_grid, FifGrid, GridOptions, NormalizedSystem, ValidationReport};
use crate::rational::{ratio_from_f64, Exact};
use crate::spectral::{rho_history, sum_function_report, RhoBracket, SpectralOptions, SumFunctionReport};

/// Default number of matrix levels.
pub const DEFAULT_K_MAX: u32 = 8;
/// Default grid level: a slope window up to `k = 9` at the default margin.
pub const DEFAULT_GRID_LEVEL: u32 = 15;

/// Outcome of the sufficient condition `O_{k0} > lambda' M_f / (gamma_* - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SufficientCondition {
    /// False when `gamma_* <= 1`.
    pub applicable: bool,
    pub passed: bool,
    pub threshold: f64,
    /// The threshold as an exact rational when its inputs are exact.
    pub threshold_exact: Option<Exact>,
    /// Best certified `O_{k0}` lower bound minus the threshold.
    pub margin: f64,
    /// First level whose certified oscillation clears the threshold.
    pub level: Option<u32>,
}

pub fn sufficient_condition(
    system: &NormalizedSystem,
    gamma: &SumFunctionReport,
    profiles: &[OscillationProfile],
) -> SufficientCondition {
    let gamma_lower = gamma.gamma_star_lower;
    if !(gamma_lower > 1.0) {
        return SufficientCondition {
            applicable: false,
            passed: false,
            threshold: f64::INFINITY,
            threshold_exact: None,
            margin: f64::NEG_INFINITY,
            level: None,
        };
    }
    let m_f = system.sup_f_bound();
    // rounded toward a larger threshold
    let threshold = (gamma.lambda_prime * m_f).next_up() / (gamma_lower - 1.0).next_down();
    let threshold_exact = match (&gamma.lambda_prime_exact, &gamma.gamma_star_lower_exact) {
        (Some(lp), Some(gl)) => ratio_from_f64(m_f)
            .ok()
            .map(|mf| Exact(&lp.0 * mf / (&gl.0 - BigRational::one()))),
        _ => None,
    };
    let margin = profiles
        .iter()
        .map(|p| p.total_lower - threshold)
        .fold(f64::NEG_INFINITY, f64::max);
    let level = profiles.iter().find(|p| p.total_lower > threshold).map(|p| p.level);
    SufficientCondition {
        applicable: true,
        passed: level.is_some(),
        threshold,
        threshold_exact,
        margin,
        level,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    /// `dim = 1 + log rho_S / log N`, with the bracket carried to the dimension.
    Formula {
        dimension: f64,
        dimension_lower: f64,
        dimension_upper: f64,
        rho_s: f64,
        rho_half_width: f64,
    },
    Trivial {
        dimension: f64,
    },
    Inconclusive {
        reason: String,
    },
}

impl Verdict {
    pub fn dimension(&self) -> Option<f64> {
        match self {
            Verdict::Formula { dimension, .. } | Verdict::Trivial { dimension } => Some(*dimension),
            Verdict::Inconclusive { .. } => None,
        }
    }
}

/// The result that decided the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Constant sum function `gamma = gamma_0`.
    ConstantSum,
    /// Data on one line: `f` is the baseline.
    Collinear,
    /// `rho_S <= 1`, so the graph has dimension 1.
    SpectralBound,
    /// Spectral formula, with divergence of `O_k` certified by the sufficient condition.
    SufficientCondition,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionOptions {
    pub k_max: u32,
    pub spectral: SpectralOptions,
    pub grid_level: u32,
    pub grid: GridOptions,
    pub resolution_margin: u32,
    /// Levels for the empirical slope; defaults to `3..=grid_level - 6`.
    pub slope_window: Option<(u32, u32)>,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        DimensionOptions {
            k_max: DEFAULT_K_MAX,
            spectral: SpectralOptions::default(),
            grid_level: DEFAULT_GRID_LEVEL,
            grid: GridOptions::default(),
            resolution_margin: DEFAULT_RESOLUTION_MARGIN,
            slope_window: None,
        }
    }
}

impl DimensionOptions {
    /// Highest oscillation level resolved by the grid.
    pub fn oscillation_levels(&self) -> u32 {
        self.grid_level.saturating_sub(self.resolution_margin).max(1)
    }

    pub fn window(&self) -> (u32, u32) {
        self.slope_window.unwrap_or((3, self.oscillation_levels()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationSummary {
    pub level: u32,
    pub total: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub rho_history: Vec<RhoBracket>,
    pub oscillation: Vec<OscillationSummary>,
    pub box_counts: Vec<BoxCount>,
    pub gamma: Option<SumFunctionReport>,
    pub sufficient_condition: Option<SufficientCondition>,
    pub grid_level: u32,
    pub grid_error_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionReport {
    pub n: usize,
    pub validation: ValidationReport,
    /// Bracket at the final level.
    pub rho_bracket: Option<RhoBracket>,
    pub verdict: Verdict,
    pub branch: Branch,
    /// Cross-check only; never decides the verdict.
    pub empirical: Option<EmpiricalFit>,
    pub empirical_error: Option<String>,
    pub diagnostics: Diagnostics,
}

pub fn dimension_verdict(system: &NormalizedSystem, options: &DimensionOptions) -> Result<DimensionReport> {
    let grid = evaluate_grid(system, options.grid_level, options.grid)?;
    dimension_verdict_with_grid(system, &grid, options)
}

/// Decides the box dimension using a precomputed grid.
///
/// In order: a constant sum function gives the closed form directly;
/// collinear data or `rho(M_k) < 1` give dimension 1; `rho(M'_k) > 1`
/// together with the sufficient condition gives the spectral formula.
/// Anything else is inconclusive, since divergence of `O_k` cannot be
/// checked from finitely many levels.
pub fn dimension_verdict_with_grid(
    system: &NormalizedSystem,
    grid: &FifGrid,
    options: &DimensionOptions,
) -> Result<DimensionReport> {
    if options.k_max < 1 {
        return Err(FifError::DomainError("k_max must be at least 1".into()));
    }
    let n = system.n();
    let log_n = (n as f64).ln();
    let osc_levels = options.oscillation_levels().min(grid.level().saturating_sub(1)).max(1);
    let profiles = (1..=osc_levels)
        .map(|k| oscillation_profile(grid, k))
        .collect::<Result<Vec<_>>>()?;
    let oscillation = profiles
        .iter()
        .map(|p| OscillationSummary {
            level: p.level,
            total: p.total,
            lower: p.total_lower,
            upper: p.total_upper,
        })
        .collect();

    let (k_lo, k_hi) = options.window();
    let box_counts = (k_lo..=k_hi.min(grid.level() - 1))
        .map(|k| box_count(grid, k))
        .collect::<Result<Vec<_>>>()?;
    let (empirical, empirical_error) = match empirical_dimension(&box_counts, n, (k_lo, k_hi)) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let report = system.report().clone();
    let mut diagnostics = Diagnostics {
        rho_history: Vec::new(),
        oscillation,
        box_counts,
        gamma: None,
        sufficient_condition: None,
        grid_level: grid.level(),
        grid_error_bound: grid.error_bound(),
    };
    let finish = |verdict, branch, diagnostics: Diagnostics| {
        Ok(DimensionReport {
            n,
            validation: report.clone(),
            rho_bracket: diagnostics.rho_history.last().cloned(),
            verdict,
            branch,
            empirical: empirical.clone(),
            empirical_error: empirical_error.clone(),
            diagnostics,
        })
    };

    if system.is_collinear() {
        if report.nonvanishing {
            diagnostics.rho_history = rho_history(system, options.k_max, options.spectral)?;
        }
        return finish(Verdict::Trivial { dimension: 1.0 }, Branch::Collinear, diagnostics);
    }
    if !report.nonvanishing {
        let reason = "S vanishes on a subinterval; the spectral results do not apply".to_string();
        return finish(Verdict::Inconclusive { reason }, Branch::None, diagnostics);
    }

    let gamma = sum_function_report(system, options.k_max)?;
    diagnostics.rho_history = rho_history(system, options.k_max, options.spectral)?;
    let last = diagnostics.rho_history.last().cloned().expect("k_max >= 1");
    let sufficient = sufficient_condition(system, &gamma, &profiles);
    let constant = gamma.is_constant;
    let gamma_0 = 0.5 * (gamma.gamma_star_lower + gamma.gamma_star_upper);
    diagnostics.gamma = Some(gamma);
    diagnostics.sufficient_condition = Some(sufficient.clone());

    if constant && system.is_positive() {
        let verdict = if gamma_0 > 1.0 {
            let dimension = 1.0 + gamma_0.ln() / log_n;
            Verdict::Formula {
                dimension,
                dimension_lower: dimension,
                dimension_upper: dimension,
                rho_s: gamma_0,
                rho_half_width: 0.0,
            }
        } else {
            Verdict::Trivial { dimension: 1.0 }
        };
        return finish(verdict, Branch::ConstantSum, diagnostics);
    }

    let slack = options.spectral.tol;
    if last.upper + slack < 1.0 {
        return finish(Verdict::Trivial { dimension: 1.0 }, Branch::SpectralBound, diagnostics);
    }
    let Some(lower) = last.lower else {
        let reason = "S is not positive, so rho(M'_k) does not bound rho_S from below".to_string();
        return finish(Verdict::Inconclusive { reason }, Branch::None, diagnostics);
    };
    if lower - slack > 1.0 && sufficient.passed {
        let rho_s = 0.5 * (lower + last.upper);
        let verdict = Verdict::Formula {
            dimension: 1.0 + rho_s.ln() / log_n,
            dimension_lower: 1.0 + lower.ln() / log_n,
            dimension_upper: 1.0 + last.upper.ln() / log_n,
            rho_s,
            rho_half_width: 0.5 * (last.upper - lower),
        };
        return finish(verdict, Branch::SufficientCondition, diagnostics);
    }
    let reason = if lower - slack <= 1.0 {
        format!("rho bracket [{lower}, {}] contains 1", last.upper)
    } else if !sufficient.applicable {
        "gamma_* <= 1, so the sufficient condition does not apply".to_string()
    } else {
        format!(
            "no resolved level has certified O_k above the threshold {} (best margin {})",
            sufficient.threshold, sufficient.margin
        )
    };
    finish(Verdict::Inconclusive { reason }, Branch::None, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fif::{normalize, InterpolationProblem};
    use crate::rational::ratio;
    use crate::scaling::ScalingFunction;

    fn small_options() -> DimensionOptions {
        DimensionOptions {
            k_max: 5,
            grid_level: 10,
            ..DimensionOptions::default()
        }
    }

    fn system(values: &[f64], s: ScalingFunction) -> NormalizedSystem {
        let knots: Vec<f64> = (0..values.len())
            .map(|i| i as f64 / (values.len() - 1) as f64)
            .collect();
        normalize(&InterpolationProblem::from_f64(&knots, values, s).unwrap()).unwrap()
    }

    #[test]
    fn example_threshold_is_exact() {
        let sys = normalize(&InterpolationProblem::three_branch_example()).unwrap();
        let grid = evaluate_grid(&sys, 8, GridOptions::default()).unwrap();
        let gamma = sum_function_report(&sys, 2).unwrap();
        let profile = oscillation_profile(&grid, 1).unwrap();
        let sc = sufficient_condition(&sys, &gamma, &[profile]);
        assert!(sc.applicable && sc.passed);
        assert_eq!(sc.level, Some(1));
        assert_eq!(sc.threshold_exact.unwrap().0, ratio(18, 23));
        assert!(sc.threshold >= 18.0 / 23.0 && sc.threshold - 18.0 / 23.0 < 1e-14);
    }

    #[test]
    fn small_gamma_is_not_applicable() {
        let sys = system(
            &[0.0, 1.0, 1.0, 0.0],
            ScalingFunction::from_f64(&[0.0, 1.0], &[vec![1.0 / 6.0]], None).unwrap(),
        );
        let gamma = sum_function_report(&sys, 1).unwrap();
        let sc = sufficient_condition(&sys, &gamma, &[]);
        assert!(!sc.applicable && !sc.passed);
    }

    #[test]
    fn example_formula_at_moderate_level() {
        let sys = normalize(&InterpolationProblem::three_branch_example()).unwrap();
        let r = dimension_verdict(&sys, &small_options()).unwrap();
        assert_eq!(r.branch, Branch::SufficientCondition);
        let Verdict::Formula {
            dimension,
            dimension_lower,
            dimension_upper,
            ..
        } = r.verdict
        else {
            panic!("{:?}", r.verdict);
        };
        assert!(dimension_lower <= dimension && dimension <= dimension_upper);
        assert!((dimension - 1.454).abs() < 2e-3);
    }

    #[test]
    fn collinear_and_constant_branches() {
        let s = ScalingFunction::from_f64(&[0.0, 1.0], &[vec![0.2, 0.5]], None).unwrap();
        let r = dimension_verdict(&system(&[0.0, 1.0, 2.0, 3.0], s), &small_options()).unwrap();
        assert_eq!(r.verdict, Verdict::Trivial { dimension: 1.0 });
        assert_eq!(r.branch, Branch::Collinear);

        let s = ScalingFunction::from_f64(&[0.0, 1.0], &[vec![0.5]], None).unwrap();
        let r = dimension_verdict(&system(&[0.0, 1.0, 1.0, 0.0], s), &small_options()).unwrap();
        assert_eq!(r.branch, Branch::ConstantSum);
        let want = 1.0 + 1.5f64.ln() / 3f64.ln();
        assert!((r.verdict.dimension().unwrap() - want).abs() < 1e-15);

        let s = ScalingFunction::from_f64(&[0.0, 1.0], &[vec![0.25]], None).unwrap();
        let r = dimension_verdict(&system(&[0.0, 1.0, 1.0, 0.0], s), &small_options()).unwrap();
        assert_eq!(r.verdict, Verdict::Trivial { dimension: 1.0 });
    }

    #[test]
    fn small_spectral_radius_is_trivial() {
        // S = 0.1 + 0.1 x: gamma is not constant and rho(M_k) < 1
        let s = ScalingFunction::from_f64(&[0.0, 1.0], &[vec![0.1, 0.1]], None).unwrap();
        let r = dimension_verdict(&system(&[0.0, 1.0, -1.0, 0.0], s), &small_options()).unwrap();
        assert_eq!(r.branch, Branch::SpectralBound);
        assert_eq!(r.verdict.dimension(), Some(1.0));
    }

    #[test]
    fn sign_changing_scaling_is_inconclusive_above_one() {
        let s = ScalingFunction::from_f64(&[0.0, 1.0], &[vec![-0.9, 1.8]], None).unwrap();
        let r = dimension_verdict(&system(&[0.0, 1.0, 1.0, 0.0], s), &small_options()).unwrap();
        assert!(matches!(r.verdict, Verdict::Inconclusive { .. }));
        assert!(r.rho_bracket.unwrap().lower.is_none());
    }
}
