use num_rational::BigRational;
use num_traits::Signed;

use super::problem::{validate, InterpolationProblem, ValidationReport};
use crate::error::{FifError, Result};
use crate::rational::{ratio_to_f64, ratio_to_f64_up};
use crate::scaling::Scaling;

/// The problem moved to `[0, 1]` with zero end values, so that
/// `f(x) = S(x) f(N x - (i - 1)) + h(x)` on the `i`-th branch interval.
#[derive(Debug, Clone)]
pub struct NormalizedSystem {
    n: usize,
    h_values: Vec<f64>,
    scaling: Scaling,
    beta: f64,
    sup_f_bound: f64,
    report: ValidationReport,
}

/// Maps the problem affinely onto `[0, 1]` and subtracts the baseline.
///
/// The graph of the normalized function is a bi-Lipschitz image of the
/// original graph, so dimension results carry over unchanged.
pub fn normalize(problem: &InterpolationProblem) -> Result<NormalizedSystem> {
    let report = validate(problem)?;
    report.require_construction()?;

    let residuals = problem.baseline_residuals();
    let max_h = residuals.iter().map(|r| r.abs()).max().expect("at least three knots");
    let h_values = residuals.iter().map(ratio_to_f64).collect();
    let scaling = problem.scaling().to_unit_interval();

    let (beta, sup_f_bound) = match &scaling {
        Scaling::Piecewise(s) => {
            let (lo, hi, exact) = s.range_exact();
            let sup = lo.abs().max(hi.abs());
            let one = BigRational::from_integer(1.into());
            let bound = &max_h / (&one - &sup);
            if exact {
                (ratio_to_f64(&sup), ratio_to_f64_up(&bound))
            } else {
                let beta = ratio_to_f64_up(&sup);
                (beta, (ratio_to_f64_up(&max_h) / (1.0 - beta)).next_up())
            }
        }
        Scaling::BlackBox(_) => {
            let beta = report.sup_abs_s;
            (beta, (ratio_to_f64_up(&max_h) / (1.0 - beta)).next_up())
        }
    };
    if !(beta < 1.0) {
        return Err(FifError::ContractivityViolation { sup_abs: beta });
    }

    Ok(NormalizedSystem {
        n: problem.n(),
        h_values,
        scaling,
        beta,
        sup_f_bound,
        report,
    })
}

impl NormalizedSystem {
    /// Branch count `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Values of `h` at `i/N`, `i = 0..=N`.
    pub fn h_values(&self) -> &[f64] {
        &self.h_values
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    /// Uniform contraction factor `sup |S|`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Upper bound on `sup |f|`: `max |h| / (1 - beta)`.
    pub fn sup_f_bound(&self) -> f64 {
        self.sup_f_bound
    }

    /// Lipschitz constant of `S` on `[0, 1]`.
    pub fn lipschitz(&self) -> f64 {
        self.scaling.lipschitz()
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn min_s(&self) -> f64 {
        self.report.min_s
    }

    pub fn is_positive(&self) -> bool {
        self.report.positive
    }

    pub fn is_collinear(&self) -> bool {
        self.report.collinear
    }

    /// `C = 1 / min S`, defined when `S > 0`.
    pub fn positivity_constant(&self) -> Option<f64> {
        if !self.is_positive() {
            return None;
        }
        match &self.scaling {
            Scaling::Piecewise(s) => match s.range_exact() {
                (min, _, true) => Some(ratio_to_f64_up(&min.recip())),
                _ => Some((1.0 / self.min_s()).next_up()),
            },
            Scaling::BlackBox(_) => Some((1.0 / self.min_s()).next_up()),
        }
    }

    /// Branch index `i` (1-based) used for `x`: the largest `i` with
    /// `(i - 1)/N <= x`, with `x = 1` assigned to the last branch.
    pub fn branch_of(&self, x: f64) -> usize {
        ((x * self.n as f64).floor() as usize + 1).clamp(1, self.n)
    }

    /// `L_i^{-1}(x) = N x - (i - 1)`.
    pub fn inverse_map(&self, branch: usize, x: f64) -> f64 {
        (self.n as f64 * x - (branch - 1) as f64).clamp(0.0, 1.0)
    }

    /// The piecewise linear interpolant `h` through `(i/N, h_i)`.
    pub fn h(&self, x: f64) -> f64 {
        let branch = self.branch_of(x);
        let t = self.inverse_map(branch, x);
        let (a, b) = (self.h_values[branch - 1], self.h_values[branch]);
        a + (b - a) * t
    }

    /// Largest slope magnitude of `h`.
    pub fn h_slope_sup(&self) -> f64 {
        self.h_values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() * self.n as f64)
            .fold(0.0, f64::max)
    }
}
