use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{FifError, Result};
use crate::rational::{ratio, ratio_from_f64, ratio_to_f64};
use crate::scaling::{Scaling, ScalingFunction};

/// Relative tolerance on the uniform knot spacing.
pub const SPACING_TOL: f64 = 1e-12;

/// Interpolation data `(x_i, y_i)`, `i = 0..=N`, with a vertical scaling function.
#[derive(Debug, Clone)]
pub struct InterpolationProblem {
    knots: Vec<BigRational>,
    values: Vec<BigRational>,
    scaling: Scaling,
}

impl InterpolationProblem {
    pub fn new(knots: Vec<BigRational>, values: Vec<BigRational>, scaling: impl Into<Scaling>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(FifError::MalformedInput(format!(
                "{} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.len() < 3 {
            return Err(FifError::MalformedInput(format!(
                "need N >= 2 (at least 3 knots), got {}",
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FifError::MalformedInput("knots must be strictly increasing".into()));
        }
        Ok(InterpolationProblem {
            knots,
            values,
            scaling: scaling.into(),
        })
    }

    pub fn from_f64(knots: &[f64], values: &[f64], scaling: impl Into<Scaling>) -> Result<Self> {
        let knots = knots.iter().map(|&k| ratio_from_f64(k)).collect::<Result<Vec<_>>>()?;
        let values = values.iter().map(|&v| ratio_from_f64(v)).collect::<Result<Vec<_>>>()?;
        InterpolationProblem::new(knots, values, scaling)
    }

    /// Three branches on `[0, 1]` through `(0,0), (1/3,1), (2/3,1), (1,0)` with
    /// `S = 4/9`, `x^2 + 1/3`, `13/9 - x` on the thirds of the interval.
    pub fn three_branch_example() -> Self {
        let scaling = ScalingFunction::new(
            vec![ratio(0, 1), ratio(1, 3), ratio(2, 3), ratio(1, 1)],
            vec![
                vec![ratio(4, 9)],
                vec![ratio(1, 3), ratio(0, 1), ratio(1, 1)],
                vec![ratio(13, 9), ratio(-1, 1)],
            ],
            None,
        )
        .expect("bundled scaling function is valid");
        InterpolationProblem::new(
            (0..=3).map(|i| ratio(i, 3)).collect(),
            vec![ratio(0, 1), ratio(1, 1), ratio(1, 1), ratio(0, 1)],
            scaling,
        )
        .expect("bundled problem is valid")
    }

    /// Branch count `N`.
    pub fn n(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn knots(&self) -> &[BigRational] {
        &self.knots
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn knots_f64(&self) -> Vec<f64> {
        self.knots.iter().map(ratio_to_f64).collect()
    }

    pub fn values_f64(&self) -> Vec<f64> {
        self.values.iter().map(ratio_to_f64).collect()
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    /// `y_i - b(x_i)` where `b` is the line through the first and last data
    /// points, taken at the uniform knots `x_0 + i (x_N - x_0) / N` so that
    /// knots given in floating point do not leave rounding residue.
    pub(crate) fn baseline_residuals(&self) -> Vec<BigRational> {
        let n = BigRational::from_integer(self.n().into());
        let (y0, yn) = (&self.values[0], self.values.last().unwrap());
        let step = (yn - y0) / &n;
        self.values
            .iter()
            .enumerate()
            .map(|(i, y)| y - (y0 + &step * BigRational::from_integer(i.into())))
            .collect()
    }
}

/// Which structural conditions a problem satisfies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n: usize,
    /// Largest relative deviation of a knot gap from `(x_N - x_0)/N`.
    pub spacing_deviation: f64,
    /// Uniform spacing of the knots (A4).
    pub uniform_spacing: bool,
    /// `S` is Lipschitz with a certified constant (A5).
    pub lipschitz: bool,
    pub lipschitz_constant: f64,
    /// `min S > 0` (A6).
    pub positive: bool,
    /// `S` does not vanish identically on any subinterval (A6').
    pub nonvanishing: bool,
    pub min_s: f64,
    pub max_s: f64,
    pub sup_abs_s: f64,
    /// `sup |S| < 1`.
    pub contractive: bool,
    /// The scaling function is defined exactly on `[x_0, x_N]`.
    pub domain_matches: bool,
    /// All data points lie on one line.
    pub collinear: bool,
}

impl ValidationReport {
    /// Conditions needed to build and evaluate the normalized system.
    pub fn require_construction(&self) -> Result<()> {
        if !self.domain_matches {
            return Err(FifError::ConditionNotMet {
                condition: "S defined on [x_0, x_N]",
            });
        }
        if !self.uniform_spacing {
            return Err(FifError::ConditionNotMet {
                condition: "A4 (uniform knots)",
            });
        }
        if !self.lipschitz {
            return Err(FifError::ConditionNotMet {
                condition: "A5 (Lipschitz S)",
            });
        }
        if !self.contractive {
            return Err(FifError::ContractivityViolation {
                sup_abs: self.sup_abs_s,
            });
        }
        Ok(())
    }

    pub fn require_positive(&self) -> Result<()> {
        if self.positive {
            Ok(())
        } else {
            Err(FifError::ConditionNotMet {
                condition: "A6 (S > 0)",
            })
        }
    }

    pub fn require_nonvanishing(&self) -> Result<()> {
        if self.nonvanishing {
            Ok(())
        } else {
            Err(FifError::ConditionNotMet {
                condition: "A6' (S not identically zero on a subinterval)",
            })
        }
    }
}

/// Checks the standing conditions on the data and the scaling function.
pub fn validate(problem: &InterpolationProblem) -> Result<ValidationReport> {
    let n = problem.n();
    let knots = problem.knots();
    let total = ratio_to_f64(&(knots.last().unwrap() - &knots[0]));
    let target = total / n as f64;
    let spacing_deviation = knots
        .windows(2)
        .map(|w| (ratio_to_f64(&(&w[1] - &w[0])) - target).abs() / target)
        .fold(0.0, f64::max);

    let (min_s, max_s, nonvanishing) = match problem.scaling() {
        Scaling::Piecewise(s) => {
            let (lo, hi) = s.range();
            (lo, hi, !s.vanishes_on_subinterval())
        }
        Scaling::BlackBox(s) => {
            let (lo, hi) = s.range()?;
            // vanishing cannot be ruled out from samples unless S stays positive
            (lo, hi, lo > 0.0)
        }
    };
    let sup_abs_s = min_s.abs().max(max_s.abs());

    let domain_matches = match problem.scaling() {
        Scaling::Piecewise(s) => {
            let (lo, hi) = s.domain_exact();
            lo == &knots[0] && hi == knots.last().unwrap()
        }
        Scaling::BlackBox(s) => s.domain() == (ratio_to_f64(&knots[0]), ratio_to_f64(knots.last().unwrap())),
    };

    Ok(ValidationReport {
        n,
        spacing_deviation,
        uniform_spacing: spacing_deviation <= SPACING_TOL,
        lipschitz: problem.scaling().lipschitz() > 0.0,
        lipschitz_constant: problem.scaling().lipschitz(),
        positive: min_s > 0.0,
        nonvanishing,
        min_s,
        max_s,
        sup_abs_s,
        contractive: sup_abs_s < 1.0,
        domain_matches,
        collinear: problem.baseline_residuals().iter().all(Zero::is_zero),
    })
}
