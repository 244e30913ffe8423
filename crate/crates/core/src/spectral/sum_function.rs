use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::extrema::build_extrema_table;
use crate::error::{FifError, Result};
use crate::fif::NormalizedSystem;
use crate::poly::Polynomial;
use crate::rational::{ratio_from_f64, ratio_to_f64, ratio_to_f64_up, Exact};
use crate::scaling::ScalingFunction;

/// Spread `gamma^* - gamma_*` below which `gamma` counts as constant.
pub const CONSTANT_GAMMA_TOL: f64 = 1e-10;

/// One polynomial piece of `gamma` on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumPiece {
    pub lo: BigRational,
    pub hi: BigRational,
    pub poly: Polynomial,
}

/// `gamma(x) = sum_i |S(L_i(x))|` on `[0, 1]` for a piecewise polynomial `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumFunction {
    pieces: Vec<SumPiece>,
    /// False when a sign change of `S` had to be located in floating point.
    exact: bool,
}

impl SumFunction {
    pub fn new(scaling: &ScalingFunction, n: usize) -> Result<Self> {
        let (lo, hi) = scaling.domain_exact();
        if !lo.is_zero() || !hi.is_one() {
            return Err(FifError::DomainError("sum function needs S on [0, 1]".into()));
        }
        let nn = BigRational::from_integer(n.into());
        let slope = nn.recip();
        let offsets: Vec<BigRational> = (0..n).map(|i| BigRational::from_integer(i.into()) / &nn).collect();

        // breakpoints of S pulled back through every L_i
        let mut cuts = vec![BigRational::zero(), BigRational::one()];
        for (i, offset) in offsets.iter().enumerate() {
            let upper = &offsets[i] + &slope;
            for b in scaling.breakpoints() {
                if b > offset && b < &upper {
                    cuts.push((b - offset) * &nn);
                }
            }
        }
        cuts.sort();
        cuts.dedup();

        let polys: Vec<&Polynomial> = scaling.pieces().collect();
        let mut pieces = Vec::new();
        let mut exact = true;
        for pair in cuts.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let mid = (a + b) / BigRational::from_integer(2.into());
            let branches: Vec<Polynomial> = offsets
                .iter()
                .map(|offset| {
                    let x = offset + &slope * &mid;
                    let idx = scaling.breakpoints()[1..]
                        .partition_point(|br| br <= &x)
                        .min(polys.len() - 1);
                    polys[idx].compose_affine(offset, &slope)
                })
                .collect();

            // split further where some branch changes sign
            let mut sub = vec![a.clone(), b.clone()];
            for p in &branches {
                for r in sign_changes(p, a, b) {
                    exact &= p.degree() <= 1;
                    sub.push(r);
                }
            }
            sub.sort();
            sub.dedup();
            for w in sub.windows(2) {
                let m = (&w[0] + &w[1]) / BigRational::from_integer(2.into());
                let poly = branches.iter().fold(Polynomial::zero(), |acc, p| {
                    if p.eval_exact(&m).is_negative() {
                        acc.add(&p.scale(&-BigRational::one()))
                    } else {
                        acc.add(p)
                    }
                });
                pieces.push(SumPiece {
                    lo: w[0].clone(),
                    hi: w[1].clone(),
                    poly,
                });
            }
        }
        Ok(SumFunction { pieces, exact })
    }

    pub fn pieces(&self) -> &[SumPiece] {
        &self.pieces
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn eval(&self, x: f64) -> f64 {
        let idx = self
            .pieces
            .partition_point(|p| ratio_to_f64(&p.hi) < x)
            .min(self.pieces.len() - 1);
        self.pieces[idx].poly.eval(x)
    }

    /// Exact `(min gamma, max gamma)` over `[0, 1]`.
    pub fn extrema(&self) -> (BigRational, BigRational) {
        let mut values = Vec::new();
        for p in &self.pieces {
            values.push(p.poly.eval_exact(&p.lo));
            values.push(p.poly.eval_exact(&p.hi));
            values.extend(
                p.poly
                    .critical_points_in(&p.lo, &p.hi)
                    .iter()
                    .map(|c| p.poly.eval_exact(c)),
            );
        }
        let min = values.iter().min().cloned().expect("at least one piece");
        let max = values.iter().max().cloned().expect("at least one piece");
        (min, max)
    }

    /// Exact `sup |gamma'|`.
    pub fn derivative_sup(&self) -> BigRational {
        self.pieces
            .iter()
            .map(|p| p.poly.derivative().sup_abs_exact(&p.lo, &p.hi))
            .max()
            .unwrap_or_else(BigRational::zero)
    }
}

/// Points in `(a, b)` where `p` changes sign, as rationals.
fn sign_changes(p: &Polynomial, a: &BigRational, b: &BigRational) -> Vec<BigRational> {
    if p.degree() == 1 {
        let root = -&p.coeffs()[0] / &p.coeffs()[1];
        return if &root > a && &root < b { vec![root] } else { Vec::new() };
    }
    p.real_roots_in(ratio_to_f64(a), ratio_to_f64(b))
        .into_iter()
        .filter_map(|r| ratio_from_f64(r).ok())
        .filter(|r| r > a && r < b)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaLevel {
    pub level: u32,
    /// `max_j sum_i s_upper[i][j]`.
    pub upper: f64,
    /// `min_j sum_i s_lower[i][j]`.
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumFunctionReport {
    /// `gamma^* = max gamma` (an upper bound when `S` is a black box).
    pub gamma_star_upper: f64,
    /// `gamma_* = min gamma` (a lower bound when `S` is a black box).
    pub gamma_star_lower: f64,
    /// Lipschitz constant of `gamma`, never above `lambda_S`.
    pub lambda_prime: f64,
    pub per_level: Vec<GammaLevel>,
    pub is_constant: bool,
    /// Exact values when `gamma` has an exact closed form.
    pub gamma_star_upper_exact: Option<Exact>,
    pub gamma_star_lower_exact: Option<Exact>,
    pub lambda_prime_exact: Option<Exact>,
}

/// Analyzes `gamma` in closed form and records `gamma_bar_l`, `gamma_under_l`
/// for `l = 1..=k`.
pub fn sum_function_report(system: &NormalizedSystem, k: u32) -> Result<SumFunctionReport> {
    if k < 1 {
        return Err(FifError::DomainError("level must be at least 1".into()));
    }
    let per_level = (1..=k)
        .map(|level| {
            let t = build_extrema_table(system, level)?;
            Ok(GammaLevel {
                level,
                upper: t.gamma_upper(),
                lower: t.gamma_lower(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let lambda_s = system.lipschitz();
    let report = match system.scaling().as_piecewise() {
        Some(s) => {
            let gamma = SumFunction::new(s, system.n())?;
            let (min, max) = gamma.extrema();
            let deriv = gamma.derivative_sup();
            let spread = ratio_to_f64(&(&max - &min));
            let (lower, upper, lp) = if gamma.is_exact() {
                (ratio_to_f64(&min), ratio_to_f64(&max), ratio_to_f64_up(&deriv))
            } else {
                let pad = 1e-14 * lambda_s.max(1.0);
                (
                    ratio_to_f64(&min) - pad,
                    ratio_to_f64(&max) + pad,
                    ratio_to_f64_up(&deriv) + pad,
                )
            };
            let exact = gamma.is_exact();
            SumFunctionReport {
                gamma_star_upper: upper,
                gamma_star_lower: lower,
                lambda_prime: lp.min(lambda_s),
                per_level,
                is_constant: spread <= CONSTANT_GAMMA_TOL,
                gamma_star_upper_exact: exact.then_some(Exact(max)),
                gamma_star_lower_exact: exact.then_some(Exact(min)),
                lambda_prime_exact: exact.then_some(Exact(deriv)),
            }
        }
        None => {
            // only certified bounds from the finest table are available
            let last = *per_level.last().expect("k >= 1");
            SumFunctionReport {
                gamma_star_upper: last.upper,
                gamma_star_lower: last.lower,
                lambda_prime: lambda_s,
                is_constant: last.upper - last.lower <= CONSTANT_GAMMA_TOL,
                per_level,
                gamma_star_upper_exact: None,
                gamma_star_lower_exact: None,
                lambda_prime_exact: None,
            }
        }
    };
    Ok(report)
}
