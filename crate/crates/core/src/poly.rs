//! Polynomials with exact rational coefficients and an `f64` shadow.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::rational::{ratio_from_f64, ratio_to_f64};

/// Polynomial in ascending-power order, kept exactly and as doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    exact: Vec<BigRational>,
    approx: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigRational::zero());
        }
        let approx = coeffs.iter().map(ratio_to_f64).collect();
        Polynomial { exact: coeffs, approx }
    }

    pub fn constant(value: BigRational) -> Self {
        Polynomial::new(vec![value])
    }

    pub fn zero() -> Self {
        Polynomial::new(Vec::new())
    }

    pub fn degree(&self) -> usize {
        self.exact.len() - 1
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.exact
    }

    pub fn coeffs_f64(&self) -> &[f64] {
        &self.approx
    }

    pub fn is_zero(&self) -> bool {
        self.exact.len() == 1 && self.exact[0].is_zero()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.approx.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        self.exact.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        let coeffs = self
            .exact
            .iter()
            .enumerate()
            .skip(1)
            .map(|(power, c)| c * BigRational::from_integer(power.into()))
            .collect();
        Polynomial::new(coeffs)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let len = self.exact.len().max(other.exact.len());
        let zero = BigRational::zero();
        let coeffs = (0..len)
            .map(|n| self.exact.get(n).unwrap_or(&zero) + other.exact.get(n).unwrap_or(&zero))
            .collect();
        Polynomial::new(coeffs)
    }

    pub fn scale(&self, factor: &BigRational) -> Polynomial {
        Polynomial::new(self.exact.iter().map(|c| c * factor).collect())
    }

    fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = vec![BigRational::zero(); self.exact.len() + other.exact.len() - 1];
        for (a_pow, a) in self.exact.iter().enumerate() {
            for (b_pow, b) in other.exact.iter().enumerate() {
                out[a_pow + b_pow] += a * b;
            }
        }
        Polynomial::new(out)
    }

    /// Returns `t -> p(offset + slope * t)`.
    pub fn compose_affine(&self, offset: &BigRational, slope: &BigRational) -> Polynomial {
        let inner = Polynomial::new(vec![offset.clone(), slope.clone()]);
        self.exact.iter().rev().fold(Polynomial::zero(), |acc, c| {
            acc.mul(&inner).add(&Polynomial::constant(c.clone()))
        })
    }

    /// Real roots in the open interval `(lo, hi)`, ascending, computed in `f64`.
    ///
    /// Roots are isolated between consecutive critical points (found
    /// recursively from the derivative) and refined by bisection.
    pub fn real_roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        if !(lo < hi) {
            return Vec::new();
        }
        match self.degree() {
            0 => Vec::new(),
            1 => {
                let root = -self.approx[0] / self.approx[1];
                if root > lo && root < hi {
                    vec![root]
                } else {
                    Vec::new()
                }
            }
            _ => {
                let mut knots = vec![lo];
                knots.extend(self.derivative().real_roots_in(lo, hi));
                knots.push(hi);
                let mut roots = Vec::new();
                for pair in knots.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    let (fa, fb) = (self.eval(a), self.eval(b));
                    if fb == 0.0 && b < hi {
                        roots.push(b);
                    } else if fa != 0.0 && fb != 0.0 && fa.signum() != fb.signum() {
                        roots.push(bisect(|x| self.eval(x), a, b, fa));
                    }
                }
                roots.dedup();
                roots
            }
        }
    }

    /// Critical points (roots of the derivative) strictly inside `(lo, hi)`.
    ///
    /// Exact when the derivative is at most linear; otherwise the `f64` roots
    /// are converted exactly to rationals.
    pub fn critical_points_in(&self, lo: &BigRational, hi: &BigRational) -> Vec<BigRational> {
        let deriv = self.derivative();
        match deriv.degree() {
            0 => Vec::new(),
            1 => {
                let root = -&deriv.exact[0] / &deriv.exact[1];
                if &root > lo && &root < hi {
                    vec![root]
                } else {
                    Vec::new()
                }
            }
            _ => deriv
                .real_roots_in(ratio_to_f64(lo), ratio_to_f64(hi))
                .into_iter()
                .filter_map(|r| ratio_from_f64(r).ok())
                .filter(|r| r > lo && r < hi)
                .collect(),
        }
    }

    /// Exact supremum of `|p|` over `[lo, hi]`.
    pub fn sup_abs_exact(&self, lo: &BigRational, hi: &BigRational) -> BigRational {
        let mut best = self.eval_exact(lo).abs().max(self.eval_exact(hi).abs());
        for c in self.critical_points_in(lo, hi) {
            best = best.max(self.eval_exact(&c).abs());
        }
        best
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn poly(c: &[(i64, i64)]) -> Polynomial {
        Polynomial::new(c.iter().map(|&(n, d)| ratio(n, d)).collect())
    }

    #[test]
    fn exact_evaluation() {
        let p = poly(&[(1, 3), (0, 1), (1, 1)]);
        assert_eq!(p.eval_exact(&ratio(4, 9)), ratio(43, 81));
        assert_eq!(p.eval_exact(&ratio(2, 3)), ratio(7, 9));
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let p = poly(&[(1, 2), (0, 1), (0, 1)]);
        assert_eq!(p.degree(), 0);
        assert!(poly(&[]).is_zero());
    }

    #[test]
    fn affine_composition_matches_pointwise() {
        let p = poly(&[(1, 1), (-2, 1), (3, 1), (5, 7)]);
        let q = p.compose_affine(&ratio(1, 3), &ratio(2, 5));
        for t in [ratio(0, 1), ratio(1, 2), ratio(-3, 4), ratio(7, 3)] {
            let x = ratio(1, 3) + ratio(2, 5) * &t;
            assert_eq!(q.eval_exact(&t), p.eval_exact(&x));
        }
    }

    #[test]
    fn cubic_roots() {
        // (x - 0.1)(x - 0.5)(x - 0.9)
        let p = Polynomial::new(vec![ratio(-9, 200), ratio(59, 100), ratio(-3, 2), ratio(1, 1)]);
        let roots = p.real_roots_in(0.0, 1.0);
        assert_eq!(roots.len(), 3);
        for (r, want) in roots.iter().zip([0.1, 0.5, 0.9]) {
            assert!((r - want).abs() < 1e-14, "{r}");
        }
        assert!(p.real_roots_in(0.2, 0.4).is_empty());
    }

    #[test]
    fn critical_point_of_quadratic_is_exact() {
        let p = poly(&[(5, 3), (-1, 9), (1, 9)]);
        let crit = p.critical_points_in(&ratio(0, 1), &ratio(1, 1));
        assert_eq!(crit, vec![ratio(1, 2)]);
        assert_eq!(p.eval_exact(&crit[0]), ratio(59, 36));
    }

    #[test]
    fn sup_abs_includes_interior_extremum() {
        let p = poly(&[(0, 1), (1, 1), (-1, 1)]); // x - x^2, peak 1/4 at 1/2
        assert_eq!(p.sup_abs_exact(&ratio(0, 1), &ratio(1, 1)), ratio(1, 4));
        assert_eq!(p.derivative().sup_abs_exact(&ratio(0, 1), &ratio(1, 1)), ratio(1, 1));
    }
}
