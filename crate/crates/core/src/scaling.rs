//! Vertical scaling functions.
//!
//! The primary representation is a continuous piecewise polynomial of
//! degree at most 3 whose interval extrema of `|S|` are computed exactly.
//! [`BlackBoxScaling`] wraps an arbitrary Lipschitz callable; its extrema
//! come from a certified grid scan and are widened by the scan tolerance.

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{FifError, Result};
use crate::poly::Polynomial;
use crate::rational::{ratio_from_f64, ratio_to_f64, ratio_to_f64_up};

/// Highest polynomial degree accepted for a piece.
pub const MAX_PIECE_DEGREE: usize = 3;
/// Allowed jump of `S` at interior breakpoints.
pub const CONTINUITY_TOL: f64 = 1e-12;
/// Default certification tolerance of the black-box grid scan.
pub const DEFAULT_SCAN_DELTA: f64 = 1e-10;
/// Largest number of samples a single black-box scan may take.
pub const MAX_SCAN_POINTS: u64 = 10_000_000;

/// Minimum and maximum of `|S|` over a closed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsExtrema {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Piece {
    poly: Polynomial,
    /// Critical points strictly inside the piece, with their exact values.
    critical: Vec<(BigRational, f64)>,
}

/// Continuous piecewise polynomial `S` with a certified Lipschitz constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFunction {
    breaks: Vec<BigRational>,
    breaks_f64: Vec<f64>,
    pieces: Vec<Piece>,
    lipschitz: f64,
    derivative_sup: f64,
}

impl ScalingFunction {
    /// Builds `S` from breakpoints and ascending-power coefficient lists.
    ///
    /// Without an override the Lipschitz constant is the exact sup of `|S'|`
    /// rounded upward (or the smallest positive double when `S` is constant).
    pub fn new(breaks: Vec<BigRational>, coeffs: Vec<Vec<BigRational>>, lipschitz: Option<f64>) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(FifError::MalformedInput(
                "scaling function needs at least two breakpoints".into(),
            ));
        }
        if breaks.len() != coeffs.len() + 1 {
            return Err(FifError::MalformedInput(format!(
                "{} breakpoints need {} pieces, got {}",
                breaks.len(),
                breaks.len() - 1,
                coeffs.len()
            )));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FifError::MalformedInput(
                "scaling breakpoints must be strictly increasing".into(),
            ));
        }

        let mut pieces = Vec::with_capacity(coeffs.len());
        let mut derivative_sup = BigRational::zero();
        for (idx, c) in coeffs.into_iter().enumerate() {
            let poly = Polynomial::new(c);
            if poly.degree() > MAX_PIECE_DEGREE {
                return Err(FifError::MalformedInput(format!(
                    "piece {idx} has degree {} > {MAX_PIECE_DEGREE}",
                    poly.degree()
                )));
            }
            let (lo, hi) = (&breaks[idx], &breaks[idx + 1]);
            derivative_sup = derivative_sup.max(poly.derivative().sup_abs_exact(lo, hi));
            let critical = poly
                .critical_points_in(lo, hi)
                .into_iter()
                .map(|x| {
                    let v = ratio_to_f64(&poly.eval_exact(&x));
                    (x, v)
                })
                .collect();
            pieces.push(Piece { poly, critical });
        }

        for idx in 1..pieces.len() {
            let at = &breaks[idx];
            let left = pieces[idx - 1].poly.eval_exact(at);
            let right = pieces[idx].poly.eval_exact(at);
            let jump = ratio_to_f64(&(left - right).abs());
            if jump > CONTINUITY_TOL {
                return Err(FifError::MalformedInput(format!(
                    "scaling function jumps by {jump:e} at breakpoint {}",
                    ratio_to_f64(at)
                )));
            }
        }

        let derivative_sup = ratio_to_f64_up(&derivative_sup);
        let lipschitz = match lipschitz {
            Some(l) if !(l > 0.0) || !l.is_finite() => {
                return Err(FifError::MalformedInput(format!(
                    "Lipschitz constant {l} must be positive"
                )))
            }
            Some(l) if l < derivative_sup => {
                return Err(FifError::MalformedInput(format!(
                    "Lipschitz constant {l} is below sup|S'| = {derivative_sup}"
                )))
            }
            Some(l) => l,
            None if derivative_sup > 0.0 => derivative_sup,
            None => f64::MIN_POSITIVE,
        };

        let breaks_f64 = breaks.iter().map(ratio_to_f64).collect();
        Ok(ScalingFunction {
            breaks,
            breaks_f64,
            pieces,
            lipschitz,
            derivative_sup,
        })
    }

    /// Convenience constructor from doubles (each taken as its exact value).
    pub fn from_f64(breaks: &[f64], coeffs: &[Vec<f64>], lipschitz: Option<f64>) -> Result<Self> {
        let breaks = breaks.iter().map(|&b| ratio_from_f64(b)).collect::<Result<Vec<_>>>()?;
        let coeffs = coeffs
            .iter()
            .map(|c| c.iter().map(|&v| ratio_from_f64(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        ScalingFunction::new(breaks, coeffs, lipschitz)
    }

    pub fn constant(value: BigRational, lo: BigRational, hi: BigRational) -> Result<Self> {
        ScalingFunction::new(vec![lo, hi], vec![vec![value]], None)
    }

    pub fn breakpoints(&self) -> &[BigRational] {
        &self.breaks
    }

    pub fn breakpoints_f64(&self) -> &[f64] {
        &self.breaks_f64
    }

    pub fn pieces(&self) -> impl ExactSizeIterator<Item = &Polynomial> {
        self.pieces.iter().map(|p| &p.poly)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Exact `sup |S'|`, rounded upward.
    pub fn derivative_sup(&self) -> f64 {
        self.derivative_sup
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breaks_f64[0], *self.breaks_f64.last().unwrap())
    }

    pub fn domain_exact(&self) -> (&BigRational, &BigRational) {
        (&self.breaks[0], self.breaks.last().unwrap())
    }

    fn piece_index(&self, x: f64) -> usize {
        let interior = &self.breaks_f64[1..self.breaks_f64.len() - 1];
        interior.partition_point(|&b| b <= x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].poly.eval(x)
    }

    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        let interior = &self.breaks[1..self.breaks.len() - 1];
        let idx = interior.partition_point(|b| b <= x);
        self.pieces[idx].poly.eval_exact(x)
    }

    /// Exact extrema of `|S|` over `[a, b]`, each rounded once to `f64`.
    pub fn abs_extrema_exact(&self, a: &BigRational, b: &BigRational) -> Result<AbsExtrema> {
        let (lo_dom, hi_dom) = self.domain_exact();
        if a > b {
            return Err(FifError::DomainError("inverted interval".into()));
        }
        if a < lo_dom || b > hi_dom {
            return Err(FifError::DomainError(format!(
                "interval [{}, {}] leaves the domain of S",
                ratio_to_f64(a),
                ratio_to_f64(b)
            )));
        }
        let first = self.breaks[1..].partition_point(|br| br < a);
        let mut values: Vec<f64> = Vec::with_capacity(4);
        for idx in first..self.pieces.len() {
            if &self.breaks[idx] > b {
                break;
            }
            let piece = &self.pieces[idx];
            let lo = a.max(&self.breaks[idx]);
            let hi = b.min(&self.breaks[idx + 1]);
            values.push(ratio_to_f64(&piece.poly.eval_exact(lo)));
            if hi != lo {
                values.push(ratio_to_f64(&piece.poly.eval_exact(hi)));
            }
            values.extend(piece.critical.iter().filter(|(x, _)| x > lo && x < hi).map(|&(_, v)| v));
        }
        Ok(abs_extrema_of(&values))
    }

    /// Extrema of `|S|` over `[a, b]` given as doubles (taken exactly).
    pub fn abs_extrema(&self, a: f64, b: f64) -> Result<AbsExtrema> {
        if !(a < b) {
            return Err(FifError::DomainError(format!("empty or inverted interval [{a}, {b}]")));
        }
        self.abs_extrema_exact(&ratio_from_f64(a)?, &ratio_from_f64(b)?)
    }

    /// Signed minimum and maximum of `S` over its whole domain.
    pub fn range(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for (idx, piece) in self.pieces.iter().enumerate() {
            let ends = [&self.breaks[idx], &self.breaks[idx + 1]];
            let values = ends
                .iter()
                .map(|x| ratio_to_f64(&piece.poly.eval_exact(x)))
                .chain(piece.critical.iter().map(|&(_, v)| v));
            for v in values {
                min = min.min(v);
                max = max.max(v);
            }
        }
        (min, max)
    }

    /// Exact `(min S, max S)` over the domain; the flag is false when a cubic
    /// piece forced a floating-point critical point.
    pub fn range_exact(&self) -> (BigRational, BigRational, bool) {
        let mut exact = true;
        let mut values = Vec::new();
        for (idx, piece) in self.pieces.iter().enumerate() {
            values.push(piece.poly.eval_exact(&self.breaks[idx]));
            values.push(piece.poly.eval_exact(&self.breaks[idx + 1]));
            if piece.poly.degree() > 2 && !piece.critical.is_empty() {
                exact = false;
            }
            values.extend(piece.critical.iter().map(|(x, _)| piece.poly.eval_exact(x)));
        }
        let min = values.iter().min().cloned().unwrap_or_else(BigRational::zero);
        let max = values.iter().max().cloned().unwrap_or_else(BigRational::zero);
        (min, max, exact)
    }

    /// True when some piece is the zero polynomial, i.e. `S` vanishes on a subinterval.
    pub fn vanishes_on_subinterval(&self) -> bool {
        self.pieces.iter().any(|p| p.poly.is_zero())
    }

    /// Re-expresses `S` on `[0, 1]` through `x = lo + t (hi - lo)`.
    pub fn to_unit_interval(&self) -> ScalingFunction {
        let (lo, hi) = self.domain_exact();
        let width = hi - lo;
        let breaks = self.breaks.iter().map(|b| (b - lo) / &width).collect();
        let coeffs = self
            .pieces
            .iter()
            .map(|p| p.poly.compose_affine(lo, &width).coeffs().to_vec())
            .collect();
        let scaled_lipschitz = ratio_to_f64_up(&(ratio_from_f64(self.lipschitz).expect("finite") * &width));
        ScalingFunction::new(breaks, coeffs, Some(scaled_lipschitz))
            .expect("affine reparameterization preserves validity")
    }
}

fn abs_extrema_of(values: &[f64]) -> AbsExtrema {
    let has_nonpos = values.iter().any(|&v| v <= 0.0);
    let has_nonneg = values.iter().any(|&v| v >= 0.0);
    let max = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min = if has_nonpos && has_nonneg {
        0.0
    } else {
        values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    };
    AbsExtrema { min, max }
}

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A Lipschitz scaling function known only through evaluation.
#[derive(Clone)]
pub struct BlackBoxScaling {
    func: Arc<ScalarFn>,
    lo: f64,
    hi: f64,
    lipschitz: f64,
    delta: f64,
}

impl fmt::Debug for BlackBoxScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBoxScaling")
            .field("domain", &(self.lo, self.hi))
            .field("lipschitz", &self.lipschitz)
            .field("delta", &self.delta)
            .finish_non_exhaustive()
    }
}

impl BlackBoxScaling {
    pub fn new(
        func: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain: (f64, f64),
        lipschitz: f64,
        delta: f64,
    ) -> Result<Self> {
        if !(domain.0 < domain.1) {
            return Err(FifError::MalformedInput(
                "black-box domain must be a proper interval".into(),
            ));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) || !(delta > 0.0) {
            return Err(FifError::MalformedInput(
                "black-box scaling needs a positive Lipschitz constant and scan tolerance".into(),
            ));
        }
        Ok(BlackBoxScaling {
            func: Arc::new(func),
            lo: domain.0,
            hi: domain.1,
            lipschitz,
            delta,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.func)(x)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn scan<T>(&self, a: f64, b: f64, mut visit: impl FnMut(f64) -> T) -> Result<()> {
        let steps = (self.lipschitz * (b - a) / (2.0 * self.delta)).ceil().max(1.0);
        if steps > MAX_SCAN_POINTS as f64 {
            return Err(FifError::ResourceLimit {
                what: format!("black-box scan of [{a}, {b}] needs {steps:e} samples"),
                achieved_width: None,
            });
        }
        let steps = steps as u64;
        for s in 0..=steps {
            let x = if s == steps {
                b
            } else {
                a + (b - a) * (s as f64 / steps as f64)
            };
            visit(self.eval(x));
        }
        Ok(())
    }

    /// Grid-scan extrema of `|S|`, widened by the scan tolerance so that the
    /// result brackets the true extrema.
    pub fn abs_extrema(&self, a: f64, b: f64) -> Result<AbsExtrema> {
        if !(a <= b) || a < self.lo || b > self.hi {
            return Err(FifError::DomainError(format!("bad black-box interval [{a}, {b}]")));
        }
        let mut values = Vec::new();
        self.scan(a, b, |v| values.push(v))?;
        let sampled = abs_extrema_of(&values);
        Ok(AbsExtrema {
            min: (sampled.min - self.delta).max(0.0),
            max: sampled.max + self.delta,
        })
    }

    /// Signed range over the whole domain, widened by the scan tolerance.
    pub fn range(&self) -> Result<(f64, f64)> {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        self.scan(self.lo, self.hi, |v| {
            min = min.min(v);
            max = max.max(v);
        })?;
        Ok((min - self.delta, max + self.delta))
    }

    pub fn to_unit_interval(&self) -> BlackBoxScaling {
        let (lo, width) = (self.lo, self.hi - self.lo);
        let inner = Arc::clone(&self.func);
        BlackBoxScaling {
            func: Arc::new(move |t| inner(lo + t * width)),
            lo: 0.0,
            hi: 1.0,
            lipschitz: (self.lipschitz * width).next_up(),
            delta: self.delta,
        }
    }
}

/// Either representation of the vertical scaling function.
#[derive(Debug, Clone)]
pub enum Scaling {
    Piecewise(ScalingFunction),
    BlackBox(BlackBoxScaling),
}

impl From<ScalingFunction> for Scaling {
    fn from(s: ScalingFunction) -> Self {
        Scaling::Piecewise(s)
    }
}

impl From<BlackBoxScaling> for Scaling {
    fn from(s: BlackBoxScaling) -> Self {
        Scaling::BlackBox(s)
    }
}

impl Scaling {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Scaling::Piecewise(s) => s.eval(x),
            Scaling::BlackBox(s) => s.eval(x),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Scaling::Piecewise(s) => s.lipschitz(),
            Scaling::BlackBox(s) => s.lipschitz(),
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            Scaling::Piecewise(s) => s.domain(),
            Scaling::BlackBox(s) => s.domain(),
        }
    }

    /// Additive slack on extrema: zero for exact pieces, the scan tolerance otherwise.
    pub fn extrema_slack(&self) -> f64 {
        match self {
            Scaling::Piecewise(_) => 0.0,
            Scaling::BlackBox(s) => s.delta(),
        }
    }

    /// Extrema of `|S|` over `[num_lo, num_hi] / den`.
    pub fn abs_extrema_rational(&self, num_lo: u64, num_hi: u64, den: u64) -> Result<AbsExtrema> {
        match self {
            Scaling::Piecewise(s) => {
                let den = BigRational::from_integer(den.into());
                let a = BigRational::from_integer(num_lo.into()) / &den;
                let b = BigRational::from_integer(num_hi.into()) / &den;
                s.abs_extrema_exact(&a, &b)
            }
            Scaling::BlackBox(s) => s.abs_extrema(num_lo as f64 / den as f64, num_hi as f64 / den as f64),
        }
    }

    /// `|S|` at `num / den`, exact for piecewise polynomials.
    pub fn abs_at_rational(&self, num: u64, den: u64) -> f64 {
        match self {
            Scaling::Piecewise(s) => {
                let x = BigRational::new(num.into(), den.into());
                ratio_to_f64(&s.eval_exact(&x)).abs()
            }
            Scaling::BlackBox(s) => s.eval(num as f64 / den as f64).abs(),
        }
    }

    pub fn abs_extrema(&self, a: f64, b: f64) -> Result<AbsExtrema> {
        match self {
            Scaling::Piecewise(s) => s.abs_extrema(a, b),
            Scaling::BlackBox(s) => s.abs_extrema(a, b),
        }
    }

    /// Signed `(min S, max S)` over the domain.
    pub fn range(&self) -> Result<(f64, f64)> {
        match self {
            Scaling::Piecewise(s) => Ok(s.range()),
            Scaling::BlackBox(s) => s.range(),
        }
    }

    pub fn to_unit_interval(&self) -> Scaling {
        match self {
            Scaling::Piecewise(s) => Scaling::Piecewise(s.to_unit_interval()),
            Scaling::BlackBox(s) => Scaling::BlackBox(s.to_unit_interval()),
        }
    }

    pub fn as_piecewise(&self) -> Option<&ScalingFunction> {
        match self {
            Scaling::Piecewise(s) => Some(s),
            Scaling::BlackBox(_) => None,
        }
    }
}
