use num_bigint::BigInt;
use num_rational::BigRational;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyFloat, PyInt};

use fifdim_core::dimension::{self, DimensionOptions, Verdict};
use fifdim_core::fif::{self, GridOptions, InterpolationProblem, NormalizedSystem, ValidationReport};
use fifdim_core::rational::Exact;
use fifdim_core::scaling::ScalingFunction;
use fifdim_core::spectral::{self, SampleRule, ScalingMatrix, SpectralOptions};

pyo3::create_exception!(fifdim, FifError, PyValueError);

fn fif_err(e: fifdim_core::FifError) -> PyErr {
    FifError::new_err(e.to_string())
}

/// Reads an int, a float, a `Fraction` or a string such as `"4/9"` exactly.
fn to_exact(obj: &Bound<'_, PyAny>) -> PyResult<BigRational> {
    if let Ok(text) = obj.extract::<String>() {
        return text.parse::<Exact>().map(Exact::into_inner).map_err(fif_err);
    }
    if obj.is_instance_of::<PyInt>() {
        let value: i64 = obj.extract()?;
        return Ok(BigRational::from_integer(BigInt::from(value)));
    }
    if !obj.is_instance_of::<PyFloat>() && obj.hasattr("numerator")? && obj.hasattr("denominator")? {
        let text = obj.str()?.to_string();
        return text.parse::<Exact>().map(Exact::into_inner).map_err(fif_err);
    }
    let value: f64 = obj.extract()?;
    Exact::from_f64(value).map(Exact::into_inner).map_err(fif_err)
}

fn to_exact_vec(items: &[Bound<'_, PyAny>]) -> PyResult<Vec<BigRational>> {
    items.iter().map(to_exact).collect()
}

/// `(upper, lower)` tables, each `N` rows of `N^k` entries.
type TablePair = (Vec<Vec<f64>>, Vec<Vec<f64>>);

fn spectral_options(tol: f64) -> SpectralOptions {
    SpectralOptions {
        tol,
        ..SpectralOptions::default()
    }
}

/// Interpolation data and a piecewise polynomial vertical scaling `S`.
#[pyclass(module = "fifdim", frozen)]
struct Problem {
    inner: InterpolationProblem,
}

#[pymethods]
impl Problem {
    /// `coeffs` holds ascending-power coefficients, one list per piece between `breaks`.
    #[new]
    #[pyo3(signature = (knots, values, breaks, coeffs, lipschitz=None))]
    fn new(
        knots: Vec<Bound<'_, PyAny>>,
        values: Vec<Bound<'_, PyAny>>,
        breaks: Vec<Bound<'_, PyAny>>,
        coeffs: Vec<Vec<Bound<'_, PyAny>>>,
        lipschitz: Option<f64>,
    ) -> PyResult<Self> {
        let coeffs = coeffs
            .iter()
            .map(|piece| to_exact_vec(piece))
            .collect::<PyResult<Vec<_>>>()?;
        let scaling = ScalingFunction::new(to_exact_vec(&breaks)?, coeffs, lipschitz).map_err(fif_err)?;
        let inner =
            InterpolationProblem::new(to_exact_vec(&knots)?, to_exact_vec(&values)?, scaling).map_err(fif_err)?;
        Ok(Problem { inner })
    }

    /// Three-branch quadratic example with data `0, 1, 1, 0`.
    #[staticmethod]
    fn three_branch_example() -> Self {
        Problem {
            inner: InterpolationProblem::three_branch_example(),
        }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn validate(&self) -> PyResult<Validation> {
        fif::validate(&self.inner)
            .map(|inner| Validation { inner })
            .map_err(fif_err)
    }

    fn normalize(&self) -> PyResult<System> {
        fif::normalize(&self.inner)
            .map(|inner| System { inner })
            .map_err(fif_err)
    }

    fn __repr__(&self) -> String {
        format!("Problem(n={})", self.inner.n())
    }
}

#[pyclass(module = "fifdim", frozen)]
struct Validation {
    inner: ValidationReport,
}

#[pymethods]
impl Validation {
    #[getter]
    fn uniform_spacing(&self) -> bool {
        self.inner.uniform_spacing
    }

    #[getter]
    fn lipschitz(&self) -> bool {
        self.inner.lipschitz
    }

    #[getter]
    fn positive(&self) -> bool {
        self.inner.positive
    }

    #[getter]
    fn nonvanishing(&self) -> bool {
        self.inner.nonvanishing
    }

    #[getter]
    fn contractive(&self) -> bool {
        self.inner.contractive
    }

    #[getter]
    fn collinear(&self) -> bool {
        self.inner.collinear
    }

    #[getter]
    fn sup_abs_s(&self) -> f64 {
        self.inner.sup_abs_s
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("report serializes")
    }
}

/// The normalized system `f(x) = S(x) f(Nx - (i - 1)) + h(x)` on `[0, 1]`.
#[pyclass(module = "fifdim", frozen)]
struct System {
    inner: NormalizedSystem,
}

#[pymethods]
impl System {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    #[getter]
    fn sup_f_bound(&self) -> f64 {
        self.inner.sup_f_bound()
    }

    #[getter]
    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz()
    }

    #[getter]
    fn is_positive(&self) -> bool {
        self.inner.is_positive()
    }

    #[getter]
    fn is_collinear(&self) -> bool {
        self.inner.is_collinear()
    }

    /// `(value, error_bound)` of `f(x)`; `x` may be a float, `Fraction` or `"p/q"`.
    #[pyo3(signature = (x, depth=60))]
    fn point(&self, x: &Bound<'_, PyAny>, depth: u32) -> PyResult<(f64, f64)> {
        let x = to_exact(x)?;
        let p = fif::evaluate_point_exact(&self.inner, &x, depth).map_err(fif_err)?;
        Ok((p.value, p.error_bound))
    }

    #[pyo3(signature = (level, tol=fif::DEFAULT_GRID_TOL))]
    fn grid(&self, py: Python<'_>, level: u32, tol: f64) -> PyResult<Grid> {
        let options = GridOptions {
            tol,
            ..GridOptions::default()
        };
        py.detach(|| fif::evaluate_grid(&self.inner, level, options))
            .map(|inner| Grid { inner })
            .map_err(fif_err)
    }

    /// `(upper, lower)` as `N` rows of `N^k` interval extrema of `|S|`.
    fn extrema_table(&self, k: u32) -> PyResult<TablePair> {
        let table = spectral::build_extrema_table(&self.inner, k).map_err(fif_err)?;
        let cols = table.columns();
        let rows = |flat: &[f64]| flat.chunks(cols).map(<[f64]>::to_vec).collect();
        Ok((rows(table.upper()), rows(table.lower())))
    }

    /// Perron root of `M_k` (`"upper"`), `M'_k` (`"lower"`) or a sampled `T_k`
    /// (`"left"`, `"right"`, `"midpoint"`).
    #[pyo3(signature = (k, kind="upper", tol=spectral::DEFAULT_SPECTRAL_TOL))]
    fn spectral_radius(&self, py: Python<'_>, k: u32, kind: &str, tol: f64) -> PyResult<f64> {
        let rule = match kind {
            "upper" | "lower" => None,
            "left" => Some(SampleRule::LeftEndpoint),
            "right" => Some(SampleRule::RightEndpoint),
            "midpoint" => Some(SampleRule::Midpoint),
            other => return Err(PyValueError::new_err(format!("unknown matrix kind {other:?}"))),
        };
        py.detach(|| {
            let matrix = match rule {
                Some(rule) => spectral::build_sampled_matrix(&self.inner, k, rule)?,
                None => {
                    let (upper, lower) = ScalingMatrix::from_table(spectral::build_extrema_table(&self.inner, k)?);
                    if kind == "upper" {
                        upper
                    } else {
                        lower
                    }
                }
            };
            spectral::spectral_radius(&matrix, tol).map(|r| r.radius)
        })
        .map_err(fif_err)
    }

    #[pyo3(signature = (k, tol=spectral::DEFAULT_SPECTRAL_TOL))]
    fn rho_bracket(&self, py: Python<'_>, k: u32, tol: f64) -> PyResult<RhoBracket> {
        py.detach(|| spectral::rho_bracket(&self.inner, k, spectral_options(tol)))
            .map(|inner| RhoBracket { inner })
            .map_err(fif_err)
    }

    #[pyo3(signature = (k_max, tol=spectral::DEFAULT_SPECTRAL_TOL))]
    fn rho_history(&self, py: Python<'_>, k_max: u32, tol: f64) -> PyResult<Vec<RhoBracket>> {
        py.detach(|| spectral::rho_history(&self.inner, k_max, spectral_options(tol)))
            .map(|h| h.into_iter().map(|inner| RhoBracket { inner }).collect())
            .map_err(fif_err)
    }

    /// `(rho_S, half_width, level)` once the bracket is narrower than `target_width`.
    #[pyo3(signature = (target_width=1e-4, k_max=8))]
    fn estimate_rho(&self, py: Python<'_>, target_width: f64, k_max: u32) -> PyResult<(f64, f64, u32)> {
        py.detach(|| spectral::estimate_rho_s(&self.inner, target_width, k_max, SpectralOptions::default()))
            .map(|e| (e.estimate, e.half_width, e.level))
            .map_err(fif_err)
    }

    #[pyo3(signature = (k=1))]
    fn sum_function(&self, k: u32) -> PyResult<SumFunction> {
        spectral::sum_function_report(&self.inner, k)
            .map(|inner| SumFunction { inner })
            .map_err(fif_err)
    }

    #[pyo3(signature = (k_max=dimension::DEFAULT_K_MAX, grid_level=dimension::DEFAULT_GRID_LEVEL, slope_window=None))]
    fn dimension(
        &self,
        py: Python<'_>,
        k_max: u32,
        grid_level: u32,
        slope_window: Option<(u32, u32)>,
    ) -> PyResult<DimensionReport> {
        let options = DimensionOptions {
            k_max,
            grid_level,
            slope_window,
            ..DimensionOptions::default()
        };
        py.detach(|| dimension::dimension_verdict(&self.inner, &options))
            .map(|inner| DimensionReport { inner })
            .map_err(fif_err)
    }
}

/// Values of `f` on `j / N^level`.
#[pyclass(module = "fifdim", frozen)]
struct Grid {
    inner: fif::FifGrid,
}

#[pymethods]
impl Grid {
    #[getter]
    fn level(&self) -> u32 {
        self.inner.level()
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        (0..=self.inner.cells()).map(|j| self.inner.x(j)).collect()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn error_bound(&self) -> f64 {
        self.inner.error_bound()
    }

    fn box_count(&self, k: u32) -> PyResult<(u64, u64, u64)> {
        dimension::box_count(&self.inner, k)
            .map(|b| (b.count, b.lower, b.upper))
            .map_err(fif_err)
    }

    /// `(O_k, certified lower, certified upper)`.
    fn oscillation(&self, k: u32) -> PyResult<(f64, f64, f64)> {
        dimension::oscillation_profile(&self.inner, k)
            .map(|p| (p.total, p.total_lower, p.total_upper))
            .map_err(fif_err)
    }
}

#[pyclass(module = "fifdim", frozen)]
struct RhoBracket {
    inner: spectral::RhoBracket,
}

#[pymethods]
impl RhoBracket {
    #[getter]
    fn level(&self) -> u32 {
        self.inner.level
    }

    #[getter]
    fn lower(&self) -> Option<f64> {
        self.inner.lower
    }

    #[getter]
    fn upper(&self) -> f64 {
        self.inner.upper
    }

    #[getter]
    fn width(&self) -> Option<f64> {
        self.inner.width
    }

    #[getter]
    fn width_bound(&self) -> Option<f64> {
        self.inner.width_bound
    }

    fn __repr__(&self) -> String {
        let lower = self.inner.lower.map_or("None".to_string(), |v| v.to_string());
        format!(
            "RhoBracket(level={}, lower={lower}, upper={})",
            self.inner.level, self.inner.upper
        )
    }
}

/// `gamma(x) = sum_i |S(L_i x)|` and its extrema.
#[pyclass(module = "fifdim", frozen)]
struct SumFunction {
    inner: spectral::SumFunctionReport,
}

#[pymethods]
impl SumFunction {
    #[getter]
    fn gamma_star_lower(&self) -> f64 {
        self.inner.gamma_star_lower
    }

    #[getter]
    fn gamma_star_upper(&self) -> f64 {
        self.inner.gamma_star_upper
    }

    #[getter]
    fn lambda_prime(&self) -> f64 {
        self.inner.lambda_prime
    }

    #[getter]
    fn is_constant(&self) -> bool {
        self.inner.is_constant
    }

    /// Exact `(gamma_*, gamma^*, lambda')` as `"p/q"` strings when known.
    fn exact(&self) -> (Option<String>, Option<String>, Option<String>) {
        let text = |e: &Option<Exact>| e.as_ref().map(|e| e.0.to_string());
        (
            text(&self.inner.gamma_star_lower_exact),
            text(&self.inner.gamma_star_upper_exact),
            text(&self.inner.lambda_prime_exact),
        )
    }
}

#[pyclass(module = "fifdim", frozen)]
struct DimensionReport {
    inner: dimension::DimensionReport,
}

#[pymethods]
impl DimensionReport {
    /// `"formula"`, `"trivial"` or `"inconclusive"`.
    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.verdict {
            Verdict::Formula { .. } => "formula",
            Verdict::Trivial { .. } => "trivial",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }

    #[getter]
    fn dimension(&self) -> Option<f64> {
        self.inner.verdict.dimension()
    }

    /// Dimension range implied by the final bracket, for the formula verdict.
    #[getter]
    fn dimension_bounds(&self) -> Option<(f64, f64)> {
        match self.inner.verdict {
            Verdict::Formula {
                dimension_lower,
                dimension_upper,
                ..
            } => Some((dimension_lower, dimension_upper)),
            _ => None,
        }
    }

    #[getter]
    fn reason(&self) -> Option<String> {
        match &self.inner.verdict {
            Verdict::Inconclusive { reason } => Some(reason.clone()),
            _ => None,
        }
    }

    #[getter]
    fn branch(&self) -> String {
        serde_json::to_value(self.inner.branch)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default()
    }

    #[getter]
    fn empirical_slope(&self) -> Option<f64> {
        self.inner.empirical.as_ref().map(|f| f.slope)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("report serializes")
    }

    fn __repr__(&self) -> String {
        let dimension = self.dimension().map_or("None".to_string(), |v| v.to_string());
        format!("DimensionReport(kind='{}', dimension={dimension})", self.kind())
    }
}

#[pymodule]
fn fifdim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FifError", m.py().get_type::<FifError>())?;
    m.add_class::<Problem>()?;
    m.add_class::<Validation>()?;
    m.add_class::<System>()?;
    m.add_class::<Grid>()?;
    m.add_class::<RhoBracket>()?;
    m.add_class::<SumFunction>()?;
    m.add_class::<DimensionReport>()?;
    Ok(())
}
