//! Acceptance criteria, one line each. Run with `cargo test --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;

use common::{example, q, random_system, rng};
use fifdim_core::dimension::{dimension_verdict_with_grid, DimensionOptions, Verdict};
use fifdim_core::fif::{
    evaluate_grid, evaluate_point, evaluate_point_exact, normalize, GridOptions, InterpolationProblem, NormalizedSystem,
};
use fifdim_core::rational::ratio_to_f64;
use fifdim_core::scaling::ScalingFunction;
use fifdim_core::spectral::{
    build_extrema_table, build_sampled_matrix, rho_bracket, rho_history, spectral_radius, sum_function_report,
    SampleRule, ScalingMatrix, SpectralOptions, DEFAULT_SPECTRAL_TOL,
};

const TABLE_TOL: f64 = 5e-5;
const TABLE_SECONDS: f64 = 1.0;
const DIM_RANGE: (f64, f64) = (1.4530, 1.4545);
const DENSE_TOL: f64 = 1e-9;
const MONOTONE_TOL: f64 = 1e-8;
const ORDER_TOL: f64 = 1e-9;
const GAP_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-9;
const VALUE_TOL: f64 = 1e-9;
const FORMULA_TOL: f64 = 1e-12;
const AFFINE_SLOPE_TOL: f64 = 0.05;
const COLLINEAR_SLOPE_TOL: f64 = 0.02;
const EXAMPLE_SLOPE_TOL: f64 = 0.08;
const GRID_LEVEL: u32 = 15;
const WINDOW: (u32, u32) = (4, 9);

const TABLE_UPPER: [f64; 8] = [1.7622, 1.6852, 1.6599, 1.6515, 1.6488, 1.6478, 1.6475, 1.6474];
const TABLE_LOWER: [f64; 8] = [1.5380, 1.6102, 1.6349, 1.6432, 1.6460, 1.6469, 1.6472, 1.6473];

type Outcome = Result<String, String>;

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn options() -> DimensionOptions {
    DimensionOptions {
        k_max: 8,
        grid_level: GRID_LEVEL,
        slope_window: Some(WINDOW),
        ..DimensionOptions::default()
    }
}

fn table_reproduction(system: &NormalizedSystem) -> Outcome {
    let start = Instant::now();
    let history = rho_history(system, 8, SpectralOptions::default()).map_err(err)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut worst: f64 = 0.0;
    for (b, (u, l)) in history.iter().zip(TABLE_UPPER.iter().zip(TABLE_LOWER)) {
        worst = worst.max((b.upper - u).abs()).max((b.lower.unwrap() - l).abs());
    }
    let detail = format!("max |diff| = {worst:.2e} (tol {TABLE_TOL:e}), {seconds:.3} s");
    if worst <= TABLE_TOL && seconds < TABLE_SECONDS {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exact_matrices(system: &NormalizedSystem) -> Outcome {
    let upper = [
        [q(4, 9), q(4, 9), q(4, 9)],
        [q(43, 81), q(52, 81), q(7, 9)],
        [q(7, 9), q(2, 3), q(5, 9)],
    ];
    let lower = [
        [q(4, 9), q(4, 9), q(4, 9)],
        [q(4, 9), q(43, 81), q(52, 81)],
        [q(2, 3), q(5, 9), q(4, 9)],
    ];
    let table = build_extrema_table(system, 1).map_err(err)?;
    for i in 0..3 {
        for j in 0..3 {
            let (u, l) = (ratio_to_f64(&upper[i][j]), ratio_to_f64(&lower[i][j]));
            if table.upper_at(i, j) != u || table.lower_at(i, j) != l {
                return Err(format!("entry ({i}, {j}) differs"));
            }
        }
    }
    Ok("18 entries bit-exact".into())
}

fn dimension_verdict(system: &NormalizedSystem, report: &fifdim_core::dimension::DimensionReport) -> Outcome {
    let gamma = sum_function_report(system, 1).map_err(err)?;
    let exact_ok = gamma.gamma_star_lower_exact.as_ref().map(|e| e.0.clone()) == Some(q(59, 36))
        && gamma.lambda_prime_exact.as_ref().map(|e| e.0.clone()) == Some(q(1, 9))
        && system.sup_f_bound() == 4.5;
    let sc = report
        .diagnostics
        .sufficient_condition
        .as_ref()
        .ok_or("no sufficient condition")?;
    let threshold_ok = sc.threshold_exact.as_ref().map(|e| e.0.clone()) == Some(q(18, 23)) && sc.passed;
    let Verdict::Formula { dimension, .. } = report.verdict else {
        return Err(format!("verdict {:?}", report.verdict));
    };
    let detail = format!("dim = {dimension:.6}, threshold 18/23 passed = {}", sc.passed);
    if exact_ok && threshold_ok && (DIM_RANGE.0..=DIM_RANGE.1).contains(&dimension) {
        Ok(detail)
    } else {
        Err(format!("{detail}, exact constants = {exact_ok}"))
    }
}

fn dense_root(m: &ScalingMatrix) -> f64 {
    let dim = m.dim();
    let dense = DMatrix::from_row_slice(dim, dim, &m.to_dense());
    dense.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn oracle_equivalence() -> Outcome {
    let mut r = rng(4);
    let mut systems = vec![example()];
    systems.extend((0..20).map(|_| random_system(&mut r, 3)));
    let mut worst: f64 = 0.0;
    for system in &systems {
        for k in 1..=3 {
            let (upper, lower) = ScalingMatrix::from_table(build_extrema_table(system, k).map_err(err)?);
            for m in [&upper, &lower] {
                let radius = spectral_radius(m, DEFAULT_SPECTRAL_TOL).map_err(err)?.radius;
                worst = worst.max((radius - dense_root(m)).abs());
            }
        }
    }
    let detail = format!("21 systems, k <= 3, max |diff| = {worst:.2e}");
    if worst <= DENSE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bracket_suite() -> Outcome {
    let mut r = rng(5);
    for case in 0..50 {
        let n = [2, 3, 4][case % 3];
        let system = random_system(&mut r, n);
        let nf = n as f64;
        let (lambda, c) = (
            system.lipschitz(),
            system.positivity_constant().ok_or("S not positive")?,
        );
        let history = rho_history(&system, 5, SpectralOptions::default()).map_err(err)?;
        for pair in history.windows(2) {
            if pair[1].upper > pair[0].upper + MONOTONE_TOL
                || pair[0].lower.unwrap() > pair[1].lower.unwrap() + MONOTONE_TOL
            {
                return Err(format!("case {case}: monotonicity at k = {}", pair[1].level));
            }
        }
        for b in &history {
            let k = b.level;
            let lower = b.lower.unwrap();
            let step = lambda * nf.powi(-(k as i32) - 1);
            if b.upper > (1.0 + c * step) * lower + ORDER_TOL {
                return Err(format!("case {case}: certificate at k = {k}"));
            }
            let table = build_extrema_table(&system, k).map_err(err)?;
            if table
                .upper()
                .iter()
                .zip(table.lower())
                .any(|(u, l)| u - l > step + GAP_TOL)
            {
                return Err(format!("case {case}: entry gap at k = {k}"));
            }
            for rule in [
                SampleRule::LeftEndpoint,
                SampleRule::RightEndpoint,
                SampleRule::Midpoint,
            ] {
                let t = build_sampled_matrix(&system, k, rule).map_err(err)?;
                let rho_t = spectral_radius(&t, DEFAULT_SPECTRAL_TOL).map_err(err)?.radius;
                if rho_t < lower - ORDER_TOL || rho_t > b.upper + ORDER_TOL {
                    return Err(format!("case {case}: T_k order ({rule:?}) at k = {k}"));
                }
            }
        }
    }
    Ok("50 systems, k = 1..5".into())
}

fn functional_equation(system: &NormalizedSystem) -> Outcome {
    let grid = evaluate_grid(
        system,
        10,
        GridOptions {
            tol: 1e-12,
            ..GridOptions::default()
        },
    )
    .map_err(err)?;
    let residual = grid.functional_equation_residual(system);
    let cells = grid.cells();
    let knots = [0, cells / 3, 2 * cells / 3, cells].map(|j| grid.values()[j]);
    let knot_err = knots
        .iter()
        .zip([0.0, 1.0, 1.0, 0.0])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let half = evaluate_point(system, 0.5, 200).map_err(err)?.value;
    let sixth = evaluate_point_exact(system, &q(1, 6), 200).map_err(err)?.value;
    let point_err = (half - 2.4).abs().max((sixth - 47.0 / 30.0).abs());
    let detail = format!("residual {residual:.1e}, knots {knot_err:.1e}, f(1/2), f(1/6) {point_err:.1e}");
    if residual <= RESIDUAL_TOL && knot_err <= VALUE_TOL && point_err <= VALUE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn slope_of(report: &fifdim_core::dimension::DimensionReport) -> Result<f64, String> {
    report
        .empirical
        .as_ref()
        .map(|f| f.slope)
        .ok_or_else(|| format!("no slope: {:?}", report.empirical_error))
}

fn constant_s_consistency() -> Outcome {
    let knots: Vec<_> = (0..=3).map(|i| q(i, 3)).collect();
    let scaling = ScalingFunction::constant(q(1, 2), q(0, 1), q(1, 1)).map_err(err)?;
    let affine = normalize(
        &InterpolationProblem::new(knots.clone(), vec![q(0, 1), q(1, 1), q(1, 1), q(0, 1)], scaling).map_err(err)?,
    )
    .map_err(err)?;
    let b = rho_bracket(&affine, 1, SpectralOptions::default()).map_err(err)?;
    let exact_rho = b.upper == 1.5 && b.lower == Some(1.5);
    let grid = evaluate_grid(&affine, GRID_LEVEL, GridOptions::default()).map_err(err)?;
    let report = dimension_verdict_with_grid(&affine, &grid, &options()).map_err(err)?;
    let expected = 1.0 + 1.5f64.ln() / 3f64.ln();
    let dim_ok =
        matches!(report.verdict, Verdict::Formula { dimension, .. } if (dimension - expected).abs() <= FORMULA_TOL);
    let slope = slope_of(&report)?;

    let collinear = normalize(
        &InterpolationProblem::new(
            knots.clone(),
            knots.clone(),
            InterpolationProblem::three_branch_example().scaling().clone(),
        )
        .map_err(err)?,
    )
    .map_err(err)?;
    let grid = evaluate_grid(&collinear, GRID_LEVEL, GridOptions::default()).map_err(err)?;
    let flat = dimension_verdict_with_grid(&collinear, &grid, &options()).map_err(err)?;
    let trivial = matches!(flat.verdict, Verdict::Trivial { dimension } if dimension == 1.0);
    let flat_slope = slope_of(&flat)?;

    let detail = format!(
        "rho_1 = [{}, {}], affine slope {slope:.4} vs {expected:.4}, collinear slope {flat_slope:.4}",
        b.lower.map_or("none".to_string(), |v| v.to_string()),
        b.upper
    );
    if exact_rho
        && dim_ok
        && (slope - expected).abs() <= AFFINE_SLOPE_TOL
        && trivial
        && (flat_slope - 1.0).abs() <= COLLINEAR_SLOPE_TOL
    {
        Ok(detail)
    } else {
        Err(format!("{detail}, formula = {dim_ok}, trivial = {trivial}"))
    }
}

fn empirical_cross_check(report: &fifdim_core::dimension::DimensionReport) -> Outcome {
    let slope = slope_of(report)?;
    let detail = format!("slope k = {}..{}: {slope:.4} vs 1.454", WINDOW.0, WINDOW.1);
    if (slope - 1.454).abs() <= EXAMPLE_SLOPE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let system = example();
    let report = evaluate_grid(&system, GRID_LEVEL, GridOptions::default())
        .and_then(|grid| dimension_verdict_with_grid(&system, &grid, &options()));

    let results: Vec<(&str, bool, Outcome)> = vec![
        ("1 rho table k = 1..8", true, table_reproduction(&system)),
        ("2 exact level-1 matrices", true, exact_matrices(&system)),
        (
            "3 dimension verdict",
            true,
            report.as_ref().map_err(err).and_then(|r| dimension_verdict(&system, r)),
        ),
        ("4 dense eigensolver oracle", true, oracle_equivalence()),
        ("5 monotonicity and bracket suite", true, bracket_suite()),
        (
            "6 functional equation and point values",
            true,
            functional_equation(&system),
        ),
        ("7 constant S and collinear data", true, constant_s_consistency()),
        (
            "8 empirical cross-check (soft)",
            false,
            report.as_ref().map_err(err).and_then(empirical_cross_check),
        ),
    ];

    let mut failed = false;
    for (name, gating, outcome) in &results {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} {name}: {detail}");
        failed |= *gating && outcome.is_err();
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
