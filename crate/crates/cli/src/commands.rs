use std::fmt::Write as _;

use serde::Serialize;

use fifdim_core::dimension::{
    box_count, dimension_verdict_with_grid, empirical_dimension, oscillation_profile, BoxCount, DimensionReport,
    EmpiricalFit, Verdict,
};
use fifdim_core::fif::{
    evaluate_grid, normalize, validate, FifGrid, GridOptions, InterpolationProblem, NormalizedSystem, ValidationReport,
};
use fifdim_core::spectral::{build_extrema_table, is_monotone, rho_history, RhoBracket, ScalingMatrix, MONOTONE_SLACK};
use fifdim_core::FifError;

use crate::config::RunConfig;
use crate::output::{fmt_f64, fmt_opt, Artifacts};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Sample,
    Matrices,
    Rho,
    Dim,
    Boxcount,
    Report,
}

/// Files written and the text printed on success.
#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<std::path::PathBuf>,
}

pub fn run(config: &RunConfig, command: Command, strict: bool) -> Result<Outcome, CliError> {
    let mut out = Artifacts::new(&config.output.dir)?;
    let problem = config.problem()?;
    let summary = match command {
        Command::Validate => {
            let report = validate(&problem)?;
            write_validation(config, &mut out, &report)?;
            validation_summary(&report)
        }
        Command::Sample => {
            let system = normalize(&problem)?;
            let sample = sample_grid(config, &system)?;
            write_sample(config, &mut out, &sample)?;
            format!(
                "sampled {} points at level {}, error bound {:.3e}\n",
                sample.x.len(),
                sample.level,
                sample.error_bound
            )
        }
        Command::Matrices => {
            let system = normalize(&problem)?;
            matrices(config, &mut out, &system)?
        }
        Command::Rho => {
            let system = normalize(&problem)?;
            let rho = rho_output(config, &system)?;
            write_rho(config, &mut out, &rho)?;
            let text = rho_summary(&rho);
            rho.require_converged()?;
            text
        }
        Command::Dim => {
            let system = normalize(&problem)?;
            let grid = evaluate_grid(&system, config.levels.grid_level, grid_options(config))?;
            let report = dimension_verdict_with_grid(&system, &grid, &config.dimension_options())?;
            if config.output.format.json() {
                out.json("dimension.json", &report)?;
            }
            let table = boxcount_table(&report.diagnostics.box_counts, &report);
            if config.output.format.csv() {
                write_boxcount_csv(&mut out, "dimension.csv", &table)?;
            }
            let text = verdict_summary(&report);
            check_strict(&report, strict)?;
            text
        }
        Command::Boxcount => {
            let system = normalize(&problem)?;
            let grid = evaluate_grid(&system, config.levels.grid_level, grid_options(config))?;
            let result = boxcount_output(config, &grid)?;
            if config.output.format.json() {
                out.json("boxcount.json", &result)?;
            }
            if config.output.format.csv() {
                write_boxcount_csv(&mut out, "boxcount.csv", &result.rows)?;
            }
            match &result.fit {
                Some(fit) => format!(
                    "empirical slope over k = {}..{}: {:.4}\n",
                    fit.window.0, fit.window.1, fit.slope
                ),
                None => format!(
                    "empirical slope unavailable: {}\n",
                    result.fit_error.clone().unwrap_or_default()
                ),
            }
        }
        Command::Report => report(config, &mut out, &problem, strict)?,
    };
    Ok(Outcome {
        summary,
        files: out.written().to_vec(),
    })
}

fn grid_options(config: &RunConfig) -> GridOptions {
    GridOptions {
        tol: config.tolerances.grid,
        ..GridOptions::default()
    }
}

fn check_strict(report: &DimensionReport, strict: bool) -> Result<(), CliError> {
    match &report.verdict {
        Verdict::Inconclusive { reason } if strict => Err(CliError::Inconclusive(reason.clone())),
        _ => Ok(()),
    }
}

fn validation_rows(report: &ValidationReport) -> Vec<Vec<String>> {
    let value = serde_json::to_value(report).expect("report serializes");
    let map = value.as_object().expect("report is an object");
    map.iter()
        .map(|(key, v)| {
            let text = match v {
                serde_json::Value::Number(num) if num.is_u64() => num.to_string(),
                serde_json::Value::Number(num) => fmt_f64(num.as_f64().unwrap_or(f64::NAN)),
                other => other.to_string(),
            };
            vec![key.clone(), text]
        })
        .collect()
}

fn write_validation(config: &RunConfig, out: &mut Artifacts, report: &ValidationReport) -> Result<(), CliError> {
    if config.output.format.json() {
        out.json("validation.json", report)?;
    }
    if config.output.format.csv() {
        out.csv("validation.csv", &["field", "value"], &validation_rows(report))?;
    }
    Ok(())
}

fn validation_summary(r: &ValidationReport) -> String {
    let flag = |b: bool| if b { "yes" } else { "no" };
    let mut s = String::new();
    let _ = writeln!(s, "N = {}", r.n);
    let _ = writeln!(s, "uniform knots: {}", flag(r.uniform_spacing));
    let _ = writeln!(
        s,
        "Lipschitz S: {} (lambda_S = {:.4})",
        flag(r.lipschitz),
        r.lipschitz_constant
    );
    let _ = writeln!(s, "S > 0: {}", flag(r.positive));
    let _ = writeln!(s, "S nonvanishing on subintervals: {}", flag(r.nonvanishing));
    let _ = writeln!(s, "sup |S| = {:.4} < 1: {}", r.sup_abs_s, flag(r.contractive));
    let _ = writeln!(s, "collinear data: {}", flag(r.collinear));
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Sample {
    level: u32,
    error_bound: f64,
    x: Vec<f64>,
    f: Vec<f64>,
}

fn sample_grid(config: &RunConfig, system: &NormalizedSystem) -> Result<Sample, CliError> {
    let grid = evaluate_grid(system, config.levels.sample_level, grid_options(config))?;
    Ok(Sample {
        level: grid.level(),
        error_bound: grid.error_bound(),
        x: (0..=grid.cells()).map(|j| grid.x(j)).collect(),
        f: grid.values().to_vec(),
    })
}

fn write_sample(config: &RunConfig, out: &mut Artifacts, sample: &Sample) -> Result<(), CliError> {
    if config.output.format.json() {
        out.json("sample.json", sample)?;
    }
    if config.output.format.csv() {
        write_sample_csv(out, sample)?;
    }
    Ok(())
}

fn write_sample_csv(out: &mut Artifacts, sample: &Sample) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = sample
        .x
        .iter()
        .zip(&sample.f)
        .map(|(x, f)| vec![fmt_f64(*x), fmt_f64(*f), fmt_f64(sample.error_bound)])
        .collect();
    out.csv("sample.csv", &["x", "f", "error_bound"], &rows)
}

fn rho_rows(history: &[RhoBracket]) -> Vec<Vec<String>> {
    history
        .iter()
        .map(|b| {
            vec![
                b.level.to_string(),
                fmt_f64(b.upper),
                fmt_opt(b.lower),
                fmt_opt(b.width),
                fmt_opt(b.width_bound),
            ]
        })
        .collect()
}

const RHO_HEADER: [&str; 5] = ["k", "rho_upper", "rho_lower", "width", "width_bound"];

#[derive(Debug, Clone, PartialEq, Serialize)]
struct LevelTable {
    level: u32,
    certified_gap: f64,
    gamma_upper: f64,
    gamma_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct MatricesOutput {
    tables: Vec<LevelTable>,
    rho_history: Vec<RhoBracket>,
}

fn matrices(config: &RunConfig, out: &mut Artifacts, system: &NormalizedSystem) -> Result<String, CliError> {
    let mut tables = Vec::new();
    for k in 1..=config.levels.k_max {
        let table = build_extrema_table(system, k)?;
        tables.push(LevelTable {
            level: k,
            certified_gap: table.certified_gap(),
            gamma_upper: table.gamma_upper(),
            gamma_lower: table.gamma_lower(),
        });
        if !config.output.format.csv() {
            continue;
        }
        let cols = table.columns();
        let rows: Vec<Vec<String>> = (0..system.n())
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| {
                vec![
                    i.to_string(),
                    j.to_string(),
                    fmt_f64(table.lower_at(i, j)),
                    fmt_f64(table.upper_at(i, j)),
                ]
            })
            .collect();
        out.csv(&format!("extrema_k{k}.csv"), &["i", "j", "lower", "upper"], &rows)?;
        if k <= 3 {
            let (upper, lower) = ScalingMatrix::from_table(table);
            for (name, m) in [("upper", upper), ("lower", lower)] {
                let dim = m.dim();
                let dense = m.to_dense();
                let header: Vec<String> = (0..dim).map(|c| format!("c{c}")).collect();
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                let rows: Vec<Vec<String>> = dense
                    .chunks(dim)
                    .map(|row| row.iter().map(|v| fmt_f64(*v)).collect())
                    .collect();
                out.csv(&format!("dense_{name}_k{k}.csv"), &header, &rows)?;
            }
        }
    }
    let history = rho_history(system, config.levels.k_max, config.spectral_options())?;
    if config.output.format.csv() {
        out.csv("rho_history.csv", &RHO_HEADER, &rho_rows(&history))?;
    }
    let result = MatricesOutput {
        tables,
        rho_history: history,
    };
    if config.output.format.json() {
        out.json("matrices.json", &result)?;
    }
    Ok(rho_table(&result.rho_history))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct RhoOutput {
    target_width: f64,
    history: Vec<RhoBracket>,
    monotone: bool,
    /// First level whose bracket meets the target width.
    converged_level: Option<u32>,
    rho_s: Option<f64>,
    half_width: Option<f64>,
    achieved_width: Option<f64>,
}

impl RhoOutput {
    fn require_converged(&self) -> Result<(), CliError> {
        match (self.converged_level, self.achieved_width) {
            (None, Some(width)) => Err(FifError::ResourceLimit {
                what: format!(
                    "bracket width {width:e} above target {:e} after {} levels",
                    self.target_width,
                    self.history.len()
                ),
                achieved_width: Some(width),
            }
            .into()),
            _ => Ok(()),
        }
    }
}

fn rho_output(config: &RunConfig, system: &NormalizedSystem) -> Result<RhoOutput, CliError> {
    let target = config.tolerances.bracket_width;
    let mut history = rho_history(system, config.levels.k_max, config.spectral_options())?;
    let converged = history.iter().position(|b| b.width.is_some_and(|w| w <= target));
    if let Some(idx) = converged {
        history.truncate(idx + 1);
    }
    let last = history.last().expect("k_max >= 1");
    Ok(RhoOutput {
        target_width: target,
        monotone: is_monotone(&history, MONOTONE_SLACK),
        converged_level: converged.map(|_| last.level),
        rho_s: converged.and(last.midpoint()),
        half_width: converged.and(last.width).map(|w| 0.5 * w),
        achieved_width: last.width,
        history,
    })
}

fn write_rho(config: &RunConfig, out: &mut Artifacts, rho: &RhoOutput) -> Result<(), CliError> {
    if config.output.format.json() {
        out.json("rho.json", rho)?;
    }
    if config.output.format.csv() {
        out.csv("rho_history.csv", &RHO_HEADER, &rho_rows(&rho.history))?;
    }
    Ok(())
}

fn rho_table(history: &[RhoBracket]) -> String {
    let mut s = String::from(" k  rho(M_k)  rho(M'_k)\n");
    for b in history {
        let lower = b.lower.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "{:>2}  {:.4}    {}", b.level, b.upper, lower);
    }
    s
}

fn rho_summary(rho: &RhoOutput) -> String {
    let mut s = rho_table(&rho.history);
    match (rho.rho_s, rho.half_width) {
        (Some(r), Some(h)) => {
            let _ = writeln!(
                s,
                "rho_S = {r:.4} +- {h:.1e} (k = {})",
                rho.converged_level.unwrap_or(0)
            );
        }
        _ => {
            let _ = writeln!(s, "target width {:e} not reached", rho.target_width);
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct BoxRow {
    #[serde(rename = "k")]
    level: u32,
    epsilon: f64,
    count: u64,
    count_lower: u64,
    count_upper: u64,
    oscillation: Option<f64>,
    oscillation_lower: Option<f64>,
    oscillation_upper: Option<f64>,
    step_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct BoxcountOutput {
    rows: Vec<BoxRow>,
    fit: Option<EmpiricalFit>,
    fit_error: Option<String>,
}

fn box_rows(
    counts: &[BoxCount],
    oscillation: impl Fn(u32) -> Option<(f64, f64, f64)>,
    fit: Option<&EmpiricalFit>,
) -> Vec<BoxRow> {
    counts
        .iter()
        .map(|c| {
            let osc = oscillation(c.level);
            let step_slope = fit.and_then(|f| f.step_slopes.iter().find(|(k, _)| *k == c.level).map(|(_, s)| *s));
            BoxRow {
                level: c.level,
                epsilon: c.epsilon,
                count: c.count,
                count_lower: c.lower,
                count_upper: c.upper,
                oscillation: osc.map(|o| o.0),
                oscillation_lower: osc.map(|o| o.1),
                oscillation_upper: osc.map(|o| o.2),
                step_slope,
            }
        })
        .collect()
}

fn boxcount_table(counts: &[BoxCount], report: &DimensionReport) -> Vec<BoxRow> {
    let osc = |k: u32| {
        report
            .diagnostics
            .oscillation
            .iter()
            .find(|o| o.level == k)
            .map(|o| (o.total, o.lower, o.upper))
    };
    box_rows(counts, osc, report.empirical.as_ref())
}

fn boxcount_output(config: &RunConfig, grid: &FifGrid) -> Result<BoxcountOutput, CliError> {
    let options = config.dimension_options();
    let top = options.oscillation_levels().min(grid.level() - 1);
    let counts = (1..=top).map(|k| box_count(grid, k)).collect::<Result<Vec<_>, _>>()?;
    let profiles = (1..=top)
        .map(|k| oscillation_profile(grid, k))
        .collect::<Result<Vec<_>, _>>()?;
    let (fit, fit_error) = match empirical_dimension(&counts, grid.n(), options.window()) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let osc = |k: u32| {
        let p = &profiles[(k - 1) as usize];
        Some((p.total, p.total_lower, p.total_upper))
    };
    Ok(BoxcountOutput {
        rows: box_rows(&counts, osc, fit.as_ref()),
        fit,
        fit_error,
    })
}

const BOX_HEADER: [&str; 9] = [
    "k",
    "epsilon",
    "count",
    "count_lower",
    "count_upper",
    "oscillation",
    "oscillation_lower",
    "oscillation_upper",
    "step_slope",
];

fn write_boxcount_csv(out: &mut Artifacts, name: &str, rows: &[BoxRow]) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.level.to_string(),
                fmt_f64(r.epsilon),
                r.count.to_string(),
                r.count_lower.to_string(),
                r.count_upper.to_string(),
                fmt_opt(r.oscillation),
                fmt_opt(r.oscillation_lower),
                fmt_opt(r.oscillation_upper),
                fmt_opt(r.step_slope),
            ]
        })
        .collect();
    out.csv(name, &BOX_HEADER, &rows)
}

fn verdict_summary(report: &DimensionReport) -> String {
    let mut s = String::new();
    match &report.verdict {
        Verdict::Formula {
            dimension,
            rho_s,
            rho_half_width,
            ..
        } => {
            let _ = writeln!(
                s,
                "verdict: formula, dim = {dimension:.4} (rho_S = {rho_s:.4} +- {rho_half_width:.1e})"
            );
        }
        Verdict::Trivial { dimension } => {
            let _ = writeln!(s, "verdict: trivial, dim = {dimension:.4}");
        }
        Verdict::Inconclusive { reason } => {
            let _ = writeln!(s, "verdict: inconclusive ({reason})");
        }
    }
    let branch = serde_json::to_value(report.branch).expect("branch serializes");
    let _ = writeln!(s, "branch: {}", branch.as_str().unwrap_or("?"));
    if let Some(sc) = &report.diagnostics.sufficient_condition {
        if sc.applicable {
            let _ = writeln!(
                s,
                "sufficient condition: threshold {:.4}, passed: {}",
                sc.threshold,
                if sc.passed { "yes" } else { "no" }
            );
        }
    }
    match &report.empirical {
        Some(fit) => {
            let _ = writeln!(
                s,
                "empirical slope (k = {}..{}): {:.4}",
                fit.window.0, fit.window.1, fit.slope
            );
        }
        None => {
            let _ = writeln!(s, "empirical slope unavailable");
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct FullReport {
    validation: ValidationReport,
    rho: RhoOutput,
    dimension: DimensionReport,
    boxcount: Vec<BoxRow>,
    sample: Sample,
}

fn report(
    config: &RunConfig,
    out: &mut Artifacts,
    problem: &InterpolationProblem,
    strict: bool,
) -> Result<String, CliError> {
    let validation = validate(problem)?;
    let system = normalize(problem)?;
    let rho = rho_output(config, &system)?;
    let grid = evaluate_grid(&system, config.levels.grid_level, grid_options(config))?;
    let dimension = dimension_verdict_with_grid(&system, &grid, &config.dimension_options())?;
    let boxcount = boxcount_table(&dimension.diagnostics.box_counts, &dimension);
    let sample = sample_grid(config, &system)?;

    if config.output.format.csv() {
        out.csv("validation.csv", &["field", "value"], &validation_rows(&validation))?;
        out.csv("rho_history.csv", &RHO_HEADER, &rho_rows(&rho.history))?;
        write_boxcount_csv(out, "boxcount.csv", &boxcount)?;
    }
    let mut text = validation_summary(&validation);
    text.push_str(&rho_summary(&rho));
    text.push_str(&verdict_summary(&dimension));
    let full = FullReport {
        validation,
        rho,
        dimension,
        boxcount,
        sample,
    };
    if config.output.format.csv() {
        write_sample_csv(out, &full.sample)?;
    }
    if config.output.format.json() {
        out.json("report.json", &full)?;
    }
    out.text("summary.txt", &text)?;
    check_strict(&full.dimension, strict)?;
    Ok(text)
}
