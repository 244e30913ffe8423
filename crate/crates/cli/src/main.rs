use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fifdim_cli::{run, CliError, Command, Format, RunConfig};

#[derive(Parser)]
#[command(
    name = "fifdim",
    version,
    about = "Box dimension of fractal interpolation functions with variable scaling"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Report which structural conditions the problem satisfies.
    Validate(Common),
    /// Evaluate f on an N-adic grid (plot data).
    Sample(Common),
    /// Write extrema tables, small dense matrices and the spectral radii.
    Matrices(Common),
    /// Bracket history and the estimate of rho_S.
    Rho(Common),
    /// Full dimension report.
    Dim(Common),
    /// Empirical box counts and slope.
    Boxcount(Common),
    /// Everything, plus a readable summary.
    Report(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    k_max: Option<u32>,
    #[arg(long)]
    grid_level: Option<u32>,
    /// Level of the `sample` grid.
    #[arg(long)]
    sample_level: Option<u32>,
    #[arg(long)]
    tol_spectral: Option<f64>,
    #[arg(long)]
    bracket_width: Option<f64>,
    /// Exit with a nonzero status on an inconclusive verdict.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::load(&self.config)?;
        if let Some(dir) = &self.out {
            config.output.dir = dir.clone();
        }
        if let Some(format) = self.format {
            config.output.format = format;
        }
        let levels = &mut config.levels;
        levels.k_max = self.k_max.unwrap_or(levels.k_max);
        levels.grid_level = self.grid_level.unwrap_or(levels.grid_level);
        levels.sample_level = self.sample_level.unwrap_or(levels.sample_level);
        let tol = &mut config.tolerances;
        tol.spectral = self.tol_spectral.unwrap_or(tol.spectral);
        tol.bracket_width = self.bracket_width.unwrap_or(tol.bracket_width);
        config.check()?;
        Ok(config)
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("FIFDIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let (command, common) = match &cli.command {
        Sub::Validate(c) => (Command::Validate, c),
        Sub::Sample(c) => (Command::Sample, c),
        Sub::Matrices(c) => (Command::Matrices, c),
        Sub::Rho(c) => (Command::Rho, c),
        Sub::Dim(c) => (Command::Dim, c),
        Sub::Boxcount(c) => (Command::Boxcount, c),
        Sub::Report(c) => (Command::Report, c),
    };
    let result = common.load().and_then(|config| run(&config, command, common.strict));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
