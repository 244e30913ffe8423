use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fifdim_core::dimension::{DimensionOptions, DEFAULT_GRID_LEVEL, DEFAULT_K_MAX, DEFAULT_RESOLUTION_MARGIN};
use fifdim_core::fif::{GridOptions, InterpolationProblem, DEFAULT_GRID_TOL};
use fifdim_core::rational::Exact;
use fifdim_core::scaling::ScalingFunction;
use fifdim_core::spectral::{SpectralOptions, DEFAULT_SPECTRAL_TOL};
use fifdim_core::{FifError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_BRACKET_WIDTH: f64 = 1e-4;
pub const DEFAULT_SAMPLE_LEVEL: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub breaks: Vec<Exact>,
    /// Ascending-power coefficients, one list per piece.
    pub coeffs: Vec<Vec<Exact>>,
    #[serde(default)]
    pub lipschitz: Option<Exact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub knots: Vec<Exact>,
    pub values: Vec<Exact>,
    pub scaling: ScalingSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub spectral: f64,
    pub bracket_width: f64,
    pub grid: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            spectral: DEFAULT_SPECTRAL_TOL,
            bracket_width: DEFAULT_BRACKET_WIDTH,
            grid: DEFAULT_GRID_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Levels {
    pub k_max: u32,
    pub grid_level: u32,
    /// Grid level of the `sample` output.
    pub sample_level: u32,
    pub slope_window: Option<(u32, u32)>,
}

impl Default for Levels {
    fn default() -> Self {
        Levels {
            k_max: DEFAULT_K_MAX,
            grid_level: DEFAULT_GRID_LEVEL,
            sample_level: DEFAULT_SAMPLE_LEVEL,
            slope_window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    #[default]
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_dir(),
            format: Format::default(),
        }
    }
}

/// A JSON run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub levels: Levels,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| FifError::MalformedInput(format!("config: {e}")))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FifError::MalformedInput(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn check(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(FifError::MalformedInput(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let t = &self.tolerances;
        for (name, value) in [
            ("spectral", t.spectral),
            ("bracket_width", t.bracket_width),
            ("grid", t.grid),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(FifError::MalformedInput(format!("tolerance {name} must be positive")));
            }
        }
        let l = &self.levels;
        if l.k_max < 1 || l.grid_level < 2 || l.sample_level < 1 {
            return Err(FifError::MalformedInput(
                "levels: need k_max >= 1, grid_level >= 2, sample_level >= 1".into(),
            ));
        }
        if let Some((lo, hi)) = l.slope_window {
            if lo > hi || hi >= l.grid_level {
                return Err(FifError::MalformedInput(format!(
                    "slope window {lo}..{hi} must be ordered and below grid_level {}",
                    l.grid_level
                )));
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<InterpolationProblem> {
        let spec = &self.problem;
        let lipschitz = spec.scaling.lipschitz.as_ref().map(Exact::to_f64);
        let scaling = ScalingFunction::new(
            spec.scaling.breaks.iter().map(|e| e.0.clone()).collect(),
            spec.scaling
                .coeffs
                .iter()
                .map(|piece| piece.iter().map(|e| e.0.clone()).collect())
                .collect(),
            lipschitz,
        )?;
        InterpolationProblem::new(
            spec.knots.iter().map(|e| e.0.clone()).collect(),
            spec.values.iter().map(|e| e.0.clone()).collect(),
            scaling,
        )
    }

    pub fn spectral_options(&self) -> SpectralOptions {
        SpectralOptions {
            tol: self.tolerances.spectral,
            ..SpectralOptions::default()
        }
    }

    pub fn dimension_options(&self) -> DimensionOptions {
        DimensionOptions {
            k_max: self.levels.k_max,
            spectral: self.spectral_options(),
            grid_level: self.levels.grid_level,
            grid: GridOptions {
                tol: self.tolerances.grid,
                ..GridOptions::default()
            },
            resolution_margin: DEFAULT_RESOLUTION_MARGIN,
            slope_window: self.levels.slope_window,
        }
    }
}
