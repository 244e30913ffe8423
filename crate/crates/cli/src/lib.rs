//! Command-line front end: JSON run configurations, the analysis pipeline,
//! and CSV/JSON artifacts.

pub mod commands;
pub mod config;
pub mod output;

use serde::Serialize;

use fifdim_core::FifError;

pub use commands::{run, Command, Outcome};
pub use config::{Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Fif(#[from] FifError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("inconclusive verdict: {0}")]
    Inconclusive(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Fif(FifError::MalformedInput(_)) => 2,
            CliError::Fif(FifError::ContractivityViolation { .. }) => 3,
            CliError::Fif(FifError::ResourceLimit { .. }) => 4,
            CliError::Fif(FifError::NoConvergence { .. }) => 5,
            CliError::Inconclusive(_) => 6,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Fif(e) => match e {
                FifError::MalformedInput(_) => "malformed_input",
                FifError::ContractivityViolation { .. } => "contractivity_violation",
                FifError::ConditionNotMet { .. } => "condition_not_met",
                FifError::ResourceLimit { .. } => "resource_limit",
                FifError::NoConvergence { .. } => "no_convergence",
                FifError::DomainError(_) => "domain_error",
                FifError::InsufficientResolution { .. } => "insufficient_resolution",
                FifError::DegenerateFit(_) => "degenerate_fit",
            },
            CliError::Io(_) => "io",
            CliError::Inconclusive(_) => "inconclusive",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
            exit_code: i32,
            #[serde(skip_serializing_if = "Option::is_none")]
            achieved_width: Option<f64>,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Body<'a>,
        }
        let achieved_width = match self {
            CliError::Fif(FifError::ResourceLimit { achieved_width, .. }) => *achieved_width,
            _ => None,
        };
        serde_json::to_string(&Wrapper {
            error: Body {
                kind: self.kind(),
                message: self.to_string(),
                exit_code: self.exit_code(),
                achieved_width,
            },
        })
        .expect("error serializes")
    }
}
