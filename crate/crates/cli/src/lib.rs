//! Command-line front end for `convexset`: a JSON exchange format, a small
//! set-expression language, SVG/mesh plotting and the `convexset` binary.

pub mod commands;
pub mod document;
pub mod expr;
pub mod render;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Expr(#[from] expr::ExprError),
    #[error(transparent)]
    Compute(#[from] convexset::Error),
}

impl CliError {
    /// 1 for usage and input problems, 2 for failed computations.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => 2,
            CliError::Expr(e) if e.is_computation() => 2,
            _ => 1,
        }
    }
}

pub use commands::run;
