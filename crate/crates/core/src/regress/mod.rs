//! Least-squares engine, the regression specifications run over pressure
//! series, and the hypothesis verdicts derived from their statistics.

mod ols;
mod specs;
mod verdict;

pub use ols::{ols_fit, wald_equal, Design, RegressionResult, Stars, StdErrorKind};
pub use specs::{
    fit_lagged, run_bollen_atm, run_bollen_k, run_chen, run_predictive, Horizon, PredictiveTarget,
    PredictiveDriver, RegressionSpec, SampleFilter, SpecName,
};
pub use verdict::{
    evaluate_verdict, CoefEvidence, Correction, HypothesisVerdict, Support, VerdictConfig,
    VerdictInputs,
};

use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error, serde::Serialize)]
pub enum RegressError {
    #[error("insufficient rows: {nobs} observations for {ncols} columns")]
    InsufficientRows { nobs: usize, ncols: usize },
    #[error("column `{column}` is collinear with the preceding columns{}", hint.map(|h| alloc::format!(" ({h})")).unwrap_or_default())]
    RankDeficient { column: String, hint: Option<&'static str> },
    #[error("dependent variable has zero variance")]
    DegenerateDependent,
    #[error("design has {rows} rows but the dependent has {len}")]
    Shape { rows: usize, len: usize },
    #[error("coefficient index {index} out of range for {ncols} coefficients")]
    Index { index: usize, ncols: usize },
    #[error("horizon of {horizon_hours}h is not a multiple of the {width_hours}h interval width")]
    Horizon { horizon_hours: i64, width_hours: i64 },
    #[error("missing verdict inputs: {}", .0.join(", "))]
    MissingInputs(alloc::vec::Vec<&'static str>),
}

pub type Result<T> = core::result::Result<T, RegressError>;
