//! Crate-wide error type aggregating the per-module errors.

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::case_io::CaseError;
use crate::dlm::SimError;
use crate::graph::GraphError;
use crate::objectives::ObjectiveError;
use crate::oracle::OracleError;
use crate::schedule::ScheduleError;
use crate::spectral::SpectralError;
use crate::trace::TraceError;
use crate::weights::WeightError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Case(#[from] CaseError),
}

impl Error {
    /// Short machine-readable tag naming the failure class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Graph(e) => e.kind(),
            Error::Weight(e) => e.kind(),
            Error::Spectral(_) => "NonConvergence",
            Error::Objective(_) => "ObjectiveError",
            Error::Schedule(_) => "ScheduleError",
            Error::Sim(_) => "SimulationError",
            Error::Trace(_) => "TraceError",
            Error::Analysis(e) => e.kind(),
            Error::Oracle(e) => e.kind(),
            Error::Case(e) => e.kind(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
