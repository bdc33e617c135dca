use thiserror::Error;

use crate::design::GainLedger;
use crate::simulation::SimTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph does not contain a directed spanning tree rooted at the leader")]
    NoSpanningTree,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("inertia matrix is numerically singular")]
    SingularInertia,

    #[error("error norms never stayed below the tolerance")]
    NotConverged,

    #[error("gain search stopped after {iterations} iterations")]
    IterationCap {
        iterations: usize,
        ledger: Box<GainLedger>,
    },

    #[error("non-finite value in {component} at t = {t}")]
    NonFiniteState {
        component: String,
        t: f64,
        partial: Option<Box<SimTrace>>,
    },

    #[error("decay fit needs at least 3 samples with V > 0, got {0}")]
    DegenerateWindow(usize),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
