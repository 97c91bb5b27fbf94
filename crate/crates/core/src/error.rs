use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible scenario: {}", join_violations(.0))]
    Infeasible(Vec<Violation>),

    #[error("undefined baseline: cost without offloading must be positive")]
    UndefinedBaseline,

    #[error("degenerate placement weighting: mean weight is zero")]
    DegeneratePlacementWeighting,

    #[error("requester departure at tau={tau} drives requesters below zero")]
    NegativeRequesters { tau: f64 },

    #[error("time grid is not ascending or does not start at 0")]
    BadGrid,

    #[error("expected event count {expected:.0} exceeds the memory cap of {cap} events")]
    EventCap { expected: f64, cap: usize },

    #[error("population exceeded: {requested} requesters but only {available} mobile nodes")]
    PopulationExceeded { requested: u64, available: usize },

    #[error("oracle scale exceeded: r0={r0} (max 30), h0={h0} (max 10)")]
    OracleScaleExceeded { r0: usize, h0: usize },

    #[error("offloading not cost-meaningful: c_sc={c_sc} must be below c_bs_ttl={c_bs_ttl}")]
    NotCostMeaningful { c_sc: f64, c_bs_ttl: f64 },

    #[error("search space of {points:.3e} points exceeds the limit of 1e8")]
    SearchSpaceTooLarge { points: f64 },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
