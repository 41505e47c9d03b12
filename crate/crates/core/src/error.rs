use thiserror::Error;

use crate::topology::Link;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown device preset `{0}`")]
    UnknownPreset(String),

    #[error("malformed topology: {0}")]
    MalformedTopology(String),

    #[error("link ({}, {}) is not part of device `{device}`", .link.0, .link.1)]
    UnknownLink { device: String, link: Link },

    #[error("cannot co-schedule: {0}")]
    InfeasibleAllocation(String),

    #[error("qasm syntax error at {line}:{column}: {message}")]
    QasmSyntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported gate `{name}` at line {line}")]
    UnsupportedGate { name: String, line: usize },

    #[error("invalid program: {0}")]
    InvalidProgram(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("overlapping links in micro-benchmark: {0}")]
    OverlappingLinks(String),

    #[error("program is not disguisable as QAOA: {0}")]
    NotDisguisable(String),

    #[error("program uses {requested} qubits, simulator cap is {cap}")]
    QubitCapExceeded { requested: usize, cap: usize },

    #[error("co-scheduled regions overlap on qubit {0}")]
    OverlappingRegions(usize),

    #[error("empty distribution")]
    EmptyDistribution,

    #[error("zero isolated fidelity, relative fidelity undefined")]
    ZeroIsolatedFidelity,

    #[error("hold-out detection needs at least 3 contexts, got {0}")]
    TooFewContexts(usize),

    #[error("every context was flagged as attacked, re-execution required")]
    AllContextsFlagged,

    #[error("no eligible co-runner for program `{0}`")]
    CoRunnerExhausted(String),

    #[error("no context count up to {0} reaches the target resilience")]
    NoContextCount(usize),

    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
