//! Benchmark harness: exhaustive oracle, seeded instance families, a small
//! reactor-network problem and comparative reports.

mod generate;
mod oracle;
mod reactor;
mod suite;

use thiserror::Error;

pub use generate::{generate_instance, Family, MAX_GENERATED_BINARIES, MAX_GENERATED_CONTINUOUS};
pub use oracle::{brute_force_solve, brute_force_solve_with, halton_starts, AssignmentResult, OracleResult, MAX_ORACLE_BINARIES};
pub use reactor::{reactor_network_instance, reactor_network_with, ReactorParams, K1, K2};
pub use suite::{
    relative_error, run_benchmark, BenchOptions, BenchRow, BenchmarkReport, NamedInstance, StartStrategy, Suite,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{count} binaries exceed the enumeration limit of {limit}")]
    TooManyBinaries { count: usize, limit: usize },
    #[error("invalid size n = {n}, m = {m}: {reason}")]
    Size { n: usize, m: usize, reason: &'static str },
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("start point has length {got}, problem has {expected} variables")]
    StartLength { got: usize, expected: usize },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Nlp(#[from] crate::nlp::NlpError),
    #[error(transparent)]
    Bnb(#[from] crate::bnb::BnbError),
}
