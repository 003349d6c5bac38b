// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use crate::aggregate::AggregateError;
use crate::ingest::IngestError;
use crate::refdata::RefDataError;
use crate::report::ReportError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error, tagged by the stage that raised it.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("refdata: {0}")]
    RefData(#[from] RefDataError),
    #[error("aggregate: {0}")]
    Aggregate(#[from] AggregateError),
    #[error("report: {0}")]
    Report(#[from] ReportError),
    #[error("config: {0}")]
    Config(String),
    #[error("input: {path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("output: {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code: 1 for input problems, 2 for configuration or
    /// reference-data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::RefData(_) => 2,
            _ => 1,
        }
    }
}
