//! Sends lineage extraction prompts to a chat-completion endpoint and
//! records the raw responses as prediction records.
//!
//! Credentials are read from the environment variable named in the
//! endpoint config; they are never stored in config files.

mod backend;
mod config;
mod run;

use thiserror::Error;

pub use backend::{ChatBackend, HttpBackend};
pub use config::{EndpointConfig, RetryPolicy};
pub use run::{run_extraction, RunOptions, RunSummary};

use slice_lineage::corpus::CorpusError;

/// Failure of one request; recorded per task rather than aborting the run.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RequestError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {0}: {1}")]
    Status(u16, String),
    #[error("unexpected response body: {0}")]
    BadResponse(String),
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("invalid endpoint config: {0}")]
    Config(String),
    #[error("endpoint {url} is unreachable: {reason}")]
    EndpointUnreachable { url: String, reason: String },
    #[error("gold task refers to script `{0}` which is not in the corpus")]
    UnknownScript(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("writing predictions: {0}")]
    Io(std::io::Error),
}
