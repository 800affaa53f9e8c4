//! Process exit statuses.

use slice_client::ClientError;
use slice_lineage::config::ConfigError;
use slice_lineage::corpus::CorpusError;
use slice_lineage::report::ReportError;

pub const OK: u8 = 0;
/// The command ran but reported findings.
pub const FINDINGS: u8 = 1;
// 2 is clap's usage error
pub const IO: u8 = 3;
/// Malformed records or predictions that do not match the gold set.
pub const RECORDS: u8 = 4;
pub const CONFIG: u8 = 5;
pub const ENDPOINT: u8 = 6;

/// Marks an error with an explicit exit status.
#[derive(Debug)]
pub struct Status(pub u8, pub String);

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Status {}

pub fn config_error(message: impl Into<String>) -> anyhow::Error {
    Status(CONFIG, message.into()).into()
}

pub fn io_error(message: impl Into<String>) -> anyhow::Error {
    Status(IO, message.into()).into()
}

fn corpus_code(e: &CorpusError) -> u8 {
    match e {
        CorpusError::Io { .. } => IO,
        _ => RECORDS,
    }
}

/// Exit status for an error, from the first classifiable cause.
pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(Status(code, _)) = cause.downcast_ref::<Status>() {
            return *code;
        }
        if let Some(e) = cause.downcast_ref::<CorpusError>() {
            return corpus_code(e);
        }
        if let Some(e) = cause.downcast_ref::<ConfigError>() {
            return match e {
                ConfigError::Io { .. } => IO,
                _ => CONFIG,
            };
        }
        if let Some(e) = cause.downcast_ref::<ReportError>() {
            return match e {
                ReportError::IncompatibleReports(_) => CONFIG,
                _ => RECORDS,
            };
        }
        if let Some(e) = cause.downcast_ref::<ClientError>() {
            return match e {
                ClientError::Config(_) => CONFIG,
                ClientError::EndpointUnreachable { .. } => ENDPOINT,
                ClientError::Io(_) => IO,
                ClientError::Corpus(c) => corpus_code(c),
                ClientError::UnknownScript(_) => RECORDS,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return IO;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return RECORDS;
        }
    }
    FINDINGS
}
