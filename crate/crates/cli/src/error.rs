use ownerscope_core::analysis::AnalysisError;
use ownerscope_core::ingest::IngestError;
use ownerscope_core::metrics::MetricsError;
use serde_json::json;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NETWORK: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;

/// A failure with the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Ingest(e) if e.is_network() => EXIT_NETWORK,
            CliError::Analysis(e) if e.is_degenerate() => EXIT_DEGENERATE,
            _ => EXIT_INPUT,
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            EXIT_NETWORK => "network",
            EXIT_DEGENERATE => "degenerate",
            _ => "input",
        }
    }

    pub fn report(&self, as_json: bool) {
        if as_json {
            let body = json!({
                "error": {
                    "kind": self.kind(),
                    "message": self.to_string(),
                    "exit_code": self.exit_code(),
                }
            });
            eprintln!("{body}");
        } else {
            eprintln!("error: {self}");
        }
    }
}
