use kgprobe::config::ConfigError;
use kgprobe::gql::GqlError;
use kgprobe::graph::GraphError;
use kgprobe::jsonl::JsonlError;
use kgprobe::quizzer::{DatasetError, QuizError};
use kgprobe::retriever::{EmbedError, IndexError};
use kgprobe::reward::RewardError;
use thiserror::Error;

/// Failure of a command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Transport(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Transport(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Transport(_) => "transport",
        }
    }

    /// One-line JSON diagnostic for stderr.
    pub fn diagnostic(&self) -> String {
        serde_json::json!({ "error": self.kind(), "detail": self.to_string() }).to_string()
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read { .. } => CliError::Data(e.to_string()),
            ConfigError::Invalid(_) | ConfigError::MissingSecret(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<GqlError> for CliError {
    fn from(e: GqlError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<JsonlError> for CliError {
    fn from(e: JsonlError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<RewardError> for CliError {
    fn from(e: RewardError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match &e {
            IndexError::Embed {
                source: EmbedError::Transport(_),
                ..
            }
            | IndexError::Query(EmbedError::Transport(_)) => CliError::Transport(e.to_string()),
            IndexError::ZeroTopk => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match &e {
            DatasetError::Weights(_) => CliError::Usage(e.to_string()),
            DatasetError::Quiz(QuizError::Aborted(_)) => CliError::Transport(e.to_string()),
            DatasetError::Quiz(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
