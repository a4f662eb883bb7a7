use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GqlError {
    #[error("syntax error at line {line}, column {column}: expected {}, found {found}", .expected.join(" or "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unsupported construct: {construct}")]
    Unsupported { construct: String },
    #[error("semantic error: {0}")]
    Binding(String),
    #[error("missing parameter ${0}")]
    MissingParameter(String),
    #[error("query produced more than {0} intermediate rows")]
    TooLarge(usize),
}

impl GqlError {
    pub(crate) fn syntax(line: usize, column: usize, expected: &[&str], found: &str) -> Self {
        GqlError::Syntax {
            line,
            column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.to_string(),
        }
    }

    pub(crate) fn unsupported(construct: impl Into<String>) -> Self {
        GqlError::Unsupported {
            construct: construct.into(),
        }
    }
}
