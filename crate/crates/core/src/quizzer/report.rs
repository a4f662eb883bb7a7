use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub question: String,
    pub answer: String,
    pub clue_nodes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("no <report> block")]
    MissingBlock,
    #[error("unterminated <report> block")]
    Unterminated,
    #[error("report is not valid JSON: {0}")]
    InvalidJson(String),
    #[error("report must be a JSON object")]
    NotObject,
    #[error("report is missing key `{0}`")]
    MissingKey(&'static str),
    #[error("report has unexpected key `{0}`")]
    ExtraKey(String),
    #[error("report field `{0}` has the wrong type")]
    WrongType(&'static str),
    #[error("report field `{0}` is empty")]
    EmptyField(&'static str),
    #[error("report has an empty clue list")]
    EmptyClues,
}

const OPEN: &str = "<report>";
const CLOSE: &str = "</report>";

/// Parses the last `<report>` block of a message.
pub fn parse_report(text: &str) -> Result<Report, ReportError> {
    let start = text.rfind(OPEN).ok_or(ReportError::MissingBlock)? + OPEN.len();
    let len = text[start..].find(CLOSE).ok_or(ReportError::Unterminated)?;
    let value: Value =
        serde_json::from_str(text[start..start + len].trim()).map_err(|e| ReportError::InvalidJson(e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(ReportError::NotObject);
    };
    if let Some(extra) = obj.keys().find(|k| !matches!(k.as_str(), "question" | "answer" | "clue_nodes")) {
        return Err(ReportError::ExtraKey(extra.clone()));
    }
    let string = |key: &'static str| -> Result<String, ReportError> {
        match obj.get(key) {
            None => Err(ReportError::MissingKey(key)),
            Some(Value::String(s)) if s.trim().is_empty() => Err(ReportError::EmptyField(key)),
            Some(Value::String(s)) => Ok(s.trim().to_string()),
            Some(_) => Err(ReportError::WrongType(key)),
        }
    };
    let question = string("question")?;
    let answer = string("answer")?;
    let clue_nodes = match obj.get("clue_nodes") {
        None => return Err(ReportError::MissingKey("clue_nodes")),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_str().map(str::to_string).ok_or(ReportError::WrongType("clue_nodes")))
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return Err(ReportError::WrongType("clue_nodes")),
    };
    if clue_nodes.is_empty() {
        return Err(ReportError::EmptyClues);
    }
    Ok(Report {
        question,
        answer,
        clue_nodes,
    })
}
