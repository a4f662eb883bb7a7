//! Blocking JSON-over-HTTP POST with retries, shared by the chat and
//! embedding clients.

use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HttpError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("response is not valid JSON: {0}")]
    Decode(String),
}

impl HttpError {
    fn retryable(&self) -> bool {
        match self {
            HttpError::Transport(_) => true,
            HttpError::Status { status, .. } => *status == 429 || *status >= 500,
            HttpError::Decode(_) => false,
        }
    }
}

const TIMEOUT: Duration = Duration::from_secs(120);
const BASE_BACKOFF: Duration = Duration::from_millis(250);

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(TIMEOUT))
        .build()
        .into()
}

fn post_once(
    agent: &ureq::Agent,
    url: &str,
    api_key: Option<&str>,
    body: &serde_json::Value,
) -> Result<serde_json::Value, HttpError> {
    let mut req = agent.post(url).header("Content-Type", "application/json");
    if let Some(key) = api_key {
        req = req.header("Authorization", &format!("Bearer {key}"));
    }
    let mut resp = req
        .send_json(body)
        .map_err(|e| HttpError::Transport(e.to_string()))?;
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| HttpError::Transport(e.to_string()))?;
    if !(200..300).contains(&status) {
        return Err(HttpError::Status { status, body: text });
    }
    serde_json::from_str(&text).map_err(|e| HttpError::Decode(e.to_string()))
}

/// POSTs `body` and decodes the JSON reply. Transport errors, 429, and 5xx
/// responses are retried up to `max_retries` times with exponential backoff.
pub fn post_json(
    url: &str,
    api_key: Option<&str>,
    body: &serde_json::Value,
    max_retries: u32,
) -> Result<serde_json::Value, HttpError> {
    let agent = agent();
    let mut attempt = 0;
    loop {
        match post_once(&agent, url, api_key, body) {
            Err(e) if e.retryable() && attempt < max_retries => {
                std::thread::sleep(BASE_BACKOFF * 2u32.pow(attempt.min(6)));
                attempt += 1;
            }
            other => return other,
        }
    }
}
