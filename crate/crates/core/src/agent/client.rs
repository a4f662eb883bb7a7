//! Chat clients: the policy behind an episode.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::http::{post_json, HttpError};

use super::protocol::ToolCall;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }

    pub fn tool(content: impl Into<String>) -> Self {
        Self { role: Role::Tool, content: content.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingOptions {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for DecodingOptions {
    fn default() -> Self {
        Self { temperature: 0.7, max_tokens: 4096 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ChatRequest<'a> {
    pub system: &'a str,
    pub messages: &'a [Message],
    pub tools: &'a [Value],
    pub options: DecodingOptions,
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("malformed chat response: {0}")]
    Malformed(String),
    #[error("scripted client has no message for turn {0}")]
    ScriptExhausted(usize),
    #[error("{0}")]
    Other(String),
}

impl ClientError {
    /// True for failures of the network or remote service.
    pub fn is_transport(&self) -> bool {
        matches!(self, ClientError::Http(_))
    }
}

/// Produces the next assistant message for a conversation.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, ClientError>;
}

impl<C: ChatClient + ?Sized> ChatClient for &C {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, ClientError> {
        (**self).complete(request)
    }
}

impl<C: ChatClient + ?Sized> ChatClient for std::sync::Arc<C> {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, ClientError> {
        (**self).complete(request)
    }
}

/// What a [`ScriptedClient`] does once its list runs out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScriptEnd {
    #[default]
    Exhaust,
    RepeatLast,
    Cycle,
}

/// Replays a fixed list of assistant messages. The reply for a request is
/// chosen by the number of assistant messages already in its history, so a
/// single client can serve many episodes concurrently.
#[derive(Debug, Clone)]
pub struct ScriptedClient {
    replies: Vec<String>,
    end: ScriptEnd,
}

impl ScriptedClient {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self {
            replies: replies.into_iter().map(Into::into).collect(),
            end: ScriptEnd::Exhaust,
        }
    }

    pub fn with_end(mut self, end: ScriptEnd) -> Self {
        self.end = end;
        self
    }

    pub fn replies(&self) -> &[String] {
        &self.replies
    }
}

impl ChatClient for ScriptedClient {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, ClientError> {
        let turn = request.messages.iter().filter(|m| m.role == Role::Assistant).count();
        let n = self.replies.len();
        let idx = match self.end {
            _ if turn < n => turn,
            _ if n == 0 => return Err(ClientError::ScriptExhausted(turn)),
            ScriptEnd::Exhaust => return Err(ClientError::ScriptExhausted(turn)),
            ScriptEnd::RepeatLast => n - 1,
            ScriptEnd::Cycle => turn % n,
        };
        Ok(self.replies[idx].clone())
    }
}

/// Adapts a closure.
pub struct FnClient<F>(pub F);

impl<F> ChatClient for FnClient<F>
where
    F: Fn(&ChatRequest<'_>) -> Result<String, ClientError> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, ClientError> {
        (self.0)(request)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub system: String,
    pub messages: Vec<Message>,
    pub reply: Result<String, String>,
}

/// Wraps a client and logs every exchange.
pub struct RecordingClient<C> {
    inner: C,
    log: Mutex<Vec<Exchange>>,
}

impl<C: ChatClient> RecordingClient<C> {
    pub fn new(inner: C) -> Self {
        Self { inner, log: Mutex::new(Vec::new()) }
    }

    pub fn exchanges(&self) -> Vec<Exchange> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl<C: ChatClient> ChatClient for RecordingClient<C> {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, ClientError> {
        let reply = self.inner.complete(request);
        self.log.lock().unwrap_or_else(|e| e.into_inner()).push(Exchange {
            system: request.system.to_string(),
            messages: request.messages.to_vec(),
            reply: reply.as_ref().map(Clone::clone).map_err(ToString::to_string),
        });
        reply
    }
}

/// Chat-completions client. Tool observations are sent as user turns
/// wrapped in `<tool_response>` tags, and structured tool calls in replies
/// are folded back into tagged text, so the transcript stays textual.
#[derive(Debug, Clone)]
pub struct HttpChatClient {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub max_retries: u32,
}

impl HttpChatClient {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            max_retries: 3,
        }
    }

    pub fn request_body(&self, request: &ChatRequest<'_>) -> Value {
        let mut messages = vec![json!({"role": "system", "content": request.system})];
        for m in request.messages {
            messages.push(match m.role {
                Role::User => json!({"role": "user", "content": m.content}),
                Role::Assistant => json!({"role": "assistant", "content": m.content}),
                Role::Tool => json!({
                    "role": "user",
                    "content": format!("<tool_response>\n{}\n</tool_response>", m.content),
                }),
            });
        }
        let mut body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": request.options.temperature,
            "max_tokens": request.options.max_tokens,
        });
        if !request.tools.is_empty() {
            body["tools"] = Value::Array(request.tools.to_vec());
        }
        body
    }
}

/// Extracts the assistant text from a chat-completions response.
pub fn parse_chat_response(resp: &Value) -> Result<String, ClientError> {
    let message = resp
        .pointer("/choices/0/message")
        .ok_or_else(|| ClientError::Malformed("missing choices[0].message".into()))?;
    let mut text = message
        .get("content")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    if let Some(calls) = message.get("tool_calls").and_then(Value::as_array) {
        for call in calls {
            let function = call
                .get("function")
                .ok_or_else(|| ClientError::Malformed("tool call without function".into()))?;
            let name = function.get("name").and_then(Value::as_str).unwrap_or_default();
            let arguments = match function.get("arguments") {
                Some(Value::String(s)) => serde_json::from_str(s)
                    .map_err(|e| ClientError::Malformed(format!("tool call arguments: {e}")))?,
                Some(v) => v.clone(),
                None => json!({}),
            };
            if !text.is_empty() {
                text.push_str("\n\n");
            }
            text.push_str(&ToolCall::new(name, arguments).serialize());
        }
    }
    Ok(text)
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, ClientError> {
        let resp = post_json(
            &self.endpoint,
            self.api_key.as_deref(),
            &self.request_body(request),
            self.max_retries,
        )?;
        parse_chat_response(&resp)
    }
}
