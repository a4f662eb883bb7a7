//! Tool-call wire format and the registered tool schemas.
//!
//! A call is a JSON object `{"name": ..., "arguments": {...}}` wrapped in
//! `<tool_call>` tags. Only the first tagged block of a message is used.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::pyrepr::py_json;

pub const CODE_INTERPRETER: &str = "code_interpreter";
pub const NODE_RETRIEVER: &str = "node_id_retriever";

const OPEN_TAG: &str = "<tool_call>";
const CLOSE_TAG: &str = "</tool_call>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    pub arguments: Map<String, Value>,
}

/// Outcome of scanning a message for a tool call.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedCall {
    None,
    Call(ToolCall),
    Malformed(String),
}

impl ToolCall {
    pub fn new(name: impl Into<String>, arguments: Value) -> Self {
        let arguments = match arguments {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        Self {
            name: name.into(),
            arguments,
        }
    }

    pub fn code(code: impl Into<String>) -> Self {
        Self::new(CODE_INTERPRETER, json!({ "code": code.into() }))
    }

    pub fn retrieve(queries: &[&str], topk: usize) -> Self {
        Self::new(NODE_RETRIEVER, json!({ "queries": queries, "topk": topk }))
    }

    /// The JSON body, `name` first, formatted like Python's `json.dumps`.
    pub fn to_json_text(&self) -> String {
        format!(
            "{{\"name\": {}, \"arguments\": {}}}",
            py_json(&Value::String(self.name.clone())),
            py_json(&Value::Object(self.arguments.clone()))
        )
    }

    /// The full tagged block.
    pub fn serialize(&self) -> String {
        format!("{OPEN_TAG}\n{}\n{CLOSE_TAG}", self.to_json_text())
    }
}

/// Extracts and validates the first tool-call block in `text`.
pub fn parse_tool_call(text: &str) -> ParsedCall {
    let Some(start) = text.find(OPEN_TAG) else {
        return ParsedCall::None;
    };
    let body_start = start + OPEN_TAG.len();
    let Some(len) = text[body_start..].find(CLOSE_TAG) else {
        return ParsedCall::Malformed("unterminated tool_call block".into());
    };
    let body = text[body_start..body_start + len].trim();
    let value: Value = match serde_json::from_str(body) {
        Ok(v) => v,
        Err(e) => return ParsedCall::Malformed(format!("invalid JSON: {e}")),
    };
    let Value::Object(obj) = value else {
        return ParsedCall::Malformed("tool call must be a JSON object".into());
    };
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    if keys != ["arguments", "name"] {
        return ParsedCall::Malformed(format!(
            "tool call must have exactly the keys `name` and `arguments`, found {keys:?}"
        ));
    }
    let Some(name) = obj["name"].as_str() else {
        return ParsedCall::Malformed("`name` must be a string".into());
    };
    let Some(arguments) = obj["arguments"].as_object() else {
        return ParsedCall::Malformed("`arguments` must be an object".into());
    };
    let call = ToolCall {
        name: name.to_string(),
        arguments: arguments.clone(),
    };
    match validate_arguments(&call) {
        Ok(()) => ParsedCall::Call(call),
        Err(reason) => ParsedCall::Malformed(reason),
    }
}

/// Checks a call against its tool's schema.
pub fn validate_arguments(call: &ToolCall) -> Result<(), String> {
    let args = &call.arguments;
    let allowed: &[&str] = match call.name.as_str() {
        CODE_INTERPRETER => {
            match args.get("code") {
                Some(Value::String(_)) => {}
                Some(_) => return Err("`code` must be a string".into()),
                None => return Err("missing required argument `code`".into()),
            }
            &["code"]
        }
        NODE_RETRIEVER => {
            match args.get("queries") {
                Some(Value::Array(items)) if items.is_empty() => {
                    return Err("`queries` must not be empty".into())
                }
                Some(Value::Array(items)) if items.iter().all(Value::is_string) => {}
                Some(_) => return Err("`queries` must be an array of strings".into()),
                None => return Err("missing required argument `queries`".into()),
            }
            match args.get("topk") {
                None => {}
                Some(v) if v.as_u64().is_some_and(|k| k >= 1) => {}
                Some(_) => return Err("`topk` must be a positive integer".into()),
            }
            &["queries", "topk"]
        }
        other => return Err(format!("unknown tool `{other}`")),
    };
    if let Some(extra) = args.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(format!("unexpected argument `{extra}` for {}", call.name));
    }
    Ok(())
}

/// Function schemas of the two tools, in chat-completions `tools` form.
pub fn tool_schemas() -> Vec<Value> {
    vec![
        json!({
            "type": "function",
            "function": {
                "name": CODE_INTERPRETER,
                "description": "Execute Python code for querying and analyzing a heterogeneous graph stored in Neo4j. Inside the executed Python, use the provided synchronous function `cypher(query, params=None, limit=None)` (not a separate tool) to run read-only Cypher queries.",
                "parameters": {
                    "type": "object",
                    "properties": {
                        "code": { "type": "string", "description": "Python code" }
                    },
                    "required": ["code"]
                }
            }
        }),
        json!({
            "type": "function",
            "function": {
                "name": NODE_RETRIEVER,
                "description": "Retrieve top nodes ids from a heterogeneous graph by semantic similarity (batch). You can use this tool to get target nodes ids first and then continue next steps.",
                "parameters": {
                    "type": "object",
                    "properties": {
                        "queries": {
                            "type": "array",
                            "description": "A list of query strings. Such as ['Nausea', 'MTUS1']",
                            "items": { "type": "string" }
                        },
                        "topk": {
                            "type": "integer",
                            "description": "Number of retrieved nodes per query. Default is 2.",
                            "default": 2
                        }
                    },
                    "required": ["queries"]
                }
            }
        }),
    ]
}

/// Observation text for a call that could not be parsed.
pub fn malformed_call_response(reason: &str) -> String {
    format!(
        "Error: malformed tool call ({reason}). Emit exactly one call as \
         <tool_call>\n{{\"name\": \"<tool name>\", \"arguments\": {{...}}}}\n</tool_call> \
         using one of: {CODE_INTERPRETER} (arguments: code), {NODE_RETRIEVER} (arguments: queries, optional topk)."
    )
}
