//! Tool dispatch over a shared, immutable environment.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::gql::truncate_text;
use crate::graph::PropertyGraph;
use crate::retriever::{render_hits, retrieve, Embedder, EmbeddingIndex, DEFAULT_TOPK};

use super::protocol::{validate_arguments, ToolCall, CODE_INTERPRETER, NODE_RETRIEVER};
use super::script::run_script;

pub const DEFAULT_RESPONSE_CAP: usize = 4096;

/// Everything a tool can see. Cheap to clone; episodes share it.
#[derive(Clone)]
pub struct Environment {
    pub graph: Arc<PropertyGraph>,
    pub index: Arc<EmbeddingIndex>,
    pub embedder: Arc<dyn Embedder>,
    /// Maximum characters of a tool response; longer responses carry the
    /// truncation marker.
    pub response_cap: usize,
}

impl Environment {
    pub fn new(graph: Arc<PropertyGraph>, index: Arc<EmbeddingIndex>, embedder: Arc<dyn Embedder>) -> Self {
        Self {
            graph,
            index,
            embedder,
            response_cap: DEFAULT_RESPONSE_CAP,
        }
    }

    pub fn with_response_cap(mut self, cap: usize) -> Self {
        self.response_cap = cap;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolOutcome {
    pub response: String,
    pub failed: bool,
}

/// Runs one call. Failures are reported in the outcome, never as errors.
pub fn execute_tool(call: &ToolCall, env: &Environment) -> ToolOutcome {
    let checked = validate_arguments(call);
    let (response, failed) = match call.name.as_str() {
        CODE_INTERPRETER | NODE_RETRIEVER if checked.is_err() => {
            (format!("Error: invalid arguments: {}", checked.unwrap_err()), true)
        }
        CODE_INTERPRETER => {
            let code = call.arguments["code"].as_str().unwrap_or_default();
            let out = run_script(code, &env.graph, env.response_cap);
            (out.output, out.failed)
        }
        NODE_RETRIEVER => {
            let queries: Vec<String> = call.arguments["queries"]
                .as_array()
                .map(|a| a.iter().filter_map(|q| q.as_str().map(str::to_string)).collect())
                .unwrap_or_default();
            let topk = call
                .arguments
                .get("topk")
                .and_then(|v| v.as_u64())
                .map_or(DEFAULT_TOPK, |k| k as usize);
            match retrieve(&env.index, &queries, topk, env.embedder.as_ref()) {
                Ok(results) => (render_hits(topk, &results), false),
                Err(e) => (format!("Error: {e}"), true),
            }
        }
        other => (format!("Error: unknown tool `{other}`"), true),
    };
    ToolOutcome {
        response: truncate_text(&response, env.response_cap),
        failed,
    }
}
