//! HTTP service over one loaded environment. Handlers share the same
//! immutable graph and index; the router is built only after both loaded.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use kgprobe::agent::{execute_tool, Environment, StepRole, ToolCall, Trajectory, TrajectoryStep};
use kgprobe::gql::{render_rows, run_query, Params};
use kgprobe::graph::{GraphStats, PropertyGraph};
use kgprobe::retriever::{hits_json, retrieve, DEFAULT_TOPK};
use kgprobe::reward::combined_reward;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub struct ServiceState {
    pub env: Environment,
    pub delta: f64,
}

/// Rendered result of one query, as returned by `query` and `POST /query`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub result: String,
    pub row_count: usize,
    pub failed: bool,
}

pub fn query_response(graph: &PropertyGraph, query: &str, params: &Params, cap: usize) -> QueryResponse {
    match run_query(query, graph, params) {
        Ok(table) => QueryResponse {
            result: render_rows(&table, cap),
            row_count: table.len(),
            failed: false,
        },
        Err(e) => QueryResponse {
            result: e.to_string(),
            row_count: 0,
            failed: true,
        },
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryRequest {
    query: String,
    #[serde(default)]
    params: Params,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RetrieveRequest {
    queries: Vec<String>,
    topk: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ToolRequest {
    tool_call: ToolCall,
}

/// A full trajectory, or just the text of a final reply.
#[derive(Deserialize)]
#[serde(untagged)]
enum TrajectoryInput {
    Full(Trajectory),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardRequest {
    trajectory: TrajectoryInput,
    gold: String,
    clue_nodes: Vec<String>,
    delta: Option<f64>,
}

fn bad_request(detail: impl Into<String>) -> Response {
    (
        StatusCode::BAD_REQUEST,
        Json(json!({ "error": "bad_request", "detail": detail.into() })),
    )
        .into_response()
}

fn internal(detail: impl Into<String>) -> Response {
    (
        StatusCode::INTERNAL_SERVER_ERROR,
        Json(json!({ "error": "internal", "detail": detail.into() })),
    )
        .into_response()
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, Box<Response>> {
    serde_json::from_slice(bytes).map_err(|e| Box::new(bad_request(format!("invalid request body: {e}"))))
}

/// Runs CPU-bound or blocking work off the async workers.
async fn blocking<F>(f: F) -> Response
where
    F: FnOnce() -> Response + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| internal(format!("handler failed: {e}")))
}

async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn graph_stats(State(state): State<Arc<ServiceState>>) -> Json<GraphStats> {
    Json(state.env.graph.stats())
}

async fn query(State(state): State<Arc<ServiceState>>, bytes: Bytes) -> Response {
    let req: QueryRequest = match body(&bytes) {
        Ok(r) => r,
        Err(resp) => return *resp,
    };
    blocking(move || {
        let env = &state.env;
        Json(query_response(&env.graph, &req.query, &req.params, env.response_cap)).into_response()
    })
    .await
}

async fn retrieve_handler(State(state): State<Arc<ServiceState>>, bytes: Bytes) -> Response {
    let req: RetrieveRequest = match body(&bytes) {
        Ok(r) => r,
        Err(resp) => return *resp,
    };
    let topk = req.topk.unwrap_or(DEFAULT_TOPK);
    if topk == 0 {
        return bad_request("topk must be at least 1");
    }
    if req.queries.is_empty() {
        return bad_request("queries must not be empty");
    }
    blocking(move || {
        let env = &state.env;
        match retrieve(&env.index, &req.queries, topk, env.embedder.as_ref()) {
            Ok(hits) => Json(hits_json(topk, &hits)).into_response(),
            Err(e) => internal(e.to_string()),
        }
    })
    .await
}

async fn tool(State(state): State<Arc<ServiceState>>, bytes: Bytes) -> Response {
    let req: ToolRequest = match body(&bytes) {
        Ok(r) => r,
        Err(resp) => return *resp,
    };
    blocking(move || Json(execute_tool(&req.tool_call, &state.env)).into_response()).await
}

async fn reward(State(state): State<Arc<ServiceState>>, bytes: Bytes) -> Response {
    let req: RewardRequest = match body(&bytes) {
        Ok(r) => r,
        Err(resp) => return *resp,
    };
    let trajectory = match req.trajectory {
        TrajectoryInput::Full(t) => t,
        TrajectoryInput::Text(text) => Trajectory {
            question: String::new(),
            steps: vec![TrajectoryStep::observation(""), TrajectoryStep::action(text, None)],
            final_answer: None,
            budget_exhausted: false,
            aborted: false,
            abort_reason: None,
        },
    };
    if !trajectory.steps.iter().any(|s| s.role == StepRole::Action) {
        return bad_request("trajectory has no assistant step");
    }
    let delta = req.delta.unwrap_or(state.delta);
    match combined_reward(&trajectory, &req.gold, &req.clue_nodes, delta, &state.env.graph) {
        Ok(r) => Json(r).into_response(),
        Err(e) => bad_request(e.to_string()),
    }
}

async fn not_found() -> Response {
    (
        StatusCode::NOT_FOUND,
        Json(json!({ "error": "not_found", "detail": "no such endpoint" })),
    )
        .into_response()
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/graph/stats", get(graph_stats))
        .route("/query", post(query))
        .route("/retrieve", post(retrieve_handler))
        .route("/tool", post(tool))
        .route("/reward", post(reward))
        .fallback(not_found)
        .with_state(state)
}

/// Serves until the future `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<ServiceState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}
