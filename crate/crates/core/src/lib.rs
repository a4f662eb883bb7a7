//! Agentic knowledge-graph reasoning harness.
//!
//! An in-memory property graph with a read-only Cypher subset, exact node
//! retrieval, a tool-calling episode engine driven by any chat client,
//! synthetic question generation, reward and advantage computation, and
//! benchmark evaluation.

pub mod graph;
pub mod gql;
pub mod pyrepr;
pub mod http;
pub mod retriever;
pub mod agent;
pub mod reward;
pub mod quizzer;
pub mod jsonl;
pub mod eval;
pub mod config;
