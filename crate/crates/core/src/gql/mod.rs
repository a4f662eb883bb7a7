//! Read-only Cypher subset: parser, binder, evaluator, and renderer.
//!
//! Supported: one or more `MATCH` clauses of fixed-length paths with labels,
//! relationship types, directions, and inline property equalities; `WHERE`
//! with comparisons, `IS [NOT] NULL`, `AND`/`OR`/`XOR`/`NOT`; `RETURN` of
//! properties, variables, `type(r)`, and `count(...)` with implicit grouping;
//! `ORDER BY`, `SKIP`, `LIMIT`; `$name` parameters.
//!
//! Comparisons involving null, and ordering comparisons between values of
//! different kinds, evaluate to false.

mod ast;
mod bind;
mod error;
mod exec;
mod lexer;
mod parser;
mod render;
mod value;

pub use ast::{
    CmpOp, Expr, Literal, MatchClause, NodePattern, PathPattern, Query, RelDirection, RelPattern,
    ReturnItem, SortItem,
};
pub use error::GqlError;
pub use exec::{execute, execute_with_params, Params, ResultTable, MAX_BINDINGS};
pub use parser::parse;
pub use render::{render_rows, truncate_text, MIN_RENDER_CHARS};
pub use value::{total_cmp, Value};

use crate::graph::PropertyGraph;

/// Parses and executes `text` in one step.
pub fn run_query(
    text: &str,
    graph: &PropertyGraph,
    params: &Params,
) -> Result<ResultTable, GqlError> {
    execute_with_params(&parse(text)?, graph, params)
}
