//! System prompt describing the graph to the solver.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::PropertyGraph;
use crate::pyrepr::py_str;

/// Schema summary rendered into prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDescription {
    pub domain_label: Option<String>,
    pub node_types: Vec<String>,
    pub node_properties: BTreeMap<String, Vec<String>>,
    pub edge_types: Vec<String>,
}

impl GraphDescription {
    pub fn from_graph(graph: &PropertyGraph) -> Self {
        Self {
            domain_label: graph.domain_label().map(str::to_string),
            node_types: graph.node_types().map(str::to_string).collect(),
            node_properties: graph.node_type_properties(),
            edge_types: graph.edge_types().map(str::to_string).collect(),
        }
    }
}

pub const ANSWER_RULE: &str = "- Output rule: The very last line of your response must be exactly in the form \\answer{FINAL_ANSWER}. Do not include any extra text on that last line.";

fn py_list(items: &[String]) -> String {
    let inner: Vec<String> = items.iter().map(|s| py_str(s)).collect();
    format!("[{}]", inner.join(", "))
}

fn py_props(props: &BTreeMap<String, Vec<String>>) -> String {
    let inner: Vec<String> = props
        .iter()
        .map(|(k, v)| format!("{}: {}", py_str(k), py_list(v)))
        .collect();
    format!("{{{}}}", inner.join(", "))
}

/// Usage notes for the code interpreter's script dialect.
pub fn default_code_examples(domain_label: Option<&str>) -> String {
    let label = domain_label.map(|l| format!(":{l}")).unwrap_or_default();
    format!(
        "call cypher(query, params=None, limit=None) and print the result. \
Each statement must be either `name = cypher(\"...\")`, `name = \"...\"`, `print(name)` or `print(cypher(\"...\"))`; \
other Python statements are rejected. Example:\n\
```python\n\
rows = cypher(\"\"\"\n\
MATCH (s {{id: $id}})-[r]->(n{label})\n\
RETURN type(r) AS rel_type, count(DISTINCT n) AS count\n\
ORDER BY count DESC\n\
\"\"\", params={{'id': 'NODE_ID'}})\n\
print(rows)\n\
```"
    )
}

/// Fills the solver system prompt. Type lists come out sorted because the
/// description's collections are.
pub fn build_system_prompt(desc: &GraphDescription, code_examples: &str) -> String {
    let mut out = describe_graph(desc, code_examples);
    out.push_str(ANSWER_RULE);
    out
}

/// The graph description block without the output rule, newline-terminated.
pub fn describe_graph(desc: &GraphDescription, code_examples: &str) -> String {
    let mut out = String::new();
    match &desc.domain_label {
        Some(label) => out.push_str(&format!("You are given a {label} heterogeneous knowledge graph stored in Neo4j.\n")),
        None => out.push_str("You are given a heterogeneous knowledge graph stored in Neo4j.\n"),
    }
    out.push_str(" - Backend: Neo4j (Cypher)\n");
    if let Some(label) = &desc.domain_label {
        out.push_str(&format!(" - Label scope: :{label}\n"));
    }
    out.push_str(" - Node properties:\n");
    out.push_str(&format!("  - The dataset has these node_types: {}\n", py_list(&desc.node_types)));
    out.push_str(&format!(
        "  - each node_type has its own set of type-specific properties: {}\n",
        py_props(&desc.node_properties)
    ));
    out.push_str(&format!(
        "  - There are several types of edges (relationship type) in this graph: {}\n",
        py_list(&desc.edge_types)
    ));
    out.push_str(&format!(" - How to query in code: {code_examples}\n"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_keeps_answer_rule() {
        let g = PropertyGraph::from_records(vec![], vec![]).unwrap();
        let p = build_system_prompt(&GraphDescription::from_graph(&g), "x");
        assert!(p.contains("node_types: []"));
        assert!(p.ends_with(ANSWER_RULE));
    }
}
