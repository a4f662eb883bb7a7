//! In-memory heterogeneous property graph.
//!
//! Nodes and edges are loaded from line-delimited JSON files and indexed by
//! id, node type, edge type, and per-node adjacency split by direction and
//! edge type. The graph is immutable once built; every iteration order is
//! lexicographic by id so episode replays are bit-stable.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scalar property value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Bool(b) => write!(f, "{b}"),
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Float(x) => write!(f, "{x}"),
            Scalar::Str(s) => f.write_str(s),
        }
    }
}

pub type Properties = BTreeMap<String, Scalar>;

/// Property keys that shadow built-in node fields.
pub const RESERVED_NODE_KEYS: [&str; 2] = ["id", "name"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: String,
    pub node_type: String,
    pub name: String,
    #[serde(default)]
    pub properties: Properties,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub src: String,
    pub dst: String,
    pub edge_type: String,
    #[serde(default)]
    pub properties: Properties,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub node_types: BTreeMap<String, usize>,
    pub edge_types: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Out,
    In,
    Both,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: malformed record: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}:{line}: invalid record: {message}")]
    Invalid {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}:{line}: duplicate node id {id:?}")]
    DuplicateNode { file: String, line: usize, id: String },
    #[error("{file}:{line}: dangling endpoint {id:?}")]
    DanglingEndpoint { file: String, line: usize, id: String },
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
    #[error("graph is empty")]
    EmptyGraph,
}

/// Immutable property graph with lookup indexes.
#[derive(Debug, Clone, Default)]
pub struct PropertyGraph {
    /// Sorted by id; a node's position is its index.
    nodes: Vec<NodeRecord>,
    /// In load order; a position is the edge's identity.
    edges: Vec<EdgeRecord>,
    edge_src: Vec<usize>,
    edge_dst: Vec<usize>,
    id_index: HashMap<String, usize>,
    nodes_by_type: BTreeMap<String, Vec<usize>>,
    edges_by_type: BTreeMap<String, Vec<usize>>,
    /// Per node, edge type -> edge indices ordered by (neighbor id, edge index).
    out_adj: Vec<BTreeMap<String, Vec<usize>>>,
    in_adj: Vec<BTreeMap<String, Vec<usize>>>,
    domain_label: Option<String>,
}

/// Loads a graph from a nodes file and an edges file (one JSON object per line).
pub fn load_graph(nodes_path: &Path, edges_path: &Path) -> Result<PropertyGraph, GraphError> {
    let nodes_name = nodes_path.display().to_string();
    let edges_name = edges_path.display().to_string();
    let nodes: Vec<(usize, NodeRecord)> = read_records(nodes_path, &nodes_name)?;
    let edges: Vec<(usize, EdgeRecord)> = read_records(edges_path, &edges_name)?;
    PropertyGraph::build(nodes, edges, &nodes_name, &edges_name)
}

fn read_records<T: for<'de> Deserialize<'de>>(
    path: &Path,
    file: &str,
) -> Result<Vec<(usize, T)>, GraphError> {
    let handle = File::open(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(handle).lines().enumerate() {
        let line = line.map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| GraphError::Malformed {
            file: file.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, record));
    }
    Ok(out)
}

impl PropertyGraph {
    /// Builds a graph from in-memory records. Error line numbers refer to the
    /// 1-based position of the offending record.
    pub fn from_records(
        nodes: Vec<NodeRecord>,
        edges: Vec<EdgeRecord>,
    ) -> Result<PropertyGraph, GraphError> {
        let nodes = nodes.into_iter().enumerate().map(|(i, n)| (i + 1, n)).collect();
        let edges = edges.into_iter().enumerate().map(|(i, e)| (i + 1, e)).collect();
        Self::build(nodes, edges, "<nodes>", "<edges>")
    }

    fn build(
        nodes: Vec<(usize, NodeRecord)>,
        edges: Vec<(usize, EdgeRecord)>,
        nodes_file: &str,
        edges_file: &str,
    ) -> Result<PropertyGraph, GraphError> {
        let mut seen: HashMap<&str, usize> = HashMap::with_capacity(nodes.len());
        for (line, node) in &nodes {
            let invalid = |message: String| GraphError::Invalid {
                file: nodes_file.to_string(),
                line: *line,
                message,
            };
            if node.id.is_empty() {
                return Err(invalid("empty node id".into()));
            }
            if node.node_type.is_empty() {
                return Err(invalid(format!("empty node_type for {:?}", node.id)));
            }
            if let Some(key) = RESERVED_NODE_KEYS
                .iter()
                .find(|k| node.properties.contains_key(**k))
            {
                return Err(invalid(format!("reserved property key {key:?}")));
            }
            if seen.insert(node.id.as_str(), *line).is_some() {
                return Err(GraphError::DuplicateNode {
                    file: nodes_file.to_string(),
                    line: *line,
                    id: node.id.clone(),
                });
            }
        }
        drop(seen);

        let mut nodes: Vec<NodeRecord> = nodes.into_iter().map(|(_, n)| n).collect();
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let id_index: HashMap<String, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();

        let mut nodes_by_type: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            nodes_by_type.entry(n.node_type.clone()).or_default().push(i);
        }

        let mut edge_src = Vec::with_capacity(edges.len());
        let mut edge_dst = Vec::with_capacity(edges.len());
        let mut out_adj = vec![BTreeMap::<String, Vec<usize>>::new(); nodes.len()];
        let mut in_adj = vec![BTreeMap::<String, Vec<usize>>::new(); nodes.len()];
        let mut edges_by_type: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut edge_records = Vec::with_capacity(edges.len());
        for (line, edge) in edges {
            if edge.edge_type.is_empty() {
                return Err(GraphError::Invalid {
                    file: edges_file.to_string(),
                    line,
                    message: "empty edge_type".into(),
                });
            }
            let resolve = |id: &str| {
                id_index
                    .get(id)
                    .copied()
                    .ok_or_else(|| GraphError::DanglingEndpoint {
                        file: edges_file.to_string(),
                        line,
                        id: id.to_string(),
                    })
            };
            let s = resolve(&edge.src)?;
            let d = resolve(&edge.dst)?;
            let idx = edge_records.len();
            edge_src.push(s);
            edge_dst.push(d);
            out_adj[s].entry(edge.edge_type.clone()).or_default().push(idx);
            in_adj[d].entry(edge.edge_type.clone()).or_default().push(idx);
            edges_by_type.entry(edge.edge_type.clone()).or_default().push(idx);
            edge_records.push(edge);
        }
        // Node indices follow id order, so sorting by index sorts by neighbor id.
        for adj in &mut out_adj {
            for list in adj.values_mut() {
                list.sort_by_key(|&e| (edge_dst[e], e));
            }
        }
        for adj in &mut in_adj {
            for list in adj.values_mut() {
                list.sort_by_key(|&e| (edge_src[e], e));
            }
        }

        Ok(PropertyGraph {
            nodes,
            edges: edge_records,
            edge_src,
            edge_dst,
            id_index,
            nodes_by_type,
            edges_by_type,
            out_adj,
            in_adj,
            domain_label: None,
        })
    }

    /// Sets the label every node answers to in addition to its node type
    /// (e.g. `biomedical` in `MATCH (n:biomedical)`).
    pub fn with_domain_label(mut self, label: impl Into<String>) -> Self {
        let label = label.into();
        self.domain_label = if label.is_empty() { None } else { Some(label) };
        self
    }

    pub fn domain_label(&self) -> Option<&str> {
        self.domain_label.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Nodes in id order.
    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    /// Edges in load order.
    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn node(&self, idx: usize) -> &NodeRecord {
        &self.nodes[idx]
    }

    pub fn edge(&self, idx: usize) -> &EdgeRecord {
        &self.edges[idx]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    pub fn node_by_id(&self, id: &str) -> Option<&NodeRecord> {
        self.node_index(id).map(|i| &self.nodes[i])
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.id_index.contains_key(id)
    }

    /// Source and destination node indices of an edge.
    pub fn endpoints(&self, edge: usize) -> (usize, usize) {
        (self.edge_src[edge], self.edge_dst[edge])
    }

    /// Node indices of one type, in id order. Empty for unknown types.
    pub fn nodes_of_type(&self, node_type: &str) -> &[usize] {
        self.nodes_by_type
            .get(node_type)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn edges_of_type(&self, edge_type: &str) -> &[usize] {
        self.edges_by_type
            .get(edge_type)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn node_types(&self) -> impl Iterator<Item = &str> {
        self.nodes_by_type.keys().map(String::as_str)
    }

    pub fn edge_types(&self) -> impl Iterator<Item = &str> {
        self.edges_by_type.keys().map(String::as_str)
    }

    /// Outgoing edges of a node grouped by edge type.
    pub fn out_edges(&self, node: usize) -> &BTreeMap<String, Vec<usize>> {
        &self.out_adj[node]
    }

    pub fn in_edges(&self, node: usize) -> &BTreeMap<String, Vec<usize>> {
        &self.in_adj[node]
    }

    /// True when `label` names the node's type or the graph's domain label.
    pub fn has_label(&self, node: usize, label: &str) -> bool {
        self.nodes[node].node_type == label || self.domain_label.as_deref() == Some(label)
    }

    /// Adjacency entries of `node_id`, ordered by (edge type, neighbor id).
    /// With `Direction::Both`, an outgoing entry sorts before an incoming one
    /// for the same (edge type, neighbor); a self-loop appears once per side.
    pub fn neighbors(
        &self,
        node_id: &str,
        edge_type: Option<&str>,
        direction: Direction,
    ) -> Result<Vec<(&EdgeRecord, &NodeRecord)>, GraphError> {
        let v = self
            .node_index(node_id)
            .ok_or_else(|| GraphError::UnknownNode(node_id.to_string()))?;
        // (edge type, neighbor index, side, edge index)
        let mut entries: Vec<(&str, usize, u8, usize)> = Vec::new();
        let mut sides: Vec<(&BTreeMap<String, Vec<usize>>, u8)> = Vec::new();
        if matches!(direction, Direction::Out | Direction::Both) {
            sides.push((&self.out_adj[v], 0));
        }
        if matches!(direction, Direction::In | Direction::Both) {
            sides.push((&self.in_adj[v], 1));
        }
        for (adj, side) in sides {
            for (ty, list) in adj {
                if edge_type.is_some_and(|t| t != ty) {
                    continue;
                }
                for &e in list {
                    let other = if side == 0 { self.edge_dst[e] } else { self.edge_src[e] };
                    entries.push((ty.as_str(), other, side, e));
                }
            }
        }
        entries.sort();
        Ok(entries
            .into_iter()
            .map(|(_, other, _, e)| (&self.edges[e], &self.nodes[other]))
            .collect())
    }

    /// Two-stage seed sampling: a node type uniformly, then a node of that
    /// type uniformly. Node `v` is drawn with probability
    /// `1 / (|types| * |instances of type(v)|)`.
    pub fn sample_seed<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&str, GraphError> {
        if self.nodes.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        let types: Vec<&Vec<usize>> = self.nodes_by_type.values().collect();
        let members = types[rng.gen_range(0..types.len())];
        let idx = members[rng.gen_range(0..members.len())];
        Ok(&self.nodes[idx].id)
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            node_count: self.nodes.len(),
            edge_count: self.edges.len(),
            node_types: self
                .nodes_by_type
                .iter()
                .map(|(k, v)| (k.clone(), v.len()))
                .collect(),
            edge_types: self
                .edges_by_type
                .iter()
                .map(|(k, v)| (k.clone(), v.len()))
                .collect(),
        }
    }

    /// Property names per node type: `id`, `name`, then every key seen on
    /// any node of that type, sorted.
    pub fn node_type_properties(&self) -> BTreeMap<String, Vec<String>> {
        let mut out = BTreeMap::new();
        for (ty, members) in &self.nodes_by_type {
            let mut keys: std::collections::BTreeSet<&str> = Default::default();
            for &m in members {
                keys.extend(self.nodes[m].properties.keys().map(String::as_str));
            }
            let mut list = vec!["id".to_string(), "name".to_string()];
            list.extend(keys.into_iter().map(str::to_string));
            out.insert(ty.clone(), list);
        }
        out
    }
}
