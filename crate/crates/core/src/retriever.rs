//! Exact top-k node retrieval by cosine similarity over node names.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::PropertyGraph;
use crate::pyrepr::{py_float, py_str};

/// Dimension of [`TestEmbedder`] vectors.
pub const TEST_EMBEDDING_DIM: usize = 64;

/// Default `topk` of the retrieval tool.
pub const DEFAULT_TOPK: usize = 2;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding request failed: {0}")]
    Transport(String),
    #[error("embedding response malformed: {0}")]
    Malformed(String),
    #[error("embedder returned {got} vectors for {expected} inputs")]
    CountMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("embedding node {node_id:?}: {source}")]
    Embed {
        node_id: String,
        #[source]
        source: EmbedError,
    },
    #[error("node {node_id:?} embedded with dimension {got}, expected {expected}")]
    Dimension {
        node_id: String,
        expected: usize,
        got: usize,
    },
    #[error("node {node_id:?} has a zero or non-finite embedding")]
    Degenerate { node_id: String },
    #[error("query embedding failed: {0}")]
    Query(#[source] EmbedError),
    #[error("query embedded with dimension {got}, index has {expected}")]
    QueryDimension { expected: usize, got: usize },
    #[error("topk must be at least 1")]
    ZeroTopk,
}

/// Maps a batch of texts to a batch of vectors of one fixed dimension.
pub trait Embedder: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// Deterministic, network-free embedder: lowercased character 3-grams are
/// hashed (FNV-1a, 64-bit) into signed buckets and the sum is L2-normalized.
/// Texts shorter than three characters count as a single gram; an empty text
/// maps to the first basis vector.
#[derive(Debug, Clone, Copy, Default)]
pub struct TestEmbedder;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn test_embedding(text: &str) -> Vec<f64> {
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut v = vec![0.0; TEST_EMBEDDING_DIM];
    let grams: Vec<String> = if chars.len() < 3 {
        if chars.is_empty() {
            Vec::new()
        } else {
            vec![chars.iter().collect()]
        }
    } else {
        chars.windows(3).map(|w| w.iter().collect()).collect()
    };
    for g in grams {
        let h = fnv1a(g.as_bytes());
        let bucket = (h % TEST_EMBEDDING_DIM as u64) as usize;
        let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
        v[bucket] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        let mut e0 = vec![0.0; TEST_EMBEDDING_DIM];
        e0[0] = 1.0;
        return e0;
    }
    v.iter().map(|x| x / norm).collect()
}

impl Embedder for TestEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| test_embedding(t)).collect())
    }
}

/// Embeddings service speaking the common `/embeddings` JSON shape:
/// `{"model", "input": [...]}` answered by `{"data": [{"embedding": [...], "index"}]}`.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub max_retries: u32,
    pub batch_size: usize,
}

impl HttpEmbedder {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            max_retries: 3,
            batch_size: 256,
        }
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let body = serde_json::json!({ "model": self.model, "input": texts });
        let resp = crate::http::post_json(&self.endpoint, self.api_key.as_deref(), &body, self.max_retries)
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let data = resp
            .get("data")
            .and_then(|d| d.as_array())
            .ok_or_else(|| EmbedError::Malformed("missing `data` array".into()))?;
        let mut out: Vec<Option<Vec<f64>>> = vec![None; texts.len()];
        for (pos, item) in data.iter().enumerate() {
            let idx = item.get("index").and_then(|i| i.as_u64()).map_or(pos, |i| i as usize);
            let emb = item
                .get("embedding")
                .and_then(|e| e.as_array())
                .ok_or_else(|| EmbedError::Malformed("missing `embedding`".into()))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| EmbedError::Malformed("non-numeric component".into())))
                .collect::<Result<Vec<f64>, _>>()?;
            let slot = out
                .get_mut(idx)
                .ok_or_else(|| EmbedError::Malformed(format!("index {idx} out of range")))?;
            *slot = Some(emb);
        }
        let got = out.iter().filter(|v| v.is_some()).count();
        if got != texts.len() {
            return Err(EmbedError::CountMismatch {
                expected: texts.len(),
                got,
            });
        }
        Ok(out.into_iter().flatten().collect())
    }
}

impl Embedder for HttpEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.batch_size.max(1)) {
            out.extend(self.embed_batch(chunk)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub node_id: String,
    pub node_type: String,
    pub name: String,
    pub vector: Vec<f64>,
}

/// Unit vectors for every node name, in node-id order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmbeddingIndex {
    pub dimension: usize,
    pub entries: Vec<IndexEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalHit {
    pub node_id: String,
    pub node_type: String,
    /// Cosine similarity rounded to two decimals.
    pub score: f64,
    pub name: String,
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

pub fn build_index(graph: &PropertyGraph, embedder: &dyn Embedder) -> Result<EmbeddingIndex, IndexError> {
    if graph.is_empty() {
        return Ok(EmbeddingIndex::default());
    }
    let names: Vec<String> = graph.nodes().iter().map(|n| n.name.clone()).collect();
    let vectors = embedder.embed(&names).map_err(|source| IndexError::Embed {
        node_id: graph.node(0).id.clone(),
        source,
    })?;
    if vectors.len() != names.len() {
        return Err(IndexError::Embed {
            node_id: graph.node(vectors.len().min(names.len() - 1)).id.clone(),
            source: EmbedError::CountMismatch {
                expected: names.len(),
                got: vectors.len(),
            },
        });
    }
    let dimension = vectors[0].len();
    let mut entries = Vec::with_capacity(vectors.len());
    for (node, mut vector) in graph.nodes().iter().zip(vectors) {
        if vector.len() != dimension || dimension == 0 {
            return Err(IndexError::Dimension {
                node_id: node.id.clone(),
                expected: dimension,
                got: vector.len(),
            });
        }
        if !normalize(&mut vector) {
            return Err(IndexError::Degenerate {
                node_id: node.id.clone(),
            });
        }
        entries.push(IndexEntry {
            node_id: node.id.clone(),
            node_type: node.node_type.clone(),
            name: node.name.clone(),
            vector,
        });
    }
    Ok(EmbeddingIndex { dimension, entries })
}

/// Identifies the inputs an index was built from: the embedder and every
/// node's id and name, in order. A cached index is reusable iff this matches.
pub fn index_fingerprint(graph: &PropertyGraph, embedder_id: &str) -> String {
    let mut h = Sha256::new();
    h.update(embedder_id.as_bytes());
    h.update([0u8]);
    for n in graph.nodes() {
        h.update(n.id.as_bytes());
        h.update([0u8]);
        h.update(n.name.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// On-disk form of a built index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexCache {
    pub fingerprint: String,
    pub index: EmbeddingIndex,
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rounds a score to two decimals for reporting.
pub fn round_score(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

impl EmbeddingIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact top-k by unrounded cosine, ties broken by node id.
    pub fn search(&self, query: &[f64], topk: usize) -> Vec<RetrievalHit> {
        let mut scored: Vec<(f64, &IndexEntry)> = self
            .entries
            .iter()
            .map(|e| (cosine(query, &e.vector), e))
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.1.node_id.cmp(&b.1.node_id))
        });
        scored
            .into_iter()
            .take(topk)
            .map(|(s, e)| RetrievalHit {
                node_id: e.node_id.clone(),
                node_type: e.node_type.clone(),
                score: round_score(s),
                name: e.name.clone(),
            })
            .collect()
    }
}

pub fn retrieve(
    index: &EmbeddingIndex,
    queries: &[String],
    topk: usize,
    embedder: &dyn Embedder,
) -> Result<Vec<Vec<RetrievalHit>>, IndexError> {
    if topk == 0 {
        return Err(IndexError::ZeroTopk);
    }
    if index.is_empty() {
        return Ok(vec![Vec::new(); queries.len()]);
    }
    let vectors = embedder.embed(queries).map_err(IndexError::Query)?;
    if vectors.len() != queries.len() {
        return Err(IndexError::Query(EmbedError::CountMismatch {
            expected: queries.len(),
            got: vectors.len(),
        }));
    }
    vectors
        .into_iter()
        .map(|mut v| {
            if v.len() != index.dimension {
                return Err(IndexError::QueryDimension {
                    expected: index.dimension,
                    got: v.len(),
                });
            }
            if !normalize(&mut v) {
                return Ok(Vec::new());
            }
            Ok(index.search(&v, topk))
        })
        .collect()
}

/// Renders retrieval results in the tool-response shape:
/// `{'topk': 2, 'results': [[{'node_id': ..., 'node_type': ..., 'score': ..., 'name': ...}]]}`.
pub fn render_hits(topk: usize, results: &[Vec<RetrievalHit>]) -> String {
    let mut out = format!("{{'topk': {topk}, 'results': [");
    for (qi, hits) in results.iter().enumerate() {
        if qi > 0 {
            out.push_str(", ");
        }
        out.push('[');
        for (hi, h) in hits.iter().enumerate() {
            if hi > 0 {
                out.push_str(", ");
            }
            out.push_str(&format!(
                "{{'node_id': {}, 'node_type': {}, 'score': {}, 'name': {}}}",
                py_str(&h.node_id),
                py_str(&h.node_type),
                py_float(h.score),
                py_str(&h.name)
            ));
        }
        out.push(']');
    }
    out.push_str("]}");
    out
}

/// JSON form of retrieval results, same shape as [`render_hits`].
pub fn hits_json(topk: usize, results: &[Vec<RetrievalHit>]) -> serde_json::Value {
    serde_json::json!({
        "topk": topk,
        "results": results.iter().map(|hits| hits.iter().map(|h| serde_json::json!({
            "node_id": h.node_id,
            "node_type": h.node_type,
            "score": h.score,
            "name": h.name,
        })).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}
