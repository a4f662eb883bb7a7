//! Brute-force cosine ranking over table-lookup embeddings.

use std::collections::HashMap;

use kgprobe::graph::{NodeRecord, PropertyGraph};
use kgprobe::retriever::{build_index, retrieve, EmbedError, Embedder};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Embeds by table lookup so the test controls every vector.
pub struct Table(pub HashMap<String, Vec<f64>>);

impl Embedder for Table {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| self.0[t].clone()).collect())
    }
}

pub fn graph_of(entries: &[(String, String)]) -> PropertyGraph {
    let nodes = entries
        .iter()
        .map(|(id, name)| NodeRecord {
            id: id.clone(),
            node_type: "T".into(),
            name: name.clone(),
            properties: Default::default(),
        })
        .collect();
    PropertyGraph::from_records(nodes, vec![]).unwrap()
}

pub fn brute_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn gaussian(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    // Box-Muller; continuous components make exact ties vanishingly rare.
    (0..dim)
        .map(|_| {
            let (u, v): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
            (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
        })
        .collect()
}

/// Compares `retrieve` with a full argsort on `cases` random indexes.
pub fn compare_random_cases(seed: u64, cases: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let dim = rng.gen_range(2..=16);
        let n = rng.gen_range(1..=40);
        let mut table = HashMap::new();
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(&mut rng);
        let entries: Vec<(String, String)> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| {
                let name = format!("name {i}");
                table.insert(name.clone(), gaussian(&mut rng, dim));
                (format!("id{id:03}"), name)
            })
            .collect();
        table.insert("query".into(), gaussian(&mut rng, dim));
        let emb = Table(table);
        let g = graph_of(&entries);
        let index = build_index(&g, &emb).map_err(|e| e.to_string())?;
        let topk = rng.gen_range(1..=n + 2);
        let hits = retrieve(&index, &["query".into()], topk, &emb).map_err(|e| e.to_string())?;

        let q = &emb.0["query"];
        let mut want: Vec<(f64, &str)> = entries
            .iter()
            .map(|(id, name)| (brute_cosine(q, &emb.0[name]), id.as_str()))
            .collect();
        want.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
        want.truncate(topk);

        let got: Vec<(&str, f64)> = hits[0].iter().map(|h| (h.node_id.as_str(), h.score)).collect();
        let ok = got.len() == want.len()
            && got
                .iter()
                .zip(&want)
                .all(|((gid, gs), (s, id))| gid == id && (gs - (s * 100.0).round() / 100.0).abs() < 1e-9);
        if !ok {
            return Err(format!("case {case}: got {got:?}, want {want:?}"));
        }
    }
    Ok(())
}
