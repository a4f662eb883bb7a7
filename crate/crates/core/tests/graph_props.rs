//! Graph store invariants: adjacency indexes agree with a linear scan, and
//! seed sampling follows the two-stage distribution.

use std::collections::BTreeMap;
use std::io::Write;

use kgprobe::graph::{load_graph, Direction, EdgeRecord, NodeRecord, PropertyGraph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn node(id: &str, ty: &str) -> NodeRecord {
    NodeRecord {
        id: id.into(),
        node_type: ty.into(),
        name: format!("name of {id}"),
        properties: Default::default(),
    }
}

#[test]
fn seed_sampling_passes_chi_square() {
    // Types of size 1, 2 and 5: a uniform-over-nodes sampler would fail badly.
    let mut nodes = vec![node("a0", "A")];
    nodes.extend((0..2).map(|i| node(&format!("b{i}"), "B")));
    nodes.extend((0..5).map(|i| node(&format!("c{i}"), "C")));
    let g = PropertyGraph::from_records(nodes.clone(), vec![]).unwrap();
    let sizes: BTreeMap<&str, f64> = [("A", 1.0), ("B", 2.0), ("C", 5.0)].into();

    let draws = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for _ in 0..draws {
        *counts.entry(g.sample_seed(&mut rng).unwrap().to_string()).or_default() += 1.0;
    }
    let stat: f64 = nodes
        .iter()
        .map(|n| {
            let expected = draws as f64 / (3.0 * sizes[n.node_type.as_str()]);
            let observed = counts.get(&n.id).copied().unwrap_or(0.0);
            (observed - expected).powi(2) / expected
        })
        .sum();
    let p = 1.0 - ChiSquared::new((nodes.len() - 1) as f64).unwrap().cdf(stat);
    assert!(p > 0.01, "chi-square {stat:.2}, p = {p:.4}");
}

#[test]
fn empty_graph_has_no_seed() {
    let g = PropertyGraph::from_records(vec![], vec![]).unwrap();
    assert!(g.sample_seed(&mut ChaCha8Rng::seed_from_u64(0)).is_err());
}

fn graph_strategy() -> impl Strategy<Value = (Vec<NodeRecord>, Vec<EdgeRecord>)> {
    (1usize..12).prop_flat_map(|n| {
        let nodes = prop::collection::vec(prop::sample::select(vec!["A", "B", "C"]), n).prop_map(|types| {
            types
                .iter()
                .enumerate()
                .map(|(i, t)| node(&format!("n{i}"), t))
                .collect::<Vec<_>>()
        });
        let edges = prop::collection::vec((0..n, 0..n, prop::sample::select(vec!["R", "S"])), 0..25).prop_map(
            |es| {
                es.into_iter()
                    .map(|(s, d, t)| EdgeRecord {
                        src: format!("n{s}"),
                        dst: format!("n{d}"),
                        edge_type: t.into(),
                        properties: Default::default(),
                    })
                    .collect::<Vec<_>>()
            },
        );
        (nodes, edges)
    })
}

proptest! {
    #[test]
    fn neighbors_agree_with_scan(
        (nodes, edges) in graph_strategy(),
        dir in prop::sample::select(vec![Direction::Out, Direction::In, Direction::Both]),
        ty in prop::option::of(prop::sample::select(vec!["R", "S", "T"])),
    ) {
        let g = PropertyGraph::from_records(nodes.clone(), edges.clone()).unwrap();
        for n in &nodes {
            let got = g.neighbors(&n.id, ty, dir).unwrap();
            let mut got: Vec<(String, String, String)> = got
                .iter()
                .map(|(e, m)| (e.edge_type.clone(), m.id.clone(), format!("{}>{}", e.src, e.dst)))
                .collect();
            let mut want = Vec::new();
            for e in &edges {
                if ty.is_some_and(|t| t != e.edge_type) {
                    continue;
                }
                let arrow = format!("{}>{}", e.src, e.dst);
                if dir != Direction::In && e.src == n.id {
                    want.push((e.edge_type.clone(), e.dst.clone(), arrow.clone()));
                }
                if dir != Direction::Out && e.dst == n.id {
                    want.push((e.edge_type.clone(), e.src.clone(), arrow));
                }
            }
            got.sort();
            want.sort();
            prop_assert_eq!(got, want);
        }
        prop_assert!(g.neighbors("missing", None, dir).is_err());
    }

    #[test]
    fn stats_and_type_index_agree_with_scan((nodes, edges) in graph_strategy()) {
        let g = PropertyGraph::from_records(nodes.clone(), edges.clone()).unwrap();
        let s = g.stats();
        prop_assert_eq!(s.node_count, nodes.len());
        prop_assert_eq!(s.edge_count, edges.len());
        for t in ["A", "B", "C"] {
            let want = nodes.iter().filter(|n| n.node_type == t).count();
            prop_assert_eq!(g.nodes_of_type(t).len(), want);
            prop_assert_eq!(s.node_types.get(t).copied().unwrap_or(0), want);
        }
        for t in ["R", "S"] {
            let want = edges.iter().filter(|e| e.edge_type == t).count();
            prop_assert_eq!(g.edges_of_type(t).len(), want);
        }
    }

    #[test]
    fn jsonl_load_round_trips((nodes, edges) in graph_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let np = dir.path().join("nodes.jsonl");
        let ep = dir.path().join("edges.jsonl");
        let mut f = std::fs::File::create(&np).unwrap();
        for n in &nodes {
            writeln!(f, "{}", serde_json::to_string(n).unwrap()).unwrap();
        }
        let mut f = std::fs::File::create(&ep).unwrap();
        for e in &edges {
            writeln!(f, "{}", serde_json::to_string(e).unwrap()).unwrap();
        }
        let loaded = load_graph(&np, &ep).unwrap();
        let built = PropertyGraph::from_records(nodes, edges).unwrap();
        prop_assert_eq!(loaded.stats(), built.stats());
        prop_assert_eq!(loaded.nodes(), built.nodes());
        prop_assert_eq!(loaded.edges(), built.edges());
    }
}

#[test]
fn dangling_edges_and_duplicate_ids_are_rejected() {
    let dangling = EdgeRecord {
        src: "a".into(),
        dst: "zz".into(),
        edge_type: "R".into(),
        properties: Default::default(),
    };
    assert!(PropertyGraph::from_records(vec![node("a", "A")], vec![dangling]).is_err());
    assert!(PropertyGraph::from_records(vec![node("a", "A"), node("a", "B")], vec![]).is_err());
}
