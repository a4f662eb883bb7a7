use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{default_code_examples, ChatClient, DecodingOptions, Environment, GraphDescription, Trajectory};
use crate::graph::{GraphError, PropertyGraph};
use crate::jsonl::{read_jsonl, JsonlError};

use super::episode::{run_quiz_episode, FailureReason, QuizError};
use super::objective::{sample_objective, ObjectiveSpec, ObjectiveWeights, WeightsError};
use super::SupervisionTuple;

pub const DEFAULT_QUIZ_BUDGET: usize = 10;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Weights(#[from] WeightsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Quiz(#[from] QuizError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("tuple {trajectory_ref}: {message}")]
    InvalidTuple { trajectory_ref: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizConfig {
    /// Number of tuples wanted.
    pub count: usize,
    pub seed: u64,
    pub budget: usize,
    pub weights: Option<ObjectiveWeights>,
    /// Episodes to try at most; all draws are made up front.
    pub max_attempts: usize,
    pub concurrency: usize,
    pub options: DecodingOptions,
}

impl QuizConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            budget: DEFAULT_QUIZ_BUDGET,
            weights: None,
            max_attempts: count.saturating_mul(4).max(1),
            concurrency: 1,
            options: DecodingOptions::default(),
        }
    }
}

/// One pre-drawn episode setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub trajectory_ref: String,
    pub objective: ObjectiveSpec,
    pub seed_node: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureLog {
    pub trajectory_ref: String,
    pub objective: ObjectiveSpec,
    pub seed_node: String,
    pub reason: FailureReason,
    pub detail: String,
    pub tool_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuizRun {
    pub tuples: Vec<SupervisionTuple>,
    pub failures: Vec<FailureLog>,
    /// Draws of the episodes actually run, in order.
    pub draws: Vec<Draw>,
    pub trajectories: Vec<(String, Trajectory)>,
}

fn make_draws(graph: &PropertyGraph, config: &QuizConfig) -> Result<Vec<Draw>, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.max_attempts)
        .map(|i| {
            let objective = sample_objective(&mut rng, config.weights.as_ref())?;
            let seed_node = graph.sample_seed(&mut rng)?.to_string();
            Ok(Draw {
                trajectory_ref: format!("quiz-{i:06}"),
                objective,
                seed_node,
            })
        })
        .collect()
}

/// Runs episodes over the pre-drawn setups until `count` tuples are made or
/// the draws run out. Results are taken in draw order, so the output does
/// not depend on `concurrency` for clients whose replies depend only on the
/// conversation.
pub fn generate_dataset(
    client: &dyn ChatClient,
    env: &Environment,
    config: &QuizConfig,
) -> Result<QuizRun, DatasetError> {
    if config.budget == 0 {
        return Err(QuizError::ZeroBudget.into());
    }
    let draws = make_draws(&env.graph, config)?;
    let description = GraphDescription::from_graph(&env.graph);
    let examples = default_code_examples(description.domain_label.as_deref());
    let mut run = QuizRun {
        tuples: Vec::new(),
        failures: Vec::new(),
        draws: Vec::new(),
        trajectories: Vec::new(),
    };
    if config.count == 0 {
        return Ok(run);
    }
    let workers = config.concurrency.max(1);
    for chunk in draws.chunks(workers) {
        let episodes: Vec<_> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|d| {
                    let (description, examples) = (&description, &examples);
                    scope.spawn(move || {
                        run_quiz_episode(
                            client,
                            env,
                            description,
                            examples,
                            &d.objective,
                            &d.seed_node,
                            &d.trajectory_ref,
                            config.budget,
                            config.options,
                        )
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("quiz worker panicked")).collect()
        });
        for (draw, episode) in chunk.iter().zip(episodes) {
            if run.tuples.len() == config.count {
                break;
            }
            let episode = episode?;
            run.draws.push(draw.clone());
            match episode.result {
                Ok(t) => run.tuples.push(t),
                Err(f) => run.failures.push(FailureLog {
                    trajectory_ref: draw.trajectory_ref.clone(),
                    objective: draw.objective,
                    seed_node: draw.seed_node.clone(),
                    reason: f.reason,
                    detail: f.detail,
                    tool_calls: episode.trajectory.tool_calls(),
                }),
            }
            run.trajectories.push((draw.trajectory_ref.clone(), episode.trajectory));
        }
        if run.tuples.len() == config.count {
            break;
        }
    }
    Ok(run)
}

/// Drops every tuple with a clue node in `test_node_ids`.
pub fn filter_leakage(
    dataset: Vec<SupervisionTuple>,
    test_node_ids: &HashSet<String>,
) -> (Vec<SupervisionTuple>, Vec<SupervisionTuple>) {
    dataset
        .into_iter()
        .partition(|t| t.clue_nodes.iter().all(|c| !test_node_ids.contains(c)))
}

fn normalized_question(q: &str) -> String {
    q.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Keeps the first tuple of each question, compared after lowercasing and
/// collapsing whitespace.
pub fn dedup_exact(dataset: Vec<SupervisionTuple>) -> Vec<SupervisionTuple> {
    let mut seen = HashSet::new();
    dataset
        .into_iter()
        .filter(|t| seen.insert(normalized_question(&t.question)))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: usize,
    pub answer_type: BTreeMap<String, usize>,
    pub query_pattern: BTreeMap<String, usize>,
    pub difficulty: BTreeMap<String, usize>,
    pub clue_count: BTreeMap<usize, usize>,
    /// Whitespace-token length of the question.
    pub question_tokens: BTreeMap<usize, usize>,
}

pub fn dataset_stats(dataset: &[SupervisionTuple]) -> DatasetStats {
    let mut s = DatasetStats {
        total: dataset.len(),
        ..Default::default()
    };
    for t in dataset {
        *s.answer_type.entry(t.objective.answer_type.to_string()).or_default() += 1;
        *s.query_pattern.entry(t.objective.query_pattern.to_string()).or_default() += 1;
        *s.difficulty.entry(t.objective.difficulty.to_string()).or_default() += 1;
        *s.clue_count.entry(t.clue_nodes.len()).or_default() += 1;
        *s.question_tokens.entry(t.question.split_whitespace().count()).or_default() += 1;
    }
    s
}

/// Loads a dataset and re-checks the tuple invariants against `graph`.
pub fn read_dataset(path: &Path, graph: &PropertyGraph) -> Result<Vec<SupervisionTuple>, DatasetError> {
    let tuples: Vec<SupervisionTuple> = read_jsonl(path)?;
    for t in &tuples {
        let invalid = |message: String| DatasetError::InvalidTuple {
            trajectory_ref: t.trajectory_ref.clone(),
            message,
        };
        if t.clue_nodes.is_empty() {
            return Err(invalid("empty clue list".into()));
        }
        if t.answer.trim().is_empty() {
            return Err(invalid("empty answer".into()));
        }
        if let Some(c) = t.clue_nodes.iter().find(|c| !graph.contains_node(c)) {
            return Err(invalid(format!("clue node {c:?} is not in the graph")));
        }
        if !t.objective.is_valid() {
            return Err(invalid("inconsistent objective".into()));
        }
    }
    Ok(tuples)
}

pub fn write_dataset(tuples: &[SupervisionTuple]) -> String {
    crate::jsonl::to_jsonl(tuples)
}

/// Reads a list of node ids, one per line; blank lines are skipped.
pub fn read_id_list(path: &Path) -> Result<BTreeSet<String>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}
