//! Question synthesis by graph exploration.
//!
//! An episode is steered by an objective (answer type, query pattern,
//! difficulty) and a seed node, and ends with a report block that becomes a
//! supervision tuple once its clue nodes and answer check out against the
//! graph.

mod episode;
mod objective;
mod pipeline;
mod prompt;
mod report;

use serde::{Deserialize, Serialize};

pub use episode::{run_quiz_episode, verify_answer, FailureReason, QuizEpisode, QuizError, QuizFailure};
pub use objective::{
    sample_objective, AnswerType, Difficulty, ObjectiveSpec, ObjectiveWeights, QueryPattern, WeightsError,
    BASE_PATTERNS,
};
pub use pipeline::{
    dataset_stats, dedup_exact, filter_leakage, generate_dataset, read_dataset, read_id_list, write_dataset,
    DatasetError, DatasetStats, Draw, FailureLog, QuizConfig, QuizRun, DEFAULT_QUIZ_BUDGET,
};
pub use prompt::{build_quizzer_prompt, QuizPrompt};
pub use report::{parse_report, Report, ReportError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisionTuple {
    pub question: String,
    pub answer: String,
    pub clue_nodes: Vec<String>,
    pub objective: ObjectiveSpec,
    pub seed_node: String,
    pub trajectory_ref: String,
}
