use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{
    run_episode, run_script, ChatClient, DecodingOptions, Environment, GraphDescription, StepRole, Trajectory,
    CODE_INTERPRETER,
};
use crate::graph::PropertyGraph;

use super::objective::{AnswerType, ObjectiveSpec};
use super::prompt::build_quizzer_prompt;
use super::report::parse_report;
use super::SupervisionTuple;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    BudgetExhausted,
    UnparseableReport,
    DanglingClue,
    UnverifiableAnswer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizFailure {
    pub reason: FailureReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuizEpisode {
    pub trajectory: Trajectory,
    pub result: Result<SupervisionTuple, QuizFailure>,
}

#[derive(Debug, Error, PartialEq)]
pub enum QuizError {
    #[error("tool budget must be at least 1")]
    ZeroBudget,
    #[error("seed node {0:?} is not in the graph")]
    UnknownSeed(String),
    #[error("objective is inconsistent: hybrid patterns need two distinct base patterns")]
    InvalidObjective,
    #[error("episode aborted: {0}")]
    Aborted(String),
}

/// Runs one exploration episode and turns its report into a tuple. Only a
/// client failure is an error; every other unsuccessful ending is a
/// [`QuizFailure`] carried next to the trajectory.
#[allow(clippy::too_many_arguments)]
pub fn run_quiz_episode(
    client: &dyn ChatClient,
    env: &Environment,
    description: &GraphDescription,
    code_examples: &str,
    objective: &ObjectiveSpec,
    seed: &str,
    trajectory_ref: &str,
    budget: usize,
    options: DecodingOptions,
) -> Result<QuizEpisode, QuizError> {
    if budget == 0 {
        return Err(QuizError::ZeroBudget);
    }
    if !objective.is_valid() {
        return Err(QuizError::InvalidObjective);
    }
    let seed_node = env
        .graph
        .node_by_id(seed)
        .ok_or_else(|| QuizError::UnknownSeed(seed.to_string()))?;
    let prompt = build_quizzer_prompt(objective, description, code_examples, seed_node);
    let trajectory = run_episode(client, env, &prompt.user, budget, &prompt.system, options)
        .map_err(|_| QuizError::ZeroBudget)?;
    if trajectory.aborted {
        return Err(QuizError::Aborted(trajectory.abort_reason.clone().unwrap_or_default()));
    }
    let result = judge_episode(&trajectory, env, objective, seed, trajectory_ref);
    Ok(QuizEpisode { trajectory, result })
}

fn judge_episode(
    trajectory: &Trajectory,
    env: &Environment,
    objective: &ObjectiveSpec,
    seed: &str,
    trajectory_ref: &str,
) -> Result<SupervisionTuple, QuizFailure> {
    let fail = |reason, detail: String| QuizFailure { reason, detail };
    if trajectory.budget_exhausted {
        return Err(fail(
            FailureReason::BudgetExhausted,
            format!("no report after {} tool calls", trajectory.tool_calls()),
        ));
    }
    let last = trajectory.last_action().map_or("", |a| a.text.as_str());
    let report = parse_report(last).map_err(|e| fail(FailureReason::UnparseableReport, e.to_string()))?;
    if let Some(missing) = report.clue_nodes.iter().find(|id| !env.graph.contains_node(id)) {
        return Err(fail(FailureReason::DanglingClue, format!("clue node {missing:?} is not in the graph")));
    }
    verify_answer(trajectory, objective.answer_type, &report.answer, &env.graph)
        .map_err(|d| fail(FailureReason::UnverifiableAnswer, d))?;
    Ok(SupervisionTuple {
        question: report.question,
        answer: report.answer,
        clue_nodes: report.clue_nodes,
        objective: *objective,
        seed_node: seed.to_string(),
        trajectory_ref: trajectory_ref.to_string(),
    })
}

/// Code of the last code-interpreter call whose observation did not fail.
fn last_successful_code(trajectory: &Trajectory) -> Option<&str> {
    trajectory
        .steps
        .windows(2)
        .rev()
        .find_map(|pair| match (&pair[0].tool_call, &pair[1]) {
            (Some(call), obs) if pair[0].role == StepRole::Action && call.name == CODE_INTERPRETER && !obs.failed => {
                call.arguments.get("code").and_then(|c| c.as_str())
            }
            _ => None,
        })
}

fn numbers_in(text: &str) -> impl Iterator<Item = f64> + '_ {
    text.split(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == 'e' || c == 'E'))
        .filter_map(|t| t.parse::<f64>().ok())
}

/// Re-runs the trajectory's last successful script and checks that the
/// answer can be read off its output. Boolean answers are not checked.
pub fn verify_answer(
    trajectory: &Trajectory,
    answer_type: AnswerType,
    answer: &str,
    graph: &PropertyGraph,
) -> Result<(), String> {
    if answer_type == AnswerType::Boolean {
        return Ok(());
    }
    let code = last_successful_code(trajectory).ok_or("no successful code_interpreter call to verify against")?;
    let rerun = run_script(code, graph, usize::MAX);
    if rerun.failed {
        return Err(format!("verification script failed: {}", rerun.output));
    }
    let output = rerun.output.to_lowercase();
    let found = |item: &str| output.contains(&item.to_lowercase());
    match answer_type {
        AnswerType::Entity => {
            if !found(answer) {
                return Err(format!("answer {answer:?} not in the verification output"));
            }
        }
        AnswerType::Set => {
            let missing: Vec<&str> = answer.split(',').map(str::trim).filter(|s| !s.is_empty() && !found(s)).collect();
            if !missing.is_empty() {
                return Err(format!("set members {missing:?} not in the verification output"));
            }
        }
        AnswerType::Number => {
            let value: f64 = answer
                .trim()
                .replace(',', "")
                .parse()
                .map_err(|_| format!("answer {answer:?} is not a number"))?;
            if !numbers_in(&rerun.output).any(|x| x == value) {
                return Err(format!("number {answer} not in the verification output"));
            }
        }
        AnswerType::Boolean => {}
    }
    Ok(())
}
