//! Answer extraction, answer and clue rewards, group-relative advantages,
//! the clipped surrogate value and training-batch export.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::Trajectory;
use crate::graph::PropertyGraph;
use crate::quizzer::SupervisionTuple;

pub const DEFAULT_DELTA: f64 = 0.4;
pub const DEFAULT_GROUP_SIZE: usize = 8;

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("clue node {0:?} is not in the graph")]
    UnknownClue(String),
    #[error("clue list is empty")]
    NoClues,
    #[error("delta must be in (0, 1], got {0}")]
    Delta(f64),
    #[error("advantage group needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("tuple {trajectory_ref} has {got} rollouts, expected {expected}")]
    MissingRollouts {
        trajectory_ref: String,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

const ANSWER_OPEN: &str = "\\answer{";

/// Content of the last `\answer{...}` in `text`, trimmed. Braces inside the
/// wrapper must balance; an unclosed last wrapper counts as missing.
pub fn extract_answer(text: &str) -> Option<String> {
    let start = text.rfind(ANSWER_OPEN)? + ANSWER_OPEN.len();
    let mut depth = 1usize;
    for (i, c) in text[start..].char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(text[start..start + i].trim().to_string());
                }
            }
            _ => {}
        }
    }
    None
}

/// Answer of a trajectory: the wrapper in its final action, if any.
pub fn trajectory_answer(traj: &Trajectory) -> Option<String> {
    traj.last_action().and_then(|a| extract_answer(&a.text))
}

fn normalize_tokens(text: &str) -> Vec<String> {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Bag-of-tokens F1 after lowercasing and replacing punctuation by spaces.
pub fn token_f1(pred: &str, gold: &str) -> f64 {
    let p = normalize_tokens(pred);
    let g = normalize_tokens(gold);
    match (p.is_empty(), g.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    2.0 * common as f64 / (p.len() + g.len()) as f64
}

/// Fraction of clue nodes the trajectory touches. A clue is hit when its id
/// occurs verbatim in some step, or its name occurs in some step ignoring
/// case.
pub fn clue_reward(
    traj: &Trajectory,
    clue_nodes: &[String],
    graph: &PropertyGraph,
) -> Result<(f64, Vec<(String, bool)>), RewardError> {
    if clue_nodes.is_empty() {
        return Err(RewardError::NoClues);
    }
    let lowered: Vec<String> = traj.steps.iter().map(|s| s.text.to_lowercase()).collect();
    let mut hits = Vec::with_capacity(clue_nodes.len());
    for id in clue_nodes {
        let node = graph
            .node_by_id(id)
            .ok_or_else(|| RewardError::UnknownClue(id.clone()))?;
        let name = node.name.to_lowercase();
        let hit = traj.steps.iter().any(|s| s.text.contains(id.as_str()))
            || (!name.is_empty() && lowered.iter().any(|t| t.contains(&name)));
        hits.push((id.clone(), hit));
    }
    let n = hits.iter().filter(|(_, h)| *h).count();
    Ok((n as f64 / clue_nodes.len() as f64, hits))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub gated: bool,
    pub r_ans: f64,
    pub r_clue: f64,
    pub r_final: f64,
    pub delta: f64,
    pub clue_hits: Vec<(String, bool)>,
}

/// The three-regime rule: zero when gated, the answer reward when it
/// reaches `delta`, otherwise answer plus clue reward capped at `delta`.
pub fn case_reward(gated: bool, r_ans: f64, r_clue: f64, delta: f64) -> f64 {
    if gated {
        0.0
    } else if r_ans >= delta {
        r_ans
    } else {
        (r_ans + r_clue).min(delta)
    }
}

pub fn check_delta(delta: f64) -> Result<(), RewardError> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(RewardError::Delta(delta))
    }
}

pub fn combined_reward(
    traj: &Trajectory,
    gold: &str,
    clue_nodes: &[String],
    delta: f64,
    graph: &PropertyGraph,
) -> Result<RewardBreakdown, RewardError> {
    check_delta(delta)?;
    let (r_clue, clue_hits) = clue_reward(traj, clue_nodes, graph)?;
    let answer = trajectory_answer(traj);
    let gated = answer.is_none();
    let r_ans = answer.map_or(0.0, |a| token_f1(&a, gold));
    Ok(RewardBreakdown {
        gated,
        r_ans,
        r_clue,
        r_final: case_reward(gated, r_ans, r_clue, delta),
        delta,
        clue_hits,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageGroup {
    pub rewards: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub advantages: Vec<f64>,
}

/// Normalizes rewards within a group by the population standard deviation.
/// A group whose rewards are all equal gets zero advantages.
pub fn group_advantages(rewards: &[f64]) -> Result<AdvantageGroup, RewardError> {
    let n = rewards.len();
    if n < 2 {
        return Err(RewardError::GroupTooSmall(n));
    }
    if let Some(bad) = rewards.iter().find(|r| !r.is_finite()) {
        return Err(RewardError::InvalidArgument(format!("non-finite reward {bad}")));
    }
    let mean = rewards.iter().sum::<f64>() / n as f64;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    let constant = rewards.iter().all(|r| *r == rewards[0]);
    let advantages = if constant || std == 0.0 {
        vec![0.0; n]
    } else {
        rewards.iter().map(|r| (r - mean) / std).collect()
    };
    Ok(AdvantageGroup {
        rewards: rewards.to_vec(),
        mean,
        std: if constant { 0.0 } else { std },
        advantages,
    })
}

/// Mean clipped surrogate minus `beta` times the mean KL estimate.
pub fn surrogate_value(
    ratios: &[f64],
    advantages: &[f64],
    epsilon_low: f64,
    epsilon_high: f64,
    kl_estimates: &[f64],
    beta: f64,
) -> Result<f64, RewardError> {
    if ratios.len() != advantages.len() || ratios.len() != kl_estimates.len() {
        return Err(RewardError::LengthMismatch(format!(
            "{} ratios, {} advantages, {} KL estimates",
            ratios.len(),
            advantages.len(),
            kl_estimates.len()
        )));
    }
    if ratios.is_empty() {
        return Err(RewardError::InvalidArgument("empty inputs".into()));
    }
    if epsilon_low < 0.0 || epsilon_high < 0.0 || epsilon_low.is_nan() || epsilon_high.is_nan() {
        return Err(RewardError::InvalidArgument("clip epsilons must be non-negative".into()));
    }
    if beta.is_nan() || beta < 0.0 {
        return Err(RewardError::InvalidArgument("beta must be non-negative".into()));
    }
    let (lo, hi) = (1.0 - epsilon_low, 1.0 + epsilon_high);
    let n = ratios.len() as f64;
    let surrogate = ratios
        .iter()
        .zip(advantages)
        .map(|(&rho, &a)| {
            let unclipped = rho * a;
            let clipped = rho.max(lo).min(hi) * a;
            if clipped < unclipped {
                clipped
            } else {
                unclipped
            }
        })
        .sum::<f64>()
        / n;
    let kl = kl_estimates.iter().sum::<f64>() / n;
    if beta == 0.0 {
        Ok(surrogate)
    } else {
        Ok(surrogate - beta * kl)
    }
}

pub const BATCH_FORMAT: &str = "kgprobe-grpo-batch";
pub const BATCH_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchHeader {
    pub kind: String,
    pub format: String,
    pub version: u32,
    pub group_size: usize,
    pub delta: f64,
    pub groups: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRollout {
    pub trajectory: Trajectory,
    pub reward: RewardBreakdown,
    pub advantage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchGroup {
    pub kind: String,
    pub trajectory_ref: String,
    pub question: String,
    pub answer: String,
    pub clue_nodes: Vec<String>,
    pub rewards: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub rollouts: Vec<BatchRollout>,
}

/// Scores each tuple's rollout group and builds its batch record.
pub fn build_batch_group(
    tuple: &SupervisionTuple,
    rollouts: &[Trajectory],
    group_size: usize,
    delta: f64,
    graph: &PropertyGraph,
) -> Result<BatchGroup, RewardError> {
    if rollouts.len() != group_size {
        return Err(RewardError::MissingRollouts {
            trajectory_ref: tuple.trajectory_ref.clone(),
            expected: group_size,
            got: rollouts.len(),
        });
    }
    let rewards = rollouts
        .iter()
        .map(|t| combined_reward(t, &tuple.answer, &tuple.clue_nodes, delta, graph))
        .collect::<Result<Vec<_>, _>>()?;
    let finals: Vec<f64> = rewards.iter().map(|r| r.r_final).collect();
    let group = group_advantages(&finals)?;
    Ok(BatchGroup {
        kind: "group".into(),
        trajectory_ref: tuple.trajectory_ref.clone(),
        question: tuple.question.clone(),
        answer: tuple.answer.clone(),
        clue_nodes: tuple.clue_nodes.clone(),
        rewards: finals,
        mean: group.mean,
        std: group.std,
        rollouts: rollouts
            .iter()
            .zip(rewards)
            .zip(group.advantages)
            .map(|((t, reward), advantage)| BatchRollout {
                trajectory: t.clone(),
                reward,
                advantage,
            })
            .collect(),
    })
}

/// Writes the batch as JSON lines: a header record, then one group record
/// per tuple in input order. Rollouts are looked up by `trajectory_ref`.
pub fn export_training_batch<W: Write>(
    out: &mut W,
    tuples: &[SupervisionTuple],
    rollouts: &HashMap<String, Vec<Trajectory>>,
    group_size: usize,
    delta: f64,
    graph: &PropertyGraph,
) -> Result<BatchHeader, RewardError> {
    check_delta(delta)?;
    if group_size < 2 {
        return Err(RewardError::GroupTooSmall(group_size));
    }
    let groups = tuples
        .iter()
        .map(|t| {
            let r = rollouts.get(&t.trajectory_ref).map_or(&[][..], Vec::as_slice);
            build_batch_group(t, r, group_size, delta, graph)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let header = BatchHeader {
        kind: "header".into(),
        format: BATCH_FORMAT.into(),
        version: BATCH_VERSION,
        group_size,
        delta,
        groups: groups.len(),
    };
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    for g in &groups {
        serde_json::to_writer(&mut *out, g)?;
        out.write_all(b"\n")?;
    }
    Ok(header)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extract_answer_cases() {
        assert_eq!(extract_answer("so...\n\\answer{neuron projection}").as_deref(), Some("neuron projection"));
        assert_eq!(extract_answer("nothing"), None);
        assert_eq!(extract_answer("\\answer{a} text \\answer{b}").as_deref(), Some("b"));
        assert_eq!(extract_answer("\\answer{ {x, y} }").as_deref(), Some("{x, y}"));
        assert_eq!(extract_answer("\\answer{open"), None);
        assert_eq!(extract_answer("\\answer{}").as_deref(), Some(""));
    }

    #[test]
    fn f1_cases() {
        assert_eq!(token_f1("neuron projection", "neuron projection"), 1.0);
        assert_eq!(token_f1("a b", "b c"), 0.5);
        assert_eq!(token_f1("", "x"), 0.0);
        assert_eq!(token_f1("", "!!"), 1.0);
        assert_eq!(token_f1("Alzheimer's disease", "alzheimer s DISEASE"), 1.0);
        assert_eq!(token_f1("a a b", "a b b"), 2.0 * 2.0 / 6.0);
    }

    #[test]
    fn case_rule() {
        assert_eq!(case_reward(true, 1.0, 1.0, 0.4), 0.0);
        assert_eq!(case_reward(false, 0.6, 0.0, 0.4), 0.6);
        assert_eq!(case_reward(false, 0.2, 0.5, 0.4), 0.4);
        assert_eq!(case_reward(false, 0.4, 0.0, 0.4), 0.4);
        assert_eq!(case_reward(false, 0.1, 0.2, 0.4), 0.1 + 0.2);
    }

    #[test]
    fn advantages_example() {
        let g = group_advantages(&[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!((g.mean, g.std), (0.5, 0.5));
        assert_eq!(g.advantages, vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(group_advantages(&[0.3; 8]).unwrap().advantages, vec![0.0; 8]);
        assert!(group_advantages(&[1.0]).is_err());
    }

    #[test]
    fn surrogate_examples() {
        assert_eq!(surrogate_value(&[1.0, 1.0], &[1.0, -1.0], 0.2, 0.28, &[0.0, 0.0], 0.5).unwrap(), 0.0);
        assert_eq!(surrogate_value(&[2.0], &[1.0], 0.2, 0.2, &[0.0], 0.0).unwrap(), 1.2);
        assert_eq!(surrogate_value(&[1.0], &[0.0], 0.2, 0.2, &[3.0], 0.1).unwrap(), -0.1 * 3.0);
        assert!(surrogate_value(&[1.0], &[], 0.2, 0.2, &[0.0], 0.0).is_err());
    }
}
