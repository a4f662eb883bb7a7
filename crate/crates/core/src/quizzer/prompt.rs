use crate::agent::{describe_graph, GraphDescription};
use crate::graph::NodeRecord;

use super::objective::{AnswerType, Difficulty, ObjectiveSpec, QueryPattern};

const BASE: &str = include_str!("../../resources/quizzer/base.txt");
const REPORT: &str = include_str!("../../resources/quizzer/report.txt");

fn difficulty_block(d: Difficulty) -> &'static str {
    match d {
        Difficulty::Simple => include_str!("../../resources/quizzer/difficulty_simple.txt"),
        Difficulty::Medium => include_str!("../../resources/quizzer/difficulty_medium.txt"),
        Difficulty::Hard => include_str!("../../resources/quizzer/difficulty_hard.txt"),
    }
}

fn pattern_block(p: QueryPattern) -> &'static str {
    match p {
        QueryPattern::EntityCentric => include_str!("../../resources/quizzer/pattern_entity_centric.txt"),
        QueryPattern::ObjectFinding => include_str!("../../resources/quizzer/pattern_object_finding.txt"),
        QueryPattern::RelationshipDiscovery => {
            include_str!("../../resources/quizzer/pattern_relationship_discovery.txt")
        }
        QueryPattern::Verification => include_str!("../../resources/quizzer/pattern_verification.txt"),
        QueryPattern::Hybrid => include_str!("../../resources/quizzer/pattern_hybrid.txt"),
    }
}

fn answer_block(a: AnswerType) -> &'static str {
    match a {
        AnswerType::Entity => include_str!("../../resources/quizzer/answer_entity.txt"),
        AnswerType::Boolean => include_str!("../../resources/quizzer/answer_boolean.txt"),
        AnswerType::Number => include_str!("../../resources/quizzer/answer_number.txt"),
        AnswerType::Set => include_str!("../../resources/quizzer/answer_set.txt"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuizPrompt {
    pub system: String,
    pub user: String,
}

/// Assembles the quizzer prompt pair. Pure in its inputs.
pub fn build_quizzer_prompt(
    objective: &ObjectiveSpec,
    graph: &GraphDescription,
    code_examples: &str,
    seed: &NodeRecord,
) -> QuizPrompt {
    let mut blocks: Vec<&str> = vec![BASE.trim_end(), difficulty_block(objective.difficulty).trim_end()];
    blocks.push(pattern_block(objective.query_pattern).trim_end());
    if let Some((a, b)) = objective.hybrid_of {
        blocks.push(pattern_block(a).trim_end());
        blocks.push(pattern_block(b).trim_end());
    }
    blocks.push(answer_block(objective.answer_type).trim_end());
    let description = describe_graph(graph, code_examples);
    blocks.push(description.trim_end());
    blocks.push(REPORT.trim_end());
    let system = blocks.join("\n\n");

    let pattern = match objective.hybrid_of {
        Some((a, b)) => format!("hybrid ({a} then {b})"),
        None => objective.query_pattern.to_string(),
    };
    let user = format!(
        "Seed node:\n- id: {}\n- type: {}\n- name: {}\n\nObjective:\n- answer type: {}\n- query pattern: {}\n- difficulty: {}\n\n\
         Explore the graph starting from the seed node, then report one question with its answer and clue nodes.",
        seed.id, seed.node_type, seed.name, objective.answer_type, pattern, objective.difficulty
    );
    QuizPrompt { system, user }
}
